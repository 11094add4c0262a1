"""Instance JSON documents.

One object per file::

    {"problem": "osp", "C": 5, "L": 1, "U": 10, "valuations": [...]}
    {"problem": "oap", "C_k": [2, 3], "bounds_k": [[1, 2], [1, 3]], "valuations": [[...], ...]}
    {"problem": "oscc", "L": 1, "U": 3, "cost": [0, 0, 1, 3], "valuations": [...]}

OAP bounds may also be given as per-item arrays ``"L": [...], "U": [...]``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Union

from .core import (
    Bounds,
    ConvexCost,
    DomainError,
    InstanceError,
    OapInstance,
    OsccInstance,
    OspInstance,
)

PROBLEMS = ("osp", "oap", "oscc")


class InstanceParseError(InstanceError):
    """Malformed instance document; ``line`` points into the source text when known."""

    def __init__(self, message: str, line: int = None, source: str = "<instance>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


def _line_of(text: str, key: str):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _require(doc: dict, key: str, text: str, source: str):
    if key not in doc:
        raise InstanceParseError(f"missing field {key!r}", None, source)
    return doc[key]


def _bounds(doc: dict) -> Bounds:
    return Bounds(float(doc["L"]), float(doc["U"]))


def _oap_bounds(doc: dict, K: int):
    if "bounds_k" in doc:
        pairs = doc["bounds_k"]
        return [Bounds(float(lo), float(hi)) for lo, hi in pairs]
    L, U = doc["L"], doc["U"]
    L = L if isinstance(L, list) else [L] * K
    U = U if isinstance(U, list) else [U] * K
    return [Bounds(float(lo), float(hi)) for lo, hi in zip(L, U, strict=True)]


def from_dict(doc: dict, text: str = "", source: str = "<instance>"):
    if not isinstance(doc, dict):
        raise InstanceParseError("top level must be a JSON object", 1, source)
    problem = _require(doc, "problem", text, source)
    if problem not in PROBLEMS:
        raise InstanceParseError(f"unknown problem {problem!r}", _line_of(text, "problem"), source)
    try:
        valuations = _require(doc, "valuations", text, source)
        if problem == "osp":
            return OspInstance(int(_require(doc, "C", text, source)), _bounds(doc), valuations)
        if problem == "oscc":
            return OsccInstance(ConvexCost(_require(doc, "cost", text, source)), _bounds(doc), valuations)
        caps = _require(doc, "C_k", text, source)
        return OapInstance(caps, _oap_bounds(doc, len(caps)), valuations)
    except InstanceParseError:
        raise
    except KeyError as exc:
        raise InstanceParseError(f"missing field {exc.args[0]!r}", None, source) from None
    except (InstanceError, DomainError, TypeError, ValueError) as exc:
        raise InstanceParseError(str(exc), _line_of(text, _focus(problem, doc, str(exc))), source) from None


def _focus(problem: str, doc: dict, message: str) -> str:
    """The document field a validation message is about."""
    if "valuation" in message:
        return "valuations"
    if "capacit" in message:
        return "C_k" if problem == "oap" else "C"
    if "cost" in message or "marginal" in message:
        return "cost"
    if problem == "oap" and "bounds_k" in doc:
        return "bounds_k"
    return "L"


def loads(text: str, source: str = "<instance>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, exc.lineno, source) from None
    return from_dict(doc, text, source)


def load(path: Union[str, Path]):
    path = Path(path)
    return loads(path.read_text(), str(path))


def to_dict(instance) -> dict:
    if isinstance(instance, OspInstance):
        b = instance.bounds
        return {"problem": "osp", "C": instance.capacity, "L": b.L, "U": b.U,
                "valuations": list(instance.valuations)}
    if isinstance(instance, OsccInstance):
        b = instance.bounds
        return {"problem": "oscc", "L": b.L, "U": b.U, "cost": list(instance.cost.cumulative),
                "valuations": list(instance.valuations)}
    if isinstance(instance, OapInstance):
        return {"problem": "oap", "C_k": list(instance.capacities),
                "bounds_k": [[b.L, b.U] for b in instance.bounds],
                "valuations": [list(row) for row in instance.valuations]}
    raise TypeError(f"not an instance: {type(instance).__name__}")


def dumps(instance) -> str:
    return json.dumps(to_dict(instance), separators=(",", ":")) + "\n"


def dump(instance, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(instance))
