"""Static and dynamic posted pricing for online selection and its variants."""

from .core import (
    Bounds,
    ConvexCost,
    DomainError,
    EvalReport,
    InstanceError,
    OapInstance,
    OsccInstance,
    OspInstance,
    Outcome,
    PriceLaw,
    cdf,
    eval_price,
    expected_price,
)

__version__ = "0.1.0"
