import json
import math

import numpy as np
import pytest

from pricing_lab import Bounds, ConvexCost, DomainError, OapInstance, OsccInstance, OspInstance
from pricing_lab import harness, io

E = Bounds(1.0, math.e)


def test_single_buyer_at_floor_is_tight():
    rep = harness.evaluate(OspInstance(1, E, [1.0]))
    assert rep.ratio == rep.alpha and rep.stderr == 0.0 and rep.mode == "exact"


def test_oap_exact_is_unsupported():
    inst = OapInstance([1], [E], [(2.0,)])
    with pytest.raises(harness.UnsupportedModeError):
        harness.evaluate(inst, mode="exact")
    rep = harness.evaluate(inst, mode="mc", trials=1000, seed=3)
    assert rep.mode == "mc" and rep.stderr > 0


def test_oap_single_item_agrees_with_osp():
    values = np.random.default_rng(3).uniform(1.0, math.e, 12).tolist()
    mc = harness.evaluate(OapInstance([3], [E], [(v,) for v in values]), mode="mc", trials=100_000, seed=3)
    # the single-item law differs from the OSP law, so compare MC against the same law exactly
    from pricing_lab import oap, osp
    exact = osp.exact_expected(OspInstance(3, E, values), oap.build_item_law(E))
    assert abs(mc.expected - exact.expected) <= 3 * mc.stderr


def test_zero_cost_oscc_report_matches_osp():
    values = [1.0, 4.0, 2.5, 9.0]
    b = Bounds(1.0, 10.0)
    a = harness.evaluate(OsccInstance(ConvexCost.zero(2), b, values))
    r = harness.evaluate(OspInstance(2, b, values))
    assert a.expected == pytest.approx(r.expected, rel=1e-12)
    assert (a.opt, a.alpha) == (r.opt, r.alpha)


def test_evaluate_reads_files(tmp_path):
    path = tmp_path / "i.json"
    io.dump(OspInstance(2, E, [1.0, 2.0]), path)
    assert harness.evaluate(path).opt == 3.0
    path.write_text('{"problem": "osp",\n "C": 2,\n "L": 1, "U": 3,\n "valuations": [4]}')
    with pytest.raises(io.InstanceParseError) as err:
        harness.evaluate(str(path))
    assert err.value.line == 4


def test_evaluate_rejects_bad_arguments():
    inst = OspInstance(1, E, [1.0])
    for kwargs in ({"algo": "greedy"}, {"objective": "profit"}, {"mode": "sim"},
                   {"mode": "mc", "trials": 0}):
        with pytest.raises(DomainError):
            harness.evaluate(inst, **kwargs)


def test_dynamic_reports_are_deterministic():
    rep = harness.evaluate(OspInstance(3, Bounds(1.0, 10.0), [1.0, 5.0, 10.0]), "dynamic")
    assert rep.mode == "deterministic" and rep.passed
    oap_rep = harness.evaluate(OapInstance([2], [E], [(2.0,)] * 3), "dynamic")
    assert oap_rep.passed is None


def test_report_json_is_stable():
    inst = OspInstance(2, Bounds(1.0, 10.0), [1.0, 3.0, 7.0])
    a = harness.report_json(harness.evaluate(inst, mode="mc", trials=5000, seed=11))
    b = harness.report_json(harness.evaluate(inst, mode="mc", trials=5000, seed=11))
    assert a == b
    assert json.loads(a)["seed"] == 11


def test_ratio_table_header_and_known_rows():
    rows = harness.ratio_table([1.0, math.e, 10.0], [1, 5, "inf"])
    text = harness.table_csv(rows)
    assert text.splitlines()[0] == "theta,C,alpha_static,alpha_dynamic_C,alpha_oap,alpha_oscc_example"
    by = {(r.theta, r.C): r for r in rows}
    assert by[(10.0, math.inf)].alpha_static == pytest.approx(3.302585092994046, rel=1e-15)
    assert by[(10.0, 1)].alpha_dynamic_C == pytest.approx(10.0, abs=1e-10)
    assert by[(math.e, 5)].alpha_oap == pytest.approx(2.310233335522733, rel=1e-10)
    assert by[(1.0, 1)].alpha_static == 1.0 and by[(1.0, 5)].alpha_dynamic_C == 1.0
    assert text.splitlines()[-1].split(",")[1] == "inf"


def test_ratio_table_orderings():
    thetas = [1.2, 2.0, math.e, 5.0, 10.0, 100.0]
    caps = [1, 2, 5, 10, 100, 1000]
    rows = harness.ratio_table(thetas, caps)
    for theta in thetas:
        line = [r for r in rows if r.theta == theta]
        dyn = [r.alpha_dynamic_C for r in line]
        assert all(b <= a for a, b in zip(dyn, dyn[1:]))
        # strict once the ratio leaves the plateau at theta
        assert all(b < a for a, b in zip(dyn, dyn[1:]) if a < theta)
        assert all(r.alpha_static <= r.alpha_dynamic_C for r in line)
        # the OAP ratio sits above the single-item static ratio for every theta
        assert all(r.alpha_oap > r.alpha_static for r in line)
    firsts = [r for r in rows if r.C == 1]
    for a, b in zip(firsts, firsts[1:]):
        assert b.alpha_static > a.alpha_static and b.alpha_oap > a.alpha_oap


def test_dynamic_ratio_plateau_at_small_capacity():
    # C = 2, theta = 2: gamma = 1 and (1 + 2/2)^1 = 2*2/(1*2), so alpha = theta exactly
    rows = harness.ratio_table([2.0, 1.2], [1, 2, 3, 6, 7])
    assert [r.alpha_dynamic_C for r in rows[:2]] == [2.0, 2.0]
    assert rows[2].alpha_dynamic_C < 2.0
    # theta = 1.2: C <= 5 has gamma = C, so 1 = theta/alpha; C = 6 sits on the
    # bracket edge where gamma = 5 gives (1 + 1.2/6)^1 = 6*1.2/(5*1.2) at alpha = theta
    assert [r.alpha_dynamic_C for r in rows[5:9]] == [1.2] * 4
    assert rows[9].alpha_dynamic_C < 1.2


def test_ratio_table_rejects_bad_input():
    with pytest.raises(DomainError):
        harness.ratio_table([0.5], [1])
    with pytest.raises(DomainError):
        harness.parse_capacity(0)


SMALL = {
    "seed": 7,
    "suites": [
        {"name": "osp", "kind": "osp_static", "instances": 20, "thetas": [2, 10], "capacities": [1, 5]},
        {"name": "dyn", "kind": "osp_dynamic", "instances": 10},
        {"name": "leg", "kind": "single_leg", "instances": 20},
        {"name": "oap", "kind": "oap_static", "instances": 4, "trials": 2000},
        {"name": "flow", "kind": "oap_offline", "instances": 20},
        {"name": "oscc", "kind": "oscc_static", "instances": 20},
        {"name": "worst", "kind": "oscc_det_worst", "m": 100, "rel_tol": 0.05},
    ],
}


def test_certify_small_config_passes(tmp_path):
    status, results = harness.certify_suite(SMALL, tmp_path / "bundle", threads=2)
    assert status == 0, harness.summary_csv(results)
    files = sorted(p.name for p in (tmp_path / "bundle").iterdir())
    assert files[0] == "00-osp.jsonl" and "summary.csv" in files
    lines = (tmp_path / "bundle" / "00-osp.jsonl").read_text().splitlines()
    assert len(lines) == 80 and all(json.loads(l)["passed"] for l in lines)


def test_certify_is_thread_independent(tmp_path):
    _, one = harness.certify_suite(SMALL, tmp_path / "a", threads=1)
    _, many = harness.certify_suite(SMALL, tmp_path / "b", threads=4)
    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()
    for name in ("00-osp.jsonl", "03-oap.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_zero_slack_monte_carlo_is_flagged_statistical(tmp_path):
    config = {"seed": 7, "suites": [
        {"name": "tight", "kind": "osp_mc", "family": "floor", "instances": 40, "trials": 2000, "sigmas": 0},
        {"name": "exact", "kind": "osp_tightness", "C": 5, "theta": 10, "m": 50, "min_fraction": 0.9},
    ]}
    status, results = harness.certify_suite(config, tmp_path)
    assert status == 1
    tight, exact = results
    assert tight.violations > 0 and tight.status == "statistical-fail"
    assert exact.status == "pass"
    config["suites"][0]["sigmas"] = 3
    assert harness.certify_suite(config, tmp_path)[0] == 0


def test_exact_failure_is_not_statistical(tmp_path):
    config = {"seed": 1, "suites": [{"name": "t", "kind": "osp_tightness", "C": 5, "theta": 10,
                                     "m": 50, "min_fraction": 1.01}]}
    status, (res,) = harness.certify_suite(config, tmp_path)
    assert status == 1 and res.status == "fail"


def test_config_validation(tmp_path):
    with pytest.raises(harness.ConfigError):
        harness.validate_config({"suites": [{"kind": "nope"}]})
    with pytest.raises(harness.ConfigError):
        harness.validate_config({"suites": [{"kind": "osp_static", "name": "a"},
                                            {"kind": "osp_dynamic", "name": "a"}]})
    with pytest.raises(harness.ConfigError):
        harness.validate_config([])
    bad = tmp_path / "c.json"
    bad.write_text('{"suites": [\n  {"kind": }\n]}')
    with pytest.raises(harness.ConfigError, match=":2:"):
        harness.load_config(bad)
    cfg = harness.validate_config({"seed": 3, "suites": [{"kind": "osp_static"}]})
    assert cfg["suites"][0]["seed"] == 3 and cfg["suites"][0]["name"] == "osp_static-0"


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv(harness.THREADS_ENV, "3")
    assert harness.thread_count() == 3
    monkeypatch.setenv(harness.THREADS_ENV, "0")
    assert harness.thread_count() >= 1
    monkeypatch.setenv(harness.THREADS_ENV, "many")
    with pytest.raises(harness.ConfigError):
        harness.thread_count()
