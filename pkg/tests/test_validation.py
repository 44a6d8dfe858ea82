import math

import numpy as np
import pytest

from shannon_bounds import dist_core as dc
from shannon_bounds import validation as v


@pytest.mark.parametrize("suite", ["tightness", "identities", "constructions"])
def test_fast_suites_pass(suite):
    results = v.run_suite(suite)
    assert results
    for r in results:
        assert r.suite == suite
        assert r.passed, r.line()
        assert r.count >= 1


def test_tightness_grids_are_large_enough():
    for r in v.run_suite("tightness"):
        assert r.count >= 20, r.name


def test_check_result_line():
    ok = v.CheckResult("s", "n", True, 1e-12, 1e-9, 5)
    assert ok.line() == "PASS  s/n: worst 1e-12 (tol 1e-09, 5 points)"
    assert v.CheckResult("s", "n", False, 1.0, 1e-9, 5).line().startswith("FAIL")


def test_result_fails_on_nan_or_empty():
    assert not v._result("s", "n", [0.0, math.nan], 1.0).passed
    assert not v._result("s", "n", [], 1.0).passed
    assert not v._result("s", "n", [1e-3], 1e-4, min_count=2).passed
    assert v._result("s", "n", [1e-5, -1e-5], 1e-4).passed


def test_excess():
    assert v._excess(0.5, 0.0, 1.0) == 0.0
    assert v._excess(-0.25, 0.0, 1.0) == 0.25
    assert v._excess(1.5, 0.0, 1.0) == 0.5


def test_corpus_contents():
    src = v.corpus()
    assert set(src) == {"gaussian", "uniform", "laplace", "mixture", "grid"}
    for s in src.values():
        assert dc.entropy_power(s) <= dc.variance(s) * (1 + 1e-12)
    assert v.k_sigma_for(src["laplace"]) > v.k_sigma_for(src["gaussian"])


def test_symmetric_joint_is_symmetric():
    g = v.symmetric_joint(129)
    c = g.covariance
    assert c[0, 0] == pytest.approx(c[1, 1], rel=1e-10)
    assert np.allclose(g.density, g.density.T)


def test_unknown_suite():
    with pytest.raises(KeyError):
        v.run_suite("everything")
