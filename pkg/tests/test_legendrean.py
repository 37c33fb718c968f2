import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import legendrean_rows_oracle
from parabolic_scales.errors import DimensionError, NormalizationError, SpecMismatch
from parabolic_scales.legendrean import (
    LegendreanDirection,
    LegendreanSample,
    bgg_trivial_scale,
    constraint_check,
    corollary_equivalence_probe,
    eigen_rows,
    einstein_scale_check,
    lambda_K,
    random_direction,
    single_violation_battery,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 5)


@settings(max_examples=50, deadline=None)
@given(seeds, dims)
def test_rows_and_lambda_match_index_form(seed, n):
    rng = np.random.default_rng(seed)
    s = LegendreanSample.random(n, rng)
    d = random_direction(n, rng)
    up, down, lam = legendrean_rows_oracle(s.P, s.A_lo, s.A_hi, d.U, d.V)
    row_U, row_V = eigen_rows(s, d)
    assert np.allclose(row_U, up, atol=1e-12)
    assert np.allclose(row_V, down, atol=1e-12)
    got_lam, K = lambda_K(s, d)
    assert got_lam == pytest.approx(lam, abs=1e-12)
    assert K == pytest.approx(d.U @ s.T_lo + d.V @ s.T_hi, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds, dims, st.floats(-3, 3))
def test_lambda_and_K_are_linear_in_the_curvature(seed, n, c):
    rng = np.random.default_rng(seed)
    s1, s2 = LegendreanSample.random(n, rng), LegendreanSample.random(n, rng)
    d = random_direction(n, rng)
    lam1, K1 = lambda_K(s1, d)
    lam2, K2 = lambda_K(s2, d)
    lam, K = lambda_K(s1 + c * s2, d)
    assert lam == pytest.approx(lam1 + c * lam2, abs=1e-9 * (1 + abs(lam1) + abs(c * lam2)))
    assert K == pytest.approx(K1 + c * K2, abs=1e-9 * (1 + abs(K1) + abs(c * K2)))


@settings(max_examples=50, deadline=None)
@given(seeds, dims, st.floats(-5, 5))
def test_pure_trace_data_distinguishes_every_direction(seed, n, lam):
    rng = np.random.default_rng(seed)
    s = LegendreanSample.einstein(n, lam)
    d = random_direction(n, rng)
    res = constraint_check(s, d)
    assert res.passed
    assert res.lam == pytest.approx(lam, abs=1e-9 * (1 + abs(lam)))
    passed, lam_out, extra = res
    assert extra["eigen"] < 1e-9


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4))
def test_einstein_scale_check_recovers_lambda(seed, n):
    rng = np.random.default_rng(seed)
    lam = rng.normal()
    res = einstein_scale_check([LegendreanSample.einstein(n, lam) for _ in range(3)])
    assert res.passed and res.lam == pytest.approx(lam, abs=1e-12)
    bad = einstein_scale_check([LegendreanSample.einstein(n, lam), LegendreanSample.einstein(n, lam + 1)])
    assert not bad.passed
    assert bad.lam_variation == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_every_single_violation_has_a_witness(n):
    battery = single_violation_battery(n)
    # P entries, both T legs, and symmetric A entries on both legs
    assert len(battery) == n * n + 2 * n + 2 * (n * (n + 1) // 2)
    for label, s in battery:
        r = corollary_equivalence_probe(s, trials=200, seed=1)
        assert r.consistent, label
        assert not r.einstein
        assert r.witness is not None and r.trials_run <= 200
        assert not constraint_check(s, r.witness).passed


@pytest.mark.parametrize("n", [2, 3])
def test_no_false_witness_on_pure_trace_data(n):
    r = corollary_equivalence_probe(LegendreanSample.einstein(n, 0.7), trials=200, seed=2)
    assert r.consistent and r.einstein
    assert r.false_witness is None and r.trials_run == 200


def test_trivial_scale_removes_a():
    rng = np.random.default_rng(0)
    s = LegendreanSample.random(3, rng)
    a_lo, a_hi = bgg_trivial_scale(s)
    assert np.allclose(a_lo, -s.A_lo) and np.allclose(a_hi, -s.A_hi)


def test_json_round_trip():
    rng = np.random.default_rng(1)
    s = LegendreanSample.random(3, rng)
    back = LegendreanSample.from_json(3, s.to_json())
    for key in ("P", "A_lo", "A_hi", "T_lo", "T_hi"):
        assert np.array_equal(getattr(back, key), getattr(s, key))


def test_input_validation():
    with pytest.raises(NormalizationError):
        LegendreanDirection(np.array([1.0, 0]), np.array([0.0, 1.0]))
    with pytest.raises(SpecMismatch):
        LegendreanSample(2, A_lo=np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DimensionError):
        LegendreanSample(2, P=np.eye(3))
    d = LegendreanDirection.normalized(np.array([2.0, 0.0]), np.array([1.0, 1.0]))
    assert d.U @ d.V == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        constraint_check(LegendreanSample.zero(3), d)
