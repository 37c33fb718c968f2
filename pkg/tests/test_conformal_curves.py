import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from parabolic_scales.conformal_curves import (
    CurveState,
    arc_length,
    cc_residual,
    cc_residual_norms,
    conformal_circle_integrate,
    curve_derivative,
    eigencheck,
    eigencheck_norm,
    geodesic_integrate,
    hausdorff_distance,
    matched_data,
    projective_param_defect,
    rescale_to_geodesic,
    rescaled_acceleration,
    sphere_geodesic_point,
    stencil_weights,
    write_trajectory_csv,
)
from parabolic_scales.errors import DegenerateSampling, DimensionError
from parabolic_scales.metrics import flat, hyperbolic_ball, perturbed_diagonal, round_sphere
from parabolic_scales.riemann_engine import ConformalFactor, conformal_rescale

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([5, 7]))
def test_stencils_are_exact_for_polynomials(seed, width):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.uniform(0.05, 0.2, size=25))
    c = rng.normal(size=width)
    vals = np.polyval(c, t)
    exact = np.polyval(np.polyder(c), t)
    got = curve_derivative(t, vals, ends=True, width=width)
    assert np.allclose(got, exact, rtol=1e-7, atol=1e-7 * np.abs(exact).max())
    idx, w = stencil_weights(t, width=width)
    assert idx.shape == (23, width)
    assert np.allclose(w.sum(axis=1), 0.0, atol=1e-8 * np.abs(w).max())


def test_flat_circle_matches_closed_form_over_full_turn():
    m = flat(3)
    U, C = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    tr = conformal_circle_integrate(m, np.zeros(3), U, C, length=2 * np.pi, step=1e-3)
    s = tr.t[:, None]
    exact = U * np.sin(s) + C * (1 - np.cos(s))
    assert np.max(np.linalg.norm(tr.x - exact, axis=1)) < 1e-6
    assert tr.t[-1] == pytest.approx(2 * np.pi, abs=1e-14)
    assert np.linalg.norm(tr.x[-1]) < 1e-6


def test_sphere_geodesic_is_a_great_circle():
    m = round_sphere(3)
    st_ = CurveState.normalized(m, [0.2, -0.1, 0.0], [0.3, 1.0, -0.4])
    tr = geodesic_integrate(m, st_.x, st_.U, length=2.0, step=2e-3)
    exact = sphere_geodesic_point(tr.t, st_.x, st_.U)
    assert np.max(np.linalg.norm(tr.x - exact, axis=1)) < 1e-9


@pytest.mark.parametrize("m", [round_sphere(3), hyperbolic_ball(3)], ids=["sphere", "hyperbolic"])
def test_geodesics_of_einstein_metrics_are_conformal_circles(m):
    rng = np.random.default_rng(0)
    states = [CurveState.normalized(m, x, rng.normal(size=3))
              for x in m.sample_points(4, rng, shrink=0.2)]
    for tr in geodesic_integrate(m, states, length=0.5, step=2e-3):
        assert not tr.exited
        assert cc_residual_norms(m, tr).max() < 1e-6


def test_geodesic_defect_is_the_eigencheck():
    # for a geodesic the circle defect reduces to -(P U - P(U,U) U)
    m = perturbed_diagonal(4)
    rng = np.random.default_rng(4)
    st_ = CurveState.normalized(m, rng.uniform(-0.5, 0.5, 4), rng.normal(size=4))
    tr = geodesic_integrate(m, st_.x, st_.U, length=1.0, step=1e-3)
    E = cc_residual(m, tr)
    ec = eigencheck(m, tr.x[1:-1], tr.U[1:-1])
    assert np.abs(E + ec).max() < 1e-6
    assert eigencheck_norm(m, tr.x, tr.U).max() > 1e-2


def test_integrated_conformal_circles_have_small_residual_on_curved_metric():
    m = perturbed_diagonal(4)
    st_ = CurveState.normalized(m, [0.1, 0.2, 0.0, -0.1], [1.0, 0.5, 0.2, 0.0], [0.0, 0.3, 1.0, 0.0])
    tr = conformal_circle_integrate(m, st_.x, st_.U, st_.C, length=1.0, step=1e-3)
    assert cc_residual_norms(m, tr).max() < 1e-7
    assert tr.drift["max_speed_drift"] < 1e-9
    assert tr.drift["max_orthogonality_drift"] < 1e-9


def test_conformal_circles_are_conformally_invariant():
    m = round_sphere(3)
    omega = ConformalFactor(lambda x: np.exp(0.3 * x[0] - 0.2 * x[1] * x[2]), name="w")
    m_hat = conformal_rescale(m, omega)
    st_ = CurveState.normalized(m, [0.1, 0.0, 0.2], [1.0, 0.4, 0.0], [0.0, 0.5, 0.3])
    tr = conformal_circle_integrate(m, st_.x, st_.U, st_.C, length=1.0, step=2e-3)
    hat = matched_data(m, omega, st_)
    hat.check(m_hat)
    L = simpson(omega.values(tr.x), x=tr.t)
    tr_hat = conformal_circle_integrate(m_hat, hat.x, hat.U, hat.C, length=L, step=2e-3)
    assert hausdorff_distance(tr.dense_points(), tr_hat.dense_points()) < 1e-5


def test_projective_parameter_defect_vanishes_on_round_sphere_geodesics():
    m = round_sphere(3)
    x = np.array([[0.1, 0.2, 0.0]])
    U = np.array([[1.0, 0.0, 0.0]])
    U = U / np.sqrt(m.at(x[0])[0, 0])
    zero = np.zeros_like(U)
    # unit speed geodesic: C = dC = 0, so the defect is P(U, U) = 1/2
    assert projective_param_defect(m, x, U, zero, zero)[0] == pytest.approx(0.5)


def test_unit_circle_becomes_a_geodesic():
    m = flat(2)
    th = np.linspace(0, 2 * np.pi, 801)[:-1]
    pts = np.column_stack([np.cos(th), np.sin(th)])
    omega = rescale_to_geodesic(pts, closed=True)
    U = np.column_stack([-np.sin(th), np.cos(th)])
    acc = rescaled_acceleration(m, omega, pts, U, -pts)
    assert acc.max() < 1e-5
    # without the rescaling the acceleration is 1
    one = rescaled_acceleration(m, ConformalFactor(lambda x: 1.0 + 0.0 * x[0]), pts, U, -pts)
    assert np.allclose(one, 1.0)


def test_rescale_to_geodesic_input_checks():
    with pytest.raises(DimensionError):
        rescale_to_geodesic(np.zeros((10, 4)))
    with pytest.raises(DegenerateSampling):
        rescale_to_geodesic(np.zeros((4, 2)))


def test_hausdorff_and_arc_length_against_simple_shapes():
    s = np.linspace(0, 1, 11)
    A = np.column_stack([s, 0 * s])
    B = np.column_stack([s, 0 * s + 0.25])
    assert hausdorff_distance(A, B) == pytest.approx(0.25)
    # a vertex of one curve sits over the middle of a segment of the other
    C = np.column_stack([s[::2] + 0.05, 0 * s[::2]])
    assert hausdorff_distance(A[:-1], C[:-1]) == pytest.approx(0.05)
    th = np.linspace(0, 2 * np.pi, 4001)
    assert arc_length(np.column_stack([np.cos(th), np.sin(th)])) == pytest.approx(2 * np.pi, rel=1e-6)


def test_exit_from_chart_is_reported():
    m = hyperbolic_ball(3)
    tr = geodesic_integrate(m, np.zeros(3), np.array([0.5, 0, 0]), length=5.0, step=1e-2)
    assert tr.exited
    assert tr.t[-1] < 5.0


def test_bad_initial_data():
    m = flat(3)
    with pytest.raises(DimensionError):
        geodesic_integrate(m, np.zeros(2), np.array([1.0, 0]))
    with pytest.raises(DegenerateSampling):
        geodesic_integrate(m, np.array([9.0, 0, 0]), np.array([1.0, 0, 0]))
    with pytest.raises(DegenerateSampling):
        geodesic_integrate(m, np.zeros(3), np.array([2.0, 0, 0]))


def test_trajectory_csv(tmp_path):
    m = flat(3)
    tr = conformal_circle_integrate(m, np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
                                    length=0.1, step=0.01)
    path = tmp_path / "run.csv"
    write_trajectory_csv(path, tr, cc_residual_norms(m, tr))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "x1", "x2", "x3", "U1", "U2", "U3", "C1", "C2", "C3", "normE"]
    assert len(rows) == len(tr) + 1
    assert rows[1][-1] == "" and rows[2][-1] != ""
    assert np.allclose([float(v) for v in rows[-1][1:4]], tr.x[-1], rtol=0, atol=0)
    with pytest.raises(DimensionError):
        write_trajectory_csv(path, tr, np.zeros(3))
