import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_scales.conformal_curves import (
    CurveState,
    cc_residual,
    conformal_circle_integrate,
    curve_derivative,
    forced_curve_integrate,
    geodesic_integrate,
)
from parabolic_scales.errors import DimensionError
from parabolic_scales.metrics import flat, perturbed_diagonal, round_sphere
from parabolic_scales.tractor import (
    CurveGeometry,
    Tractor,
    TractorEndo,
    _spanning_fields,
    acceleration_defect,
    appendix_defect,
    circle_conditions_residual,
    closure_defect,
    endo_apply,
    endo_from_matrix,
    endo_matrix,
    endo_parameters,
    s_frame_circle,
    s_frame_geodesic,
    tractor_derivative,
    tractor_inner,
    transport_defect,
)

seeds = st.integers(0, 2**32 - 1)


def _spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + n * np.eye(n)


def _random_endo(rng, g):
    n = len(g)
    S = rng.normal(size=(n, n))
    S = S - S.T
    return TractorEndo(rng.normal(size=n), np.linalg.inv(g) @ S, rng.normal(), rng.normal(size=n))


def _random_tractor(rng, n):
    return Tractor(rng.normal(), rng.normal(size=n), rng.normal())


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 5))
def test_adjoint_tractors_preserve_the_tractor_metric(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    phi = _random_endo(rng, g)
    T1, T2 = _random_tractor(rng, n), _random_tractor(rng, n)
    lhs = tractor_inner(endo_apply(phi, T1, g), T2, g) + tractor_inner(T1, endo_apply(phi, T2, g), g)
    assert abs(lhs) < 1e-10 * (1 + abs(tractor_inner(T1, T2, g)))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_endo_matrix_round_trip(seed):
    rng = np.random.default_rng(seed)
    g = _spd(rng, 3)
    phi = _random_endo(rng, g)
    back = endo_from_matrix(endo_matrix(phi, g), g)
    assert np.allclose(endo_parameters(back, g), endo_parameters(phi, g), atol=1e-10)
    T = _random_tractor(rng, 3)
    direct = endo_apply(phi, T, g).as_array()
    assert np.allclose(endo_matrix(phi, g) @ T.as_array(), direct, atol=1e-10)


def _geodesic(m, seed, length=1.0, step=1e-3):
    rng = np.random.default_rng(seed)
    st_ = CurveState.normalized(m, m.sample_points(1, rng, shrink=0.15)[0], rng.normal(size=m.n))
    return geodesic_integrate(m, st_.x, st_.U, length=length, step=step)


def test_tractor_connection_is_metric():
    # d/dt <T1, T2> = <D T1, T2> + <T1, D T2> for arbitrary smooth tractor fields
    m = perturbed_diagonal(4)
    tr = _geodesic(m, 1)
    t = tr.t
    T1 = Tractor(np.sin(t), np.column_stack([np.cos(k * t) for k in range(1, 5)]), t**2)
    T2 = Tractor(1 + t, np.column_stack([t**k for k in range(4)]), np.exp(-t))
    geom = CurveGeometry.of(m, tr)
    D1, D2 = tractor_derivative(m, tr, T1, geom), tractor_derivative(m, tr, T2, geom)
    inner = tractor_inner(T1, T2, m.at(tr.x))
    d_inner = curve_derivative(t, inner)
    g_in = m.at(tr.x[1:-1])
    T1i = Tractor(T1.sigma[1:-1], T1.mu[1:-1], T1.rho[1:-1])
    T2i = Tractor(T2.sigma[1:-1], T2.mu[1:-1], T2.rho[1:-1])
    rhs = tractor_inner(D1, T2i, g_in) + tractor_inner(T1i, D2, g_in)
    assert np.abs(d_inner - rhs).max() < 1e-8


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(3, 5))
def test_model_frame_satisfies_the_circle_conditions(seed, n):
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    U = rng.normal(size=n)
    U /= np.sqrt(U @ g @ U)
    C = rng.normal(size=n)
    C -= (U @ g @ C) * U
    frame = s_frame_circle(U, C, g=g)
    assert frame.dim == 3 + (n - 1) * (n - 2) // 2
    assert frame.constraint_residual() < 1e-10
    assert np.linalg.matrix_rank(frame.parameter_matrix(), tol=1e-8) == frame.dim
    assert circle_conditions_residual(_random_endo(rng, g), U, C, g) > 1e-3


def test_model_frame_input_checks():
    with pytest.raises(DimensionError):
        s_frame_geodesic([2.0, 0.0, 0.0])
    with pytest.raises(DimensionError):
        s_frame_circle([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])


def test_spanning_fields_span_the_model_frame():
    m = perturbed_diagonal(4)
    tr = _geodesic(m, 2, length=0.2)
    geom = CurveGeometry.of(m, tr)
    fields = _spanning_fields(geom)
    for k in (0, len(tr) // 2, len(tr) - 1):
        g = geom.g[k]
        span = np.stack([endo_parameters(TractorEndo(f.X[k], f.F[k], f.lam[k], f.Y[k]), g)
                         for f in fields], axis=1)
        frame = s_frame_geodesic(tr.U[k], g=g).parameter_matrix()
        r = np.linalg.matrix_rank(span, tol=1e-9)
        assert r == frame.shape[1]
        assert np.linalg.matrix_rank(np.hstack([span, frame]), tol=1e-9) == r


def test_closure_defect_separates_einstein_from_non_einstein():
    sphere = round_sphere(3)
    assert closure_defect(sphere, _geodesic(sphere, 3)).max() < 1e-6
    bent = perturbed_diagonal(4)
    assert closure_defect(bent, _geodesic(bent, 3)).max() > 1e-3


def test_transport_cross_check_agrees_with_closure():
    sphere = round_sphere(3)
    assert transport_defect(sphere, _geodesic(sphere, 4)) < 1e-6
    bent = perturbed_diagonal(4)
    assert transport_defect(bent, _geodesic(bent, 4)) > 1e-3


@pytest.mark.parametrize("m", [flat(3), round_sphere(3)], ids=["flat", "sphere"])
def test_appendix_defect_equals_circle_residual(m):
    rng = np.random.default_rng(8)
    A = 0.3 * rng.normal(size=(3, 3))
    forcing = lambda x, U: 0.5 + x @ A.T
    st_ = CurveState.normalized(m, [0.1, 0.0, -0.1], [1.0, 0.3, 0.2], [0.0, 0.4, 0.1])
    tr = forced_curve_integrate(m, [st_], forcing, length=1.0, step=1e-3)[0]
    E = cc_residual(m, tr)
    assert np.abs(E).max() > 1e-2
    assert np.abs(appendix_defect(m, tr) - E).max() < 1e-6


def test_acceleration_defect_detects_wrong_acceleration():
    m = round_sphere(3)
    st_ = CurveState.normalized(m, [0.1, 0.2, 0.0], [1.0, 0.0, 0.5], [0.0, 0.7, 0.0])
    tr = conformal_circle_integrate(m, st_.x, st_.U, st_.C, length=0.5, step=1e-3)
    assert np.abs(acceleration_defect(m, tr, tr.C)).max() < 1e-7
    assert np.abs(acceleration_defect(m, tr, np.zeros_like(tr.C))).max() > 0.1
