import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import curvature_oracle
from parabolic_scales import jets
from parabolic_scales.errors import DimensionError, SingularMetric
from parabolic_scales.metrics import (
    flat,
    fubini_study,
    get_metric,
    hyperbolic_ball,
    perturbed_diagonal,
    polynomial_metric,
    round_sphere,
)
from parabolic_scales.riemann_engine import (
    ChartMetric,
    ConformalFactor,
    christoffel,
    connection_rescale_check,
    conformal_rescale,
    curvature,
    einstein_check,
    kulkarni_nomizu_schouten,
    schouten_rescale_residual,
)

seeds = st.integers(0, 2**32 - 1)


def _warped():
    def g(x):
        return jets.matrix([[1 + x[1] ** 2, x[0] * x[2] / 3, 0.0],
                            [x[0] * x[2] / 3, 2 + x[0] ** 2, x[1] / 4],
                            [0.0, x[1] / 4, 1 + x[2] ** 2 / 2]])
    return ChartMetric(3, g, name="warped", domain_hint=(-0.8, 0.8))


CASES = [("sphere", 3, lambda: round_sphere(3)), ("sphere", 4, lambda: round_sphere(4)),
         ("perturbed", 4, lambda: perturbed_diagonal(4)), ("warped", 3, _warped)]


@pytest.mark.parametrize("kind,n,factory", CASES, ids=[f"{k}{n}" for k, n, _ in CASES])
def test_curvature_matches_symbolic_oracle(kind, n, factory):
    m = factory()
    rng = np.random.default_rng(5)
    for x in m.sample_points(3, rng, shrink=0.5):
        ref = curvature_oracle(kind, n, x)
        pack = curvature(m, x)
        assert np.allclose(pack.gamma, ref["gamma"], atol=1e-11)
        lowered = np.einsum("ce,edab->abcd", ref["g"], ref["riemann_up"])
        assert np.allclose(pack.riemann, lowered, atol=1e-10)
        assert np.allclose(pack.ricci, ref["ricci"], atol=1e-10)
        assert np.isclose(pack.scalar, ref["scalar"], atol=1e-10)
        assert np.allclose(pack.schouten, ref["schouten"], atol=1e-10)


def test_batch_and_single_point_agree():
    m = perturbed_diagonal(4)
    pts = m.sample_points(5, np.random.default_rng(0), shrink=0.5)
    batch = curvature(m, pts)
    for k, x in enumerate(pts):
        assert np.allclose(curvature(m, x).riemann, batch.riemann[k], atol=1e-13)


def test_unit_sphere_curvature_and_schouten():
    m = round_sphere(3)
    x = np.array([0.2, -0.1, 0.3])
    pack = curvature(m, x)
    g = pack.g
    model = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    assert np.allclose(pack.riemann, model, atol=1e-12)
    assert np.allclose(pack.schouten, 0.5 * g, atol=1e-12)


@pytest.mark.parametrize("m,lam", [(round_sphere(3), 0.5), (round_sphere(4), 0.5),
                                   (hyperbolic_ball(3), -0.5), (fubini_study(), 1.0),
                                   (flat(3), 0.0)], ids=["S3", "S4", "H3", "FS", "flat"])
def test_einstein_catalog(m, lam):
    pts = m.sample_points(12, np.random.default_rng(2), shrink=0.3)
    res = einstein_check(m, pts)
    assert res.is_einstein
    assert abs(res.lam - lam) < 1e-9
    assert res.lam_variation < 1e-9


def test_perturbed_metric_is_not_einstein():
    m = perturbed_diagonal(4)
    res = einstein_check(m, m.sample_points(10, np.random.default_rng(3), shrink=0.5))
    assert not res.is_einstein
    assert res.max_defect > 1e-2


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_weyl_decomposition_reconstructs_riemann(seed):
    m = perturbed_diagonal(4, eps=0.5)
    x = m.sample_points(1, np.random.default_rng(seed), shrink=0.5)[0]
    pack = curvature(m, x)
    rebuilt = pack.weyl + kulkarni_nomizu_schouten(pack.schouten, pack.g)
    assert np.allclose(rebuilt, pack.riemann, atol=1e-12)
    # Weyl is totally trace free
    assert np.abs(np.einsum("ac,abcd->bd", pack.ginv, pack.weyl)).max() < 1e-11
    # algebraic symmetries
    R = pack.riemann
    assert np.allclose(R, -np.swapaxes(R, 0, 1), atol=1e-12)
    assert np.allclose(R, np.transpose(R, (2, 3, 0, 1)), atol=1e-12)
    bianchi = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
    assert np.abs(bianchi).max() < 1e-11


def test_conformally_flat_metrics_have_zero_weyl():
    for m in (round_sphere(4), hyperbolic_ball(4)):
        x = m.sample_points(1, np.random.default_rng(0), shrink=0.3)[0]
        assert np.abs(curvature(m, x).weyl).max() < 1e-11


def test_dual_numbers_agree_with_finite_differences():
    m = perturbed_diagonal(4)
    x = np.array([0.3, -0.2, 0.1, 0.4])
    exact = curvature(m, x).schouten
    fd = curvature(m.with_differentiation("finite_difference", 1e-3), x).schouten
    assert np.allclose(exact, fd, atol=1e-5)


def _omega(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=3) * 0.4, rng.uniform(0.1, 0.5)
    return ConformalFactor(lambda x: np.exp(a[0] * x[0] + a[1] * x[1] * x[2] + b * x[2] ** 2),
                           name="exp_poly")


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from(["round_sphere", "perturbed_diagonal", "flat"]))
def test_rescaling_laws(seed, name):
    m = get_metric(name) if name != "perturbed_diagonal" else perturbed_diagonal(4)
    if m.n == 4:
        omega = ConformalFactor(lambda x: np.exp(0.3 * x[0] * x[3] + 0.2 * x[1]), name="w4")
    else:
        omega = _omega(seed)
    x = m.sample_points(1, np.random.default_rng(seed), shrink=0.3)[0]
    assert schouten_rescale_residual(m, omega, x) < 1e-7
    phi = lambda y: [y[0] * y[1], y[1] ** 2, 1.0 + y[0]] + [y[0]] * (m.n - 3)
    assert connection_rescale_check(m, omega, phi, x) < 1e-7


def test_rescaling_by_constant_scales_schouten_only_through_the_metric():
    m = round_sphere(3)
    m_hat = conformal_rescale(m, ConformalFactor(lambda x: 2.0 + 0.0 * x[0], name="two"))
    x = np.array([0.1, 0.2, -0.3])
    assert np.allclose(christoffel(m_hat, x), christoffel(m, x), atol=1e-13)
    assert np.allclose(curvature(m_hat, x).schouten, curvature(m, x).schouten, atol=1e-12)


def test_polynomial_metric_and_errors():
    m = polynomial_metric({"n": 3, "components": {"1,1": [[1.0, [0, 0, 0]], [0.5, [2, 0, 0]]]}})
    assert np.isclose(m.at(np.array([2.0, 0, 0]))[1, 1], 3.0)
    with pytest.raises(DimensionError):
        curvature(ChartMetric(2, lambda x: jets.matrix([[1.0, 0.0], [0.0, 1.0]])), np.zeros(2))
    bad = ChartMetric(3, lambda x: jets.matrix([[1.0, 0, 0], [0, -1.0, 0], [0, 0, 1.0]]))
    with pytest.raises(SingularMetric):
        bad.validate()
    with pytest.raises(SingularMetric):
        ConformalFactor(lambda x: x[0]).check_positive(np.array([[-1.0, 0, 0]]))


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_jets_match_hand_derivatives(a, b):
    f = lambda x: np.exp(x[0]) * np.sin(x[1]) + x[0] ** 3 / (1 + x[1] ** 2)
    val, grad, hess = jets.derivatives(f, np.array([a, b]), order=2)
    ea, sb, cb = np.exp(a), np.sin(b), np.cos(b)
    q = 1 + b * b
    assert np.isclose(val, ea * sb + a**3 / q)
    assert np.allclose(grad, [ea * sb + 3 * a * a / q, ea * cb - 2 * b * a**3 / q**2])
    hxx = ea * sb + 6 * a / q
    hxy = ea * cb - 6 * a * a * b / q**2
    hyy = -ea * sb + a**3 * (6 * b * b - 2) / q**3
    assert np.allclose(hess, [[hxx, hxy], [hxy, hyy]], atol=1e-9)
