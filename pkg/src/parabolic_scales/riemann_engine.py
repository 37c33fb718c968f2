"""Curvature of chart metrics and their conformal rescalings.

Index conventions
-----------------
``dg[..., k, i, j]`` is the partial derivative of ``g_ij`` in coordinate ``k``.
Christoffel symbols are stored as ``gamma[..., a, b, c]`` for
:math:`\\Gamma^a{}_{bc}`.

The Riemann tensor follows the commutator convention
:math:`(\\nabla_a\\nabla_b - \\nabla_b\\nabla_a)X^c = R_{ab}{}^c{}_d X^d` and is
stored fully lowered, ``riemann[..., a, b, c, d]`` = :math:`R_{abcd}`.  With
this convention the unit sphere has :math:`R_{abcd} = g_{ac}g_{bd} -
g_{ad}g_{bc}`.  Ricci is the contraction over the first and third slots,
:math:`\\mathrm{Ric}_{bd} = g^{ac}R_{abcd}`, and tracing the Weyl/Schouten
decomposition

.. math:: R_{abcd} = W_{abcd} + P_{ac}g_{bd} - P_{bc}g_{ad} - P_{ad}g_{bc} + P_{bd}g_{ac}

over that pair gives :math:`\\mathrm{Ric} = (n-2)P + J g` with
:math:`J = P^a{}_a = \\mathrm{Scal}/(2(n-1))`.  The reconstruction residual is
checked by the test-suite rather than assumed.

All functions accept a single point ``(n,)`` or a batch ``(B, n)``; outputs
carry the same leading batch shape.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DimensionError, SingularMetric
from .jets import Jet, derivatives, value

__all__ = [
    "ChartMetric",
    "ConformalFactor",
    "CurvaturePack",
    "EinsteinResult",
    "metric_derivatives",
    "christoffel",
    "christoffel_derivatives",
    "curvature",
    "einstein_check",
    "conformal_rescale",
    "connection_rescale_check",
    "schouten_rescale_residual",
    "schouten_from_ricci",
    "kulkarni_nomizu_schouten",
]


@dataclass(frozen=True)
class ChartMetric:
    """A Riemannian metric on a box of a coordinate chart.

    ``g`` maps a point (an object array of coordinates, possibly jets) to an
    ``n x n`` array-like of components.  It must be written with arithmetic
    and numpy ufuncs only so that jets can flow through it.
    """

    n: int
    g: Callable
    name: str = "custom"
    domain_hint: tuple = None
    differentiation: str = "dual_numbers"
    fd_step: float = 1e-4
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain_hint is None:
            object.__setattr__(self, "domain_hint", (-np.ones(self.n), np.ones(self.n)))
        lo, hi = (np.asarray(b, dtype=float) * np.ones(self.n) for b in self.domain_hint)
        object.__setattr__(self, "domain_hint", (lo, hi))
        if self.differentiation not in ("dual_numbers", "finite_difference"):
            raise ValueError(f"unknown differentiation mode {self.differentiation!r}")

    def at(self, x) -> np.ndarray:
        """Metric components at a point or batch of points (plain floats)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return _as_float_matrix(self.g(x), self.n)
        return np.stack([_as_float_matrix(self.g(p), self.n) for p in x])

    def contains(self, x) -> np.ndarray:
        lo, hi = self.domain_hint
        x = np.asarray(x, dtype=float)
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def sample_points(self, k: int, rng: np.random.Generator, shrink: float = 1.0) -> np.ndarray:
        lo, hi = self.domain_hint
        mid, half = (lo + hi) / 2, shrink * (hi - lo) / 2
        return mid + half * rng.uniform(-1.0, 1.0, size=(k, self.n))

    def with_differentiation(self, mode: str, fd_step: float = 1e-4) -> "ChartMetric":
        return replace(self, differentiation=mode, fd_step=fd_step)

    def validate(self, points=None, tol: float = 1e-12) -> None:
        """Raise :class:`SingularMetric` unless g is symmetric positive definite at the points."""
        if points is None:
            points = self.sample_points(16, np.random.default_rng(0))
        G = self.at(np.atleast_2d(points))
        if np.max(np.abs(G - np.swapaxes(G, -1, -2))) > tol * max(1.0, np.max(np.abs(G))):
            raise SingularMetric(f"metric {self.name} is not symmetric")
        if np.min(np.linalg.eigvalsh(G)) <= 0:
            raise SingularMetric(f"metric {self.name} is not positive definite on its domain")


def _as_float_matrix(entries, n: int) -> np.ndarray:
    arr = np.asarray(entries, dtype=object)
    out = np.empty(arr.shape)
    for idx in np.ndindex(arr.shape):
        out[idx] = float(value(arr[idx]))
    if out.shape != (n, n):
        raise SingularMetric(f"metric returned shape {out.shape}, expected {(n, n)}")
    return out


# ---------------------------------------------------------------------------
# derivatives of the metric
# ---------------------------------------------------------------------------
def metric_derivatives(m: ChartMetric, x, order: int = 2):
    """Return ``(g, dg, ddg)`` at ``x``; ``ddg`` is None when ``order == 1``."""
    x = np.asarray(x, dtype=float)
    if m.differentiation == "finite_difference":
        return _fd_metric_derivatives(m, x, order)
    return derivatives(m.g, x, order=order)


def _fd_metric_derivatives(m: ChartMetric, x: np.ndarray, order: int):
    if x.ndim > 1:
        parts = [_fd_metric_derivatives(m, p, order) for p in x]
        g = np.stack([p[0] for p in parts])
        dg = np.stack([p[1] for p in parts])
        ddg = np.stack([p[2] for p in parts]) if order >= 2 else None
        return g, dg, ddg
    n, h = m.n, m.fd_step
    eye = np.eye(n)
    g0 = m.at(x)
    plus = [m.at(x + h * eye[k]) for k in range(n)]
    minus = [m.at(x - h * eye[k]) for k in range(n)]
    dg = np.stack([(plus[k] - minus[k]) / (2 * h) for k in range(n)])
    if order < 2:
        return g0, dg, None
    ddg = np.empty((n, n, n, n))
    for k in range(n):
        ddg[k, k] = (plus[k] - 2 * g0 + minus[k]) / h**2
        for l in range(k + 1, n):
            pp = m.at(x + h * (eye[k] + eye[l]))
            pm = m.at(x + h * (eye[k] - eye[l]))
            mp = m.at(x - h * (eye[k] - eye[l]))
            mm = m.at(x - h * (eye[k] + eye[l]))
            ddg[k, l] = ddg[l, k] = (pp - pm - mp + mm) / (4 * h**2)
    return g0, dg, ddg


def _inverse(g: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric("metric is singular") from exc


def _gamma_lower(dg: np.ndarray) -> np.ndarray:
    """``T[d, b, c] = d_b g_dc + d_c g_bd - d_d g_bc``."""
    return (np.einsum("...bdc->...dbc", dg) + np.einsum("...cbd->...dbc", dg) - dg)


def christoffel(m: ChartMetric, x) -> np.ndarray:
    """Levi-Civita symbols ``gamma[..., a, b, c]`` at ``x``."""
    g, dg, _ = metric_derivatives(m, x, order=1)
    ginv = _inverse(g)
    return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, _gamma_lower(dg))


def christoffel_derivatives(g, dg, ddg):
    """Christoffel symbols and their partials ``dgamma[..., e, a, b, c]``."""
    ginv = _inverse(g)
    T = _gamma_lower(dg)
    gamma = 0.5 * np.einsum("...ad,...dbc->...abc", ginv, T)
    # d_e T_dbc with ddg[..., e, k, i, j] = d_e d_k g_ij
    dT = (np.einsum("...ebdc->...edbc", ddg) + np.einsum("...ecbd->...edbc", ddg) - ddg)
    dginv = -np.einsum("...ap,...epq,...qd->...ead", ginv, dg, ginv)
    dgamma = 0.5 * (np.einsum("...ead,...dbc->...eabc", dginv, T)
                    + np.einsum("...ad,...edbc->...eabc", ginv, dT))
    return ginv, gamma, dgamma


@dataclass(frozen=True)
class CurvaturePack:
    """Curvature data at a point (or batch of points), chart components."""

    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    schouten: np.ndarray
    weyl: np.ndarray

    @property
    def schouten_mixed(self) -> np.ndarray:
        """:math:`P_a{}^b` as a matrix ``[a, b]``."""
        return np.einsum("...ac,...cb->...ab", self.schouten, self.ginv)


def kulkarni_nomizu_schouten(P: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``P_ac g_bd - P_bc g_ad - P_ad g_bc + P_bd g_ac``."""
    return (np.einsum("...ac,...bd->...abcd", P, g) - np.einsum("...bc,...ad->...abcd", P, g)
            - np.einsum("...ad,...bc->...abcd", P, g) + np.einsum("...bd,...ac->...abcd", P, g))


def schouten_from_ricci(ricci: np.ndarray, scalar: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = g.shape[-1]
    return (ricci - (scalar / (2 * (n - 1)))[..., None, None] * g) / (n - 2)


def curvature(m: ChartMetric, x) -> CurvaturePack:
    """Full curvature pack at ``x`` (requires ``n >= 3``)."""
    if m.n < 3:
        raise DimensionError("Schouten and Weyl tensors need n >= 3")
    x = np.asarray(x, dtype=float)
    g, dg, ddg = metric_derivatives(m, x, order=2)
    ginv, gam, dgam = christoffel_derivatives(g, dg, ddg)
    # R^r_{s m v} = d_m G^r_{v s} - d_v G^r_{m s} + G^r_{m l} G^l_{v s} - G^r_{v l} G^l_{m s}
    rup = (np.einsum("...mrvs->...rsmv", dgam) - np.einsum("...vrms->...rsmv", dgam)
           + np.einsum("...rml,...lvs->...rsmv", gam, gam)
           - np.einsum("...rvl,...lms->...rsmv", gam, gam))
    # R_abcd = g_ce R^e_{d a b}
    riemann = np.einsum("...ce,...edab->...abcd", g, rup)
    ricci = np.einsum("...ac,...abcd->...bd", ginv, riemann)
    scalar = np.einsum("...bd,...bd->...", ginv, ricci)
    P = schouten_from_ricci(ricci, scalar, g)
    weyl = riemann - kulkarni_nomizu_schouten(P, g)
    return CurvaturePack(x, g, ginv, gam, riemann, ricci, scalar, P, weyl)


@dataclass(frozen=True)
class EinsteinResult:
    is_einstein: bool
    lam: float
    lam_variation: float
    max_defect: float

    def __iter__(self):
        return iter((self.is_einstein, self.lam))


def einstein_check(m: ChartMetric, sample_points, tol: float = 1e-7) -> EinsteinResult:
    """Is :math:`P_a{}^b` pure trace at every sample point?"""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    Pm = curvature(m, pts).schouten_mixed
    lam = np.trace(Pm, axis1=-2, axis2=-1) / m.n
    defect = np.linalg.norm(Pm - lam[:, None, None] * np.eye(m.n), axis=(-2, -1))
    max_defect = float(np.max(defect))
    return EinsteinResult(max_defect < tol, float(np.mean(lam)),
                          float(np.max(lam) - np.min(lam)), max_defect)


# ---------------------------------------------------------------------------
# conformal rescaling
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ConformalFactor:
    """Positive function ``omega``; rescales ``g`` to ``omega**2 g``."""

    omega: Callable
    name: str = "omega"

    def __call__(self, x):
        return self.omega(x)

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(value(self.omega(x)))
        return np.array([float(value(self.omega(p))) for p in x])

    def log_derivatives(self, x, order: int = 2):
        """``(log omega, Upsilon, d Upsilon)`` with ``Upsilon_a = d_a log omega``."""
        return derivatives(lambda y: np.log(self.omega(y)), x, order=order)

    def check_positive(self, points) -> None:
        if np.any(np.asarray(self.values(np.atleast_2d(points))) <= 0):
            raise SingularMetric(f"conformal factor {self.name} is not positive on the sample")


def conformal_rescale(m: ChartMetric, omega: ConformalFactor, points=None) -> ChartMetric:
    """The metric ``omega**2 g`` on the same chart box."""
    if points is None:
        points = m.sample_points(16, np.random.default_rng(1))
    omega.check_positive(points)
    base = m.g

    def g_hat(x):
        w = omega(x)
        return (w * w) * np.asarray(base(x), dtype=object)

    return replace(m, g=g_hat, name=f"{omega.name}^2*{m.name}")


def _upsilon(omega: ConformalFactor, x, g_gamma):
    _, ups, dups = omega.log_derivatives(x, order=2)
    nabla_ups = dups - np.einsum("...cab,...c->...ab", g_gamma, ups)
    return ups, nabla_ups


def connection_rescale_check(m: ChartMetric, omega: ConformalFactor, phi: Callable, x) -> float:
    """Max difference between the two sides of the 1-form connection change law.

    Left: Levi-Civita derivative of ``phi`` for ``omega**2 g`` directly from its
    Christoffel symbols.  Right: the ``g`` derivative corrected by
    ``-Y_a phi_b - Y_b phi_a + Y^c phi_c g_ab``.
    """
    x = np.asarray(x, dtype=float)
    m_hat = conformal_rescale(m, omega, np.atleast_2d(x))
    phi_v, dphi, _ = derivatives(phi, x, order=1)
    g = m.at(x)
    gam = christoffel(m, x)
    gam_hat = christoffel(m_hat, x)
    nabla = dphi - np.einsum("...cab,...c->...ab", gam, phi_v)
    nabla_hat = dphi - np.einsum("...cab,...c->...ab", gam_hat, phi_v)
    _, ups, _ = omega.log_derivatives(x, order=1)
    ups_up = np.einsum("...ab,...b->...a", np.linalg.inv(g), ups)
    rhs = (nabla - np.einsum("...a,...b->...ab", ups, phi_v)
           - np.einsum("...b,...a->...ab", ups, phi_v)
           + np.einsum("...c,...c->...", ups_up, phi_v)[..., None, None] * g)
    return float(np.max(np.abs(nabla_hat - rhs)))


def schouten_rescale_residual(m: ChartMetric, omega: ConformalFactor, x) -> float:
    """Max deviation of the rescaled Schouten tensor from its transformation law."""
    x = np.asarray(x, dtype=float)
    m_hat = conformal_rescale(m, omega, np.atleast_2d(x))
    pack = curvature(m, x)
    pack_hat = curvature(m_hat, x)
    ups, nabla_ups = _upsilon(omega, x, pack.gamma)
    ups_sq = np.einsum("...a,...ab,...b->...", ups, pack.ginv, ups)
    predicted = (pack.schouten - nabla_ups + np.einsum("...a,...b->...ab", ups, ups)
                 - 0.5 * ups_sq[..., None, None] * pack.g)
    return float(np.max(np.abs(pack_hat.schouten - predicted)))
