"""Standard conformal tractors along curves, adjoint tractors as endomorphisms,
and the tractor test for conformal circles.

A tractor is a triple ``(sigma, mu_b, rho)`` trivialised in the chosen metric;
``mu`` is stored with a lower index.  An adjoint tractor is a
:class:`TractorEndo` ``(X^b, F^b_c, lam, Y_b)`` acting by

    sigma -> X^b mu_b - lam sigma
    mu_b  -> Y_b sigma + F_b^c mu_c - X_b rho
    rho   -> lam rho - Y^b mu_b.

Along a curve with unit velocity ``U`` the tractor derivative is

    (d sigma - U.mu,  nabla_U mu_b + U_b rho + P_ab U^a sigma,  d rho - U^a P_a^b mu_b).

All along-curve derivatives use five-point differences of the sampled
components, so results are returned at the interior samples of a
:class:`~parabolic_scales.conformal_curves.Trajectory`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from .conformal_curves import Trajectory, curve_derivative, stencil_weights
from .errors import DegenerateSampling, DimensionError
from .riemann_engine import ChartMetric, curvature

__all__ = [
    "Tractor",
    "TractorEndo",
    "SFrame",
    "CurveGeometry",
    "endo_apply",
    "tractor_inner",
    "endo_matrix",
    "endo_from_matrix",
    "endo_parameters",
    "tractor_derivative",
    "endo_derivative",
    "endo_on_tractor_derivative",
    "s_frame_geodesic",
    "s_frame_circle",
    "circle_conditions_residual",
    "closure_defect",
    "transport_defect",
    "appendix_defect",
    "appendix_fields",
    "acceleration_defect",
]


@dataclass(frozen=True)
class Tractor:
    sigma: np.ndarray
    mu: np.ndarray
    rho: np.ndarray

    def __add__(self, other: "Tractor") -> "Tractor":
        return Tractor(self.sigma + other.sigma, self.mu + other.mu, self.rho + other.rho)

    def __sub__(self, other: "Tractor") -> "Tractor":
        return Tractor(self.sigma - other.sigma, self.mu - other.mu, self.rho - other.rho)

    def __mul__(self, c) -> "Tractor":
        c = np.asarray(c, dtype=float)
        return Tractor(c * self.sigma, c[..., None] * self.mu, c * self.rho)

    __rmul__ = __mul__

    def as_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.sigma)[..., None], self.mu,
                               np.asarray(self.rho)[..., None]], axis=-1)

    @classmethod
    def from_array(cls, a) -> "Tractor":
        a = np.asarray(a, dtype=float)
        return cls(a[..., 0], a[..., 1:-1], a[..., -1])

    def interior(self) -> "Tractor":
        return Tractor(self.sigma[1:-1], self.mu[1:-1], self.rho[1:-1])


@dataclass(frozen=True)
class TractorEndo:
    """``(X^b, F^b_c, lam, Y_b)``; fields may carry a leading sample axis."""

    X: np.ndarray
    F: np.ndarray
    lam: np.ndarray
    Y: np.ndarray

    @classmethod
    def zero(cls, n: int, batch: tuple = ()) -> "TractorEndo":
        return cls(np.zeros(batch + (n,)), np.zeros(batch + (n, n)), np.zeros(batch),
                   np.zeros(batch + (n,)))

    def __add__(self, other: "TractorEndo") -> "TractorEndo":
        return TractorEndo(self.X + other.X, self.F + other.F, self.lam + other.lam, self.Y + other.Y)

    def __mul__(self, c) -> "TractorEndo":
        c = np.asarray(c, dtype=float)
        return TractorEndo(c[..., None] * self.X, c[..., None, None] * self.F, c * self.lam,
                           c[..., None] * self.Y)

    __rmul__ = __mul__

    def skew_residual(self, g) -> float:
        Fl = np.einsum("...bd,...dc->...bc", g, self.F)
        return float(np.max(np.abs(Fl + np.swapaxes(Fl, -1, -2))))

    def at(self, k) -> "TractorEndo":
        return TractorEndo(self.X[k], self.F[k], self.lam[k], self.Y[k])


def _ginv(g):
    return np.linalg.inv(g)


def endo_apply(phi: TractorEndo, T: Tractor, g) -> Tractor:
    """Action of an adjoint tractor on a tractor; ``g`` moves indices."""
    g = np.asarray(g, dtype=float)
    ginv = _ginv(g)
    X_low = np.einsum("...ab,...b->...a", g, phi.X)
    Y_up = np.einsum("...ab,...b->...a", ginv, phi.Y)
    # F_b^c = g_bd F^d_e g^ec
    F_mixed = g @ phi.F @ ginv
    sigma = np.einsum("...b,...b->...", phi.X, T.mu) - phi.lam * T.sigma
    mu = (phi.Y * np.asarray(T.sigma)[..., None] + np.einsum("...bc,...c->...b", F_mixed, T.mu)
          - X_low * np.asarray(T.rho)[..., None])
    rho = phi.lam * T.rho - np.einsum("...b,...b->...", Y_up, T.mu)
    return Tractor(sigma, mu, rho)


def tractor_inner(T1: Tractor, T2: Tractor, g) -> np.ndarray:
    ginv = _ginv(np.asarray(g, dtype=float))
    return (T1.sigma * T2.rho + np.einsum("...a,...ab,...b->...", T1.mu, ginv, T2.mu)
            + T1.rho * T2.sigma)


def endo_matrix(phi: TractorEndo, g) -> np.ndarray:
    """Matrix of the action on tractor coordinates ``(sigma, mu_1..mu_n, rho)``."""
    n = np.shape(phi.X)[-1]
    cols = []
    for k in range(n + 2):
        e = np.zeros(n + 2)
        e[k] = 1.0
        T = Tractor.from_array(np.broadcast_to(e, np.shape(phi.lam) + (n + 2,)))
        cols.append(endo_apply(phi, T, g).as_array())
    return np.stack(cols, axis=-1)


def endo_from_matrix(M, g) -> TractorEndo:
    """Read ``(X, F, lam, Y)`` off a matrix acting on tractor coordinates."""
    M = np.asarray(M, dtype=float)
    g = np.asarray(g, dtype=float)
    ginv = _ginv(g)
    lam = -M[..., 0, 0]
    Y = M[..., 1:-1, 0]
    X = M[..., 0, 1:-1]
    F_mixed = M[..., 1:-1, 1:-1]
    F = ginv @ F_mixed @ g
    return TractorEndo(X, F, lam, Y)


def _frame(g):
    """``L`` with ``g = L L^T``; orthonormal coordinates of a vector v are ``L^T v``."""
    return np.linalg.cholesky(g)


def endo_parameters(phi: TractorEndo, g) -> np.ndarray:
    """Coordinates of an adjoint tractor in a g-orthonormal frame.

    Order: X (n), strict upper triangle of F (skew in the frame), lam, Y (n).
    """
    L = _frame(np.asarray(g, dtype=float))
    Lt = np.swapaxes(L, -1, -2)
    Linv = np.linalg.inv(L)
    Xo = np.einsum("...ab,...b->...a", Lt, phi.X)
    Yo = np.einsum("...ab,...b->...a", Linv, phi.Y)
    Fo = Lt @ phi.F @ np.swapaxes(Linv, -1, -2)
    n = Xo.shape[-1]
    iu = np.triu_indices(n, 1)
    return np.concatenate([Xo, Fo[..., iu[0], iu[1]], np.asarray(phi.lam)[..., None], Yo], axis=-1)


# ---------------------------------------------------------------------------
# derivatives along a sampled curve
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CurveGeometry:
    """Metric data along a trajectory, evaluated once."""

    traj: Trajectory
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    schouten: np.ndarray

    @classmethod
    def of(cls, m: ChartMetric, traj: Trajectory) -> "CurveGeometry":
        if len(traj) < 3:
            raise DegenerateSampling("need at least 3 samples along the curve")
        pack = curvature(m, traj.x)
        return cls(traj, pack.g, pack.ginv, pack.gamma, pack.schouten)

    @property
    def U(self) -> np.ndarray:
        return self.traj.U

    @property
    def U_low(self) -> np.ndarray:
        return np.einsum("kab,kb->ka", self.g, self.traj.U)

    def centred(self, values: np.ndarray) -> np.ndarray:
        return curve_derivative(self.traj.t, values, self._stencil)

    @cached_property
    def _stencil(self):
        return stencil_weights(self.traj.t)

    def interior(self, values: np.ndarray) -> np.ndarray:
        return values[1:-1]


def tractor_derivative(m: ChartMetric, traj: Trajectory, T: Tractor,
                       geom: CurveGeometry | None = None) -> Tractor:
    """Tractor derivative along the trajectory at its interior samples."""
    geom = geom or CurveGeometry.of(m, traj)
    I = geom.interior
    U, g, ginv = I(geom.U), I(geom.g), I(geom.ginv)
    gam, P = I(geom.gamma), I(geom.schouten)
    sigma, mu, rho = I(np.asarray(T.sigma)), I(np.asarray(T.mu)), I(np.asarray(T.rho))
    dsigma = geom.centred(np.asarray(T.sigma))
    dmu = geom.centred(np.asarray(T.mu)) - np.einsum("kcab,ka,kc->kb", gam, U, mu)
    drho = geom.centred(np.asarray(T.rho))
    U_low = np.einsum("kab,kb->ka", g, U)
    PU = np.einsum("kab,ka->kb", P, U)
    PU_up = np.einsum("kbc,kc->kb", ginv, PU)
    return Tractor(dsigma - np.einsum("ka,ka->k", U, mu),
                   dmu + U_low * rho[:, None] + PU * sigma[:, None],
                   drho - np.einsum("kb,kb->k", PU_up, mu))


def endo_on_tractor_derivative(m: ChartMetric, traj: Trajectory, phi: TractorEndo, T: Tractor,
                               geom: CurveGeometry | None = None) -> Tractor:
    """``(d Phi)(T) = d(Phi T) - Phi(d T)`` at the interior samples."""
    geom = geom or CurveGeometry.of(m, traj)
    phiT = endo_apply(phi, T, geom.g)
    d_phiT = tractor_derivative(m, traj, phiT, geom)
    dT = tractor_derivative(m, traj, T, geom)
    phi_in = TractorEndo(phi.X[1:-1], phi.F[1:-1], np.asarray(phi.lam)[1:-1], phi.Y[1:-1])
    return d_phiT - endo_apply(phi_in, dT, geom.interior(geom.g))


def endo_derivative(m: ChartMetric, traj: Trajectory, phi: TractorEndo,
                    geom: CurveGeometry | None = None) -> TractorEndo:
    """``d Phi`` by the Leibniz rule on the constant coordinate frame, reassembled."""
    geom = geom or CurveGeometry.of(m, traj)
    N, n = traj.x.shape
    one = Tractor(np.ones(N), np.zeros((N, n)), np.zeros(N))
    dphi_one = endo_on_tractor_derivative(m, traj, phi, one, geom)
    lam = -dphi_one.sigma
    Y = dphi_one.mu
    X = np.empty((N - 2, n))
    F_mixed = np.empty((N - 2, n, n))
    for c in range(n):
        mu = np.zeros((N, n))
        mu[:, c] = 1.0
        d = endo_on_tractor_derivative(m, traj, phi, Tractor(np.zeros(N), mu, np.zeros(N)), geom)
        X[:, c] = d.sigma
        F_mixed[:, :, c] = d.mu
    g, ginv = geom.interior(geom.g), geom.interior(geom.ginv)
    F = ginv @ F_mixed @ g
    return TractorEndo(X, F, lam, Y)


# ---------------------------------------------------------------------------
# model subspaces
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SFrame:
    """Basis of the fibre of the model subbundle at one point."""

    U: np.ndarray
    C: np.ndarray
    g: np.ndarray
    basis: tuple
    labels: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    def parameter_matrix(self) -> np.ndarray:
        return np.stack([endo_parameters(b, self.g) for b in self.basis], axis=1)

    def constraint_residual(self) -> float:
        """Largest violation of ``X = fU``, ``F U = -f C``, ``Y = hU + lam C + F C``
        (read off by applying each element to test tractors)."""
        worst = 0.0
        for b in self.basis:
            worst = max(worst, circle_conditions_residual(b, self.U, self.C, self.g, compact=False))
        return worst


def _orthonormal_complement(u_o: np.ndarray) -> np.ndarray:
    """Columns: orthonormal basis of the Euclidean complement of unit ``u_o``."""
    n = len(u_o)
    q, _ = np.linalg.qr(np.column_stack([u_o, np.eye(n)]))
    return q[:, 1:n]


def s_frame_circle(U, C, n: int | None = None, g=None) -> SFrame:
    """Basis of the symmetry subspace of a circle with velocity U and acceleration C."""
    U = np.asarray(U, dtype=float)
    n = len(U) if n is None else n
    if U.shape != (n,):
        raise DimensionError("U must have length n")
    C = np.zeros(n) if C is None else np.asarray(C, dtype=float)
    g = np.eye(n) if g is None else np.asarray(g, dtype=float)
    U_low, C_low = g @ U, g @ C
    if abs(U @ U_low - 1.0) > 1e-10 or abs(U @ C_low) > 1e-10:
        raise DimensionError("U must be unit and orthogonal to C")
    L = _frame(g)
    E = np.linalg.inv(L.T)  # columns: g-orthonormal frame
    comp = _orthonormal_complement(L.T @ U)
    basis, labels = [], []

    def element(X, F, lam, Y):
        return TractorEndo(np.asarray(X, float), np.asarray(F, float), float(lam), np.asarray(Y, float))

    F_f = np.outer(U, C_low) - np.outer(C, U_low)
    basis.append(element(U, F_f, 0.0, g @ (F_f @ C)))
    labels.append("f")
    basis.append(element(np.zeros(n), np.zeros((n, n)), 1.0, C_low))
    labels.append("lambda")
    basis.append(element(np.zeros(n), np.zeros((n, n)), 0.0, U_low))
    labels.append("h")
    for i, j in combinations(range(n - 1), 2):
        a, b = E @ comp[:, i], E @ comp[:, j]
        F = np.outer(a, g @ b) - np.outer(b, g @ a)
        basis.append(element(np.zeros(n), F, 0.0, g @ (F @ C)))
        labels.append(f"F{i}{j}")
    return SFrame(U, C, g, tuple(basis), tuple(labels))


def s_frame_geodesic(U, n: int | None = None, g=None) -> SFrame:
    return s_frame_circle(U, None, n, g)


def circle_conditions_residual(phi: TractorEndo, U, C, g, compact: bool = False) -> float:
    """Distance of ``phi`` from satisfying the circle conditions (applied to tractors).

    The unknown scalars f, lam, h are fitted by least squares from the
    components the conditions pin down; ``compact`` drops the components the
    reduced system leaves free.
    """
    g = np.asarray(g, float)
    U, C = np.asarray(U, float), np.asarray(C, float)
    n = len(U)
    U_low, C_low = g @ U, g @ C
    c2 = C @ C_low
    z = np.zeros(n)
    a = endo_apply(phi, Tractor(0.0, z, 1.0), g)
    b = endo_apply(phi, Tractor(0.0, U_low, 0.0), g)
    c = endo_apply(phi, Tractor(1.0, -C_low, 0.0), g)
    # unknowns (f, lam, h); each row: coefficients, observed value
    rows, vals = [], []

    def eq(coef, val):
        rows.append(np.atleast_2d(coef))
        vals.append(np.atleast_1d(val))

    eq(np.zeros((1, 3)), a.sigma)
    eq(np.column_stack([-U_low, z, z]), a.mu)
    eq([[0.0, 1.0, 0.0]], a.rho)
    eq([[1.0, 0.0, 0.0]], b.sigma)
    eq(np.column_stack([-C_low, z, z]), b.mu)
    eq(np.column_stack([z, C_low, U_low]), c.mu)
    if not compact:
        eq([[-c2, 0.0, -1.0]], b.rho)
        eq([[0.0, -1.0, 0.0]], c.sigma)
        eq([[0.0, c2, 0.0]], c.rho)
    A = np.vstack(rows)
    v = np.concatenate(vals)
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return float(np.max(np.abs(A @ coef - v)))


# ---------------------------------------------------------------------------
# the closure test along geodesics
# ---------------------------------------------------------------------------
def _spanning_fields(geom: CurveGeometry) -> list:
    """Smooth sections spanning the geodesic model subbundle along the curve."""
    U, g = geom.U, geom.g
    N, n = U.shape
    U_low = geom.U_low
    zeros_v, zeros_m, zeros_s = np.zeros((N, n)), np.zeros((N, n, n)), np.zeros(N)
    fields = [TractorEndo(U.copy(), zeros_m, zeros_s, zeros_v),
              TractorEndo(zeros_v, zeros_m, np.ones(N), zeros_v),
              TractorEndo(zeros_v, zeros_m, zeros_s, U_low.copy())]
    # F = Pi eps Pi^T in g-orthonormal coordinates, Pi the projection killing U
    L = _frame(g)
    Lt = np.swapaxes(L, -1, -2)
    E = np.linalg.inv(Lt)
    u_o = np.einsum("kab,kb->ka", Lt, U)
    Pi = np.eye(n)[None] - np.einsum("ka,kb->kab", u_o, u_o)
    for i, j in combinations(range(n), 2):
        eps = np.zeros((n, n))
        eps[i, j], eps[j, i] = 1.0, -1.0
        Fo = Pi @ eps @ Pi
        F = E @ Fo @ Lt
        fields.append(TractorEndo(zeros_v, F, zeros_s, zeros_v))
    return fields


def closure_defect(m: ChartMetric, traj: Trajectory, geom: CurveGeometry | None = None) -> np.ndarray:
    """How far the tractor derivative moves the geodesic model subbundle out of itself.

    At each interior sample: the operator norm of ``Phi -> d Phi mod S``
    restricted to ``S`` (parameters measured in a g-orthonormal frame).
    Vanishes iff ``U`` is a Schouten eigenvector there.
    """
    geom = geom or CurveGeometry.of(m, traj)
    fields = _spanning_fields(geom)
    g_in = geom.interior(geom.g)
    params = np.stack([endo_parameters(f, geom.g)[1:-1] for f in fields], axis=-1)
    derivs = np.stack([endo_parameters(endo_derivative(m, traj, f, geom), g_in) for f in fields],
                      axis=-1)
    # the fields span the model fibre, whose dimension is known
    n = geom.g.shape[-1]
    r = 3 + (n - 1) * (n - 2) // 2
    basis = np.linalg.svd(params, full_matrices=False)[0][..., :r]
    perp = derivs - basis @ (np.swapaxes(basis, -1, -2) @ derivs)
    op = perp @ np.linalg.pinv(params, rcond=1e-10)
    return np.linalg.norm(op, 2, axis=(-2, -1))


def _tractor_generator(geom: CurveGeometry, k: int) -> np.ndarray:
    """Matrix ``A`` with ``dT/dt = A T`` for parallel tractors (coordinates sigma, mu, rho)."""
    U, g, ginv, gam, P = geom.U[k], geom.g[k], geom.ginv[k], geom.gamma[k], geom.schouten[k]
    n = len(U)
    A = np.zeros((n + 2, n + 2))
    A[0, 1:-1] = U
    A[1:-1, 1:-1] = np.einsum("cab,a->bc", gam, U)
    A[1:-1, -1] = -(g @ U)
    A[1:-1, 0] = -(P.T @ U)
    A[-1, 1:-1] = ginv @ (P.T @ U)
    return A


def transport_defect(m: ChartMetric, traj: Trajectory, arc: float = 0.5) -> float:
    """Finite-transport cross-check of :func:`closure_defect`.

    Parallel-transports the geodesic model subspace from the first sample
    over ``arc`` (RK4 using the trajectory samples as stages) and returns the
    relative distance of the transported subspace from the model subspace
    at the end point.
    """
    geom = CurveGeometry.of(m, traj)
    t = traj.t
    end = int(np.searchsorted(t, t[0] + arc - 1e-12))
    end -= end % 2
    if end < 2:
        raise DegenerateSampling("trajectory too short for the requested arc")
    n = traj.x.shape[1]
    Tm = np.eye(n + 2)
    for k in range(0, end, 2):
        h = t[k + 2] - t[k]
        A0, A1, A2 = (_tractor_generator(geom, j) for j in (k, k + 1, k + 2))
        k1 = A0 @ Tm
        k2 = A1 @ (Tm + 0.5 * h * k1)
        k3 = A1 @ (Tm + 0.5 * h * k2)
        k4 = A2 @ (Tm + h * k3)
        Tm = Tm + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    start = s_frame_geodesic(traj.U[0], g=geom.g[0])
    final = s_frame_geodesic(traj.U[end], g=geom.g[end])
    Qf, _ = np.linalg.qr(final.parameter_matrix())
    Tinv = np.linalg.inv(Tm)
    worst = 0.0
    for b in start.basis:
        moved = endo_from_matrix(Tm @ endo_matrix(b, geom.g[0]) @ Tinv, geom.g[end])
        p = endo_parameters(moved, geom.g[end])
        worst = max(worst, float(np.linalg.norm(p - Qf @ (Qf.T @ p)) / np.linalg.norm(p)))
    return worst


# ---------------------------------------------------------------------------
# circles: the acceleration obstruction
# ---------------------------------------------------------------------------
def appendix_fields(geom: CurveGeometry, C: np.ndarray | None = None) -> TractorEndo:
    """The model-subbundle section with f = 1, lam = h = 0 along a curve."""
    U = geom.U
    C = geom.traj.C if C is None else C
    g = geom.g
    U_low = np.einsum("kab,kb->ka", g, U)
    C_low = np.einsum("kab,kb->ka", g, C)
    F = np.einsum("ka,kb->kab", U, C_low) - np.einsum("ka,kb->kab", C, U_low)
    c2 = np.einsum("ka,ka->k", C, C_low)
    uc = np.einsum("ka,ka->k", U, C_low)
    Y = c2[:, None] * U_low - uc[:, None] * C_low
    return TractorEndo(U.copy(), F, np.zeros(len(U)), Y)


def appendix_defect(m: ChartMetric, traj: Trajectory, geom: CurveGeometry | None = None) -> np.ndarray:
    """Obstruction ``E_b`` read off ``(d Phi)(0, U_b, 0)`` for the f = 1 section.

    With ``f = 1`` and ``lam = 0`` the tractor derivative gives
    ``sigma = 0`` and ``mu_b = -E_b``; returned covariantly at the interior
    samples, directly comparable with ``cc_residual``.
    """
    geom = geom or CurveGeometry.of(m, traj)
    phi = appendix_fields(geom)
    N, n = traj.x.shape
    T = Tractor(np.zeros(N), geom.U_low, np.zeros(N))
    d = endo_on_tractor_derivative(m, traj, phi, T, geom)
    C_low = np.einsum("kab,kb->ka", geom.interior(geom.g), traj.C[1:-1])
    return -(d.mu + d.sigma[:, None] * C_low)


def acceleration_defect(m: ChartMetric, traj: Trajectory, C: np.ndarray,
                        geom: CurveGeometry | None = None) -> np.ndarray:
    """``mu``-component of ``(d Phi)(0, 0, 1)`` for the f = 1 section built with ``C``.

    Equals ``-(dU_b - C_b)`` (covariant acceleration mismatch), so it vanishes
    only when ``C`` is the true acceleration.
    """
    geom = geom or CurveGeometry.of(m, traj)
    phi = appendix_fields(geom, np.asarray(C, float))
    N, n = traj.x.shape
    T = Tractor(np.zeros(N), np.zeros((N, n)), np.ones(N))
    return endo_on_tractor_derivative(m, traj, phi, T, geom).mu

