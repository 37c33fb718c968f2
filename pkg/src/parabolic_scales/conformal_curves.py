"""Geodesics and conformal circles on chart metrics.

Curves are parameterised by arc length and carried as a state ``(x, U, C)``:
position, unit velocity and acceleration ``C = nabla_U U``.  A conformal
circle solves

    nabla_U C^a = P^a_b U^b - (|C|^2 + P(U, U)) U^a,

which preserves ``|U| = 1`` and ``U.C = 0``.  Geodesics are the special
case ``C = 0`` of the state but not, in general, of the equation.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PPoly, make_interp_spline
from scipy.spatial import cKDTree

from .errors import DegenerateSampling, DimensionError, NumericalBreakdown, SingularMetric
from .jets import Jet
from .riemann_engine import ChartMetric, ConformalFactor, christoffel, conformal_rescale, curvature

__all__ = [
    "CurveState",
    "Trajectory",
    "geodesic_integrate",
    "conformal_circle_integrate",
    "forced_curve_integrate",
    "cc_residual",
    "cc_residual_norms",
    "path_acceleration",
    "curve_derivative",
    "stencil_weights",
    "eigencheck",
    "eigencheck_norm",
    "projective_param_defect",
    "matched_data",
    "rescale_to_geodesic",
    "hausdorff_distance",
    "arc_length",
    "write_trajectory_csv",
    "flat_circle_point",
    "sphere_geodesic_point",
    "rescaled_acceleration",
]


def _dot(g, a, b):
    return np.einsum("...a,...ab,...b->...", a, g, b)


@dataclass(frozen=True)
class CurveState:
    x: np.ndarray
    U: np.ndarray
    C: np.ndarray

    @classmethod
    def normalized(cls, m: ChartMetric, x, U, C=None) -> "CurveState":
        """Rescale ``U`` to unit length and remove the U-component of ``C``."""
        x = np.asarray(x, dtype=float)
        g = m.at(x)
        U = np.asarray(U, dtype=float)
        U = U / np.sqrt(_dot(g, U, U))
        C = np.zeros_like(U) if C is None else np.asarray(C, dtype=float)
        C = C - _dot(g, U, C) * U
        return cls(x, U, C)

    def check(self, m: ChartMetric, tol: float = 1e-9) -> None:
        g = m.at(self.x)
        if abs(_dot(g, self.U, self.U) - 1.0) > tol:
            raise DegenerateSampling("velocity is not unit length")
        if abs(_dot(g, self.U, self.C)) > tol:
            raise DegenerateSampling("acceleration is not orthogonal to the velocity")


@dataclass
class Trajectory:
    """Samples of an arc-length parameterised curve."""

    t: np.ndarray
    x: np.ndarray
    U: np.ndarray
    C: np.ndarray
    metric: str
    step: float
    kind: str = "conformal_circle"
    exited: bool = False
    drift: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def state(self, k: int) -> CurveState:
        return CurveState(self.x[k], self.U[k], self.C[k])

    def dense_points(self, factor: int = 8) -> np.ndarray:
        """Cubic Hermite refinement of the sampled path (uses ``dx/dt = U``)."""
        h = np.diff(self.t)[:, None, None]
        s = np.linspace(0.0, 1.0, factor, endpoint=False)[None, :, None]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        x0, x1 = self.x[:-1, None], self.x[1:, None]
        u0, u1 = self.U[:-1, None], self.U[1:, None]
        seg = h00 * x0 + h10 * h * u0 + h01 * x1 + h11 * h * u1
        return np.vstack([seg.reshape(-1, self.x.shape[1]), self.x[-1:]])


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------
def _rk4(rhs: Callable, y0: np.ndarray, length: float, step: float, inside: Callable):
    """Fixed-step RK4 on a batch ``y0`` of shape (B, d).

    The last step is shortened so the run ends exactly at ``length``.
    Members that leave the domain are frozen at their last interior state.
    Returns the stacked states, the per-member index of the last valid
    sample and the parameter values.
    """
    if step <= 0 or length < 0:
        raise ValueError("step must be positive and length non-negative")
    nsteps = int(np.ceil(length / step - 1e-9))
    t = np.minimum(step * np.arange(nsteps + 1), length)
    y = np.array(y0, dtype=float)
    out = np.empty((nsteps + 1,) + y.shape)
    out[0] = y
    last = np.full(len(y), nsteps)
    active = np.ones(len(y), dtype=bool)
    for k in range(nsteps):
        h = t[k + 1] - t[k]
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y_new = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_new[active])):
            raise NumericalBreakdown(f"non-finite state after {k + 1} steps")
        left = active & ~inside(y_new)
        last[left] = k
        active &= ~left
        y = np.where(active[:, None], y_new, y)
        out[k + 1] = y
    return out, last, t


def _prepare(m: ChartMetric, states) -> tuple:
    states = [states] if isinstance(states, CurveState) else list(states)
    if not states:
        raise DimensionError("no initial states")
    for s in states:
        if np.shape(s.x) != (m.n,):
            raise DimensionError(f"initial point must have length {m.n}")
        if not m.contains(s.x):
            raise DegenerateSampling("initial point outside the metric's domain")
        s.check(m, 1e-9)
    return states


def _trajectories(m, states, out, last, tt, step, kind, n) -> list:
    trajs = []
    for b in range(len(states)):
        k_end = last[b]
        ys = out[: k_end + 1, b]
        x, U = ys[:, :n], ys[:, n:2 * n]
        C = ys[:, 2 * n:3 * n] if ys.shape[1] >= 3 * n else np.zeros_like(x)
        G = m.at(x)
        drift = {
            "max_speed_drift": float(np.max(np.abs(_dot(G, U, U) - 1.0))),
            "max_orthogonality_drift": float(np.max(np.abs(_dot(G, U, C)))),
        }
        t = tt[: k_end + 1]
        trajs.append(Trajectory(t, x, U, C, m.name, step, kind,
                                exited=bool(k_end < len(out) - 1), drift=drift))
    return trajs


def _inside(m, n):
    return lambda y: m.contains(y[:, :n])


def geodesic_integrate(m: ChartMetric, x0, U0=None, length: float = 1.0, step: float = 1e-3):
    """Geodesics by RK4.  Pass ``x0, U0`` for one curve, or a list of
    :class:`CurveState` as ``x0`` for a batch (returns a list)."""
    single = U0 is not None
    states = _prepare(m, CurveState(np.asarray(x0, float), np.asarray(U0, float),
                                    np.zeros(m.n)) if single else x0)
    n = m.n

    def rhs(y):
        x, U = y[:, :n], y[:, n:]
        gam = christoffel(m, x)
        return np.hstack([U, -np.einsum("kabc,kb,kc->ka", gam, U, U)])

    y0 = np.array([np.concatenate([s.x, s.U]) for s in states])
    out, last, tt = _rk4(rhs, y0, length, step, _inside(m, n))
    trajs = _trajectories(m, states, out, last, tt, step, "geodesic", n)
    return trajs[0] if single else trajs


def _circle_rhs(m: ChartMetric, forcing: Callable | None = None):
    n = m.n

    def rhs(y):
        x, U, C = y[:, :n], y[:, n:2 * n], y[:, 2 * n:]
        if forcing is None:
            pack = curvature(m, x)
            gam, g = pack.gamma, pack.g
            W = np.einsum("kab,kbc,kc->ka", pack.ginv, pack.schouten, U)
        else:
            gam = christoffel(m, x)
            g = m.at(x)
            W = forcing(x, U)
        c2 = _dot(g, C, C)
        uw = _dot(g, U, W)
        dC = W - (c2 + uw)[:, None] * U - np.einsum("kabc,kb,kc->ka", gam, U, C)
        dU = C - np.einsum("kabc,kb,kc->ka", gam, U, U)
        return np.hstack([U, dU, dC])

    return rhs


def conformal_circle_integrate(m: ChartMetric, x0, U0=None, C0=None, length: float = 1.0,
                               step: float = 1e-3):
    """Conformal circles by RK4; batch form as in :func:`geodesic_integrate`."""
    single = U0 is not None
    if single:
        states = _prepare(m, CurveState(np.asarray(x0, float), np.asarray(U0, float),
                                        np.zeros(m.n) if C0 is None else np.asarray(C0, float)))
    else:
        states = _prepare(m, x0)
    y0 = np.array([np.concatenate([s.x, s.U, s.C]) for s in states])
    out, last, tt = _rk4(_circle_rhs(m), y0, length, step, _inside(m, m.n))
    trajs = _trajectories(m, states, out, last, tt, step, "conformal_circle", m.n)
    return trajs[0] if single else trajs


def forced_curve_integrate(m: ChartMetric, states, forcing: Callable, length: float = 1.0,
                           step: float = 1e-3) -> list:
    """Unit-speed curves with ``nabla_U C = W - (|C|^2 + U.W) U``.

    ``forcing(x, U)`` returns the vector field ``W`` (batched, shape (B, n)).
    With ``W = P^a_b U^b`` this is the conformal circle equation; any other
    choice gives curves whose circle defect is the normal part of
    ``W - P U``.
    """
    states = _prepare(m, states)
    y0 = np.array([np.concatenate([s.x, s.U, s.C]) for s in states])
    out, last, tt = _rk4(_circle_rhs(m, forcing), y0, length, step, _inside(m, m.n))
    return _trajectories(m, states, out, last, tt, step, "forced", m.n)


def stencil_weights(t: np.ndarray, ends: bool = False, width: int = 5) -> tuple:
    """First-derivative weights at samples 1..N-2, centred where possible.

    Returns ``(index, weights)`` with shapes (N-2, width); exact for
    polynomials of degree ``width - 1`` on any grid.  ``ends=True`` adds
    one-sided stencils at the first and last samples.  The width shrinks to
    fit short curves.
    """
    N = len(t)
    k = np.arange(N) if ends else np.arange(1, N - 1)
    width = min(width, N if N % 2 else N - 1)
    half = width // 2
    start = np.clip(k - half, 0, N - width)
    idx = start[:, None] + np.arange(width)[None, :]
    x = t[idx] - t[k][:, None]
    w = np.zeros_like(x)
    for j in range(width):
        others = [m for m in range(width) if m != j]
        total = np.zeros(len(k))
        for m in others:
            term = 1.0 / (x[:, j] - x[:, m])
            for l in others:
                if l != m:
                    term = term * (0.0 - x[:, l]) / (x[:, j] - x[:, l])
            total += term
        w[:, j] = total
    return idx, w


def curve_derivative(t, values, stencil: tuple | None = None, ends: bool = False,
                     width: int = 5) -> np.ndarray:
    """d/dt of sampled values at the interior samples 1..N-2 (all samples with ``ends``).

    ``stencil`` is a cached result of :func:`stencil_weights` for ``t``.
    """
    values = np.asarray(values, dtype=float)
    if stencil is None:
        stencil = stencil_weights(np.asarray(t, dtype=float), ends, width)
    idx, w = stencil
    return np.einsum("kj,kj...->k...", w, values[idx])


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------
def path_acceleration(m: ChartMetric, traj: Trajectory) -> np.ndarray:
    """``nabla_U U`` measured from the sampled velocities, at every sample.

    Seven-point stencils keep the one-sided end values accurate enough to be
    differentiated again.
    """
    dU = curve_derivative(traj.t, traj.U, ends=True, width=7)
    return dU + np.einsum("kabc,kb,kc->ka", christoffel(m, traj.x), traj.U, traj.U)


def cc_residual(m: ChartMetric, traj: Trajectory) -> np.ndarray:
    """Covariant circle defect ``E_b`` at the interior samples, shape (N-2, n).

    ``dC_b`` is a five-point difference of the covariant components corrected
    by the Christoffel term.  Geodesic runs carry no acceleration state, so
    their ``C`` is measured from the path instead of assumed zero.
    """
    if len(traj) < 3:
        raise DegenerateSampling("need at least 3 samples for centred differences")
    pack = curvature(m, traj.x[1:-1])
    g = pack.g
    G_all = m.at(traj.x)
    C_all = path_acceleration(m, traj) if traj.kind == "geodesic" else traj.C
    C_low = np.einsum("kab,kb->ka", G_all, C_all)
    dC_raw = curve_derivative(traj.t, C_low)
    U, C = traj.U[1:-1], C_all[1:-1]
    C_mid = C_low[1:-1]
    dC = dC_raw - np.einsum("kcab,ka,kc->kb", pack.gamma, U, C_mid)
    PU = np.einsum("kbc,kc->kb", pack.schouten, U)
    PUU = np.einsum("kb,kb->k", PU, U)
    c2 = _dot(g, C, C)
    U_low = np.einsum("kab,kb->ka", g, U)
    return dC - PU + (c2 + PUU)[:, None] * U_low


def _covector_norms(ginv, w):
    return np.sqrt(np.maximum(np.einsum("ka,kab,kb->k", w, ginv, w), 0.0))


def cc_residual_norms(m: ChartMetric, traj: Trajectory) -> np.ndarray:
    E = cc_residual(m, traj)
    ginv = np.linalg.inv(m.at(traj.x[1:-1]))
    return _covector_norms(ginv, E)


def eigencheck(m: ChartMetric, x, U) -> np.ndarray:
    """``P_ab U^b - P(U, U) U_a`` (covariant); zero iff U is a Schouten eigenvector."""
    x, U = np.asarray(x, float), np.asarray(U, float)
    pack = curvature(m, x)
    PU = np.einsum("...bc,...c->...b", pack.schouten, U)
    PUU = np.einsum("...b,...b->...", PU, U)
    return PU - PUU[..., None] * np.einsum("...ab,...b->...a", pack.g, U)


def eigencheck_norm(m: ChartMetric, x, U) -> np.ndarray:
    x = np.asarray(x, float)
    e = eigencheck(m, x, U)
    ginv = np.linalg.inv(m.at(x))
    return np.sqrt(np.einsum("...a,...ab,...b->...", e, ginv, e))


def projective_param_defect(m: ChartMetric, x, U, C, dC) -> np.ndarray:
    """Defect of the preferred-parameter equation for a parameterised curve.

    ``U`` is the velocity, ``C = nabla_U U`` and ``dC = nabla_U C`` for any
    parameter.  Written homogeneously in the speed,

        U.dC/|U|^2 - 3 (U.C)^2/|U|^4 + 3/2 |C|^2/|U|^2 + P(U, U),

    which is the displayed equation at unit speed and vanishes on
    preferred (projective) parameterisations.
    """
    x = np.asarray(x, float)
    pack = curvature(m, x)
    g = pack.g
    uu = _dot(g, U, U)
    return (_dot(g, U, dC) / uu - 3.0 * _dot(g, U, C) ** 2 / uu**2
            + 1.5 * _dot(g, C, C) / uu + _dot(pack.schouten, U, U))


# ---------------------------------------------------------------------------
# conformal change of initial data
# ---------------------------------------------------------------------------
def matched_data(m: ChartMetric, omega: ConformalFactor, state: CurveState) -> CurveState:
    """Initial data for the same curve under ``omega**2 g``."""
    x = np.asarray(state.x, float)
    w = omega.values(x)
    _, ups, _ = omega.log_derivatives(x, order=1)
    ginv = np.linalg.inv(m.at(x))
    ups_up = ginv @ ups
    U, C = state.U, state.C
    return CurveState(x, U / w, (C - ups_up + (U @ ups) * U) / w**2)


def arc_length(points: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Length of a polyline; ``weights`` (per vertex) rescale it trapezoidally."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    if weights is None:
        return float(seg.sum())
    return float(np.sum(seg * 0.5 * (weights[1:] + weights[:-1])))


def _point_to_polyline(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    a, b = poly[:-1], poly[1:]
    ab = b - a
    L2 = np.maximum(np.einsum("ij,ij->i", ab, ab), 1e-300)
    tree = cKDTree(poly)
    spacing = np.sqrt(L2.max())
    out = np.empty(len(points))
    for i, p in enumerate(points):
        d0, _ = tree.query(p)
        idx = np.array(tree.query_ball_point(p, d0 + spacing))
        segs = np.unique(np.clip(np.concatenate([idx - 1, idx]), 0, len(ab) - 1))
        s = np.clip(np.einsum("ij,ij->i", p - a[segs], ab[segs]) / L2[segs], 0.0, 1.0)
        q = a[segs] + s[:, None] * ab[segs]
        out[i] = np.sqrt(np.min(np.sum((q - p) ** 2, axis=1)))
    return out


def hausdorff_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two polylines (chart coordinates)."""
    A, B = np.asarray(A, float), np.asarray(B, float)
    return float(max(_point_to_polyline(A, B).max(), _point_to_polyline(B, A).max()))


# ---------------------------------------------------------------------------
# rescaling a curve to a geodesic
# ---------------------------------------------------------------------------
def _smooth_step(u):
    """1 for u <= 1/4, 0 for u >= 1, smooth in between; returns value and two derivatives."""
    u = np.asarray(u, dtype=float)
    z = np.clip((1.0 - u) / 0.75, 0.0, 1.0)

    def bump(z):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            e = np.where(z > 0, np.exp(-1.0 / np.where(z > 0, z, 1.0)), 0.0)
            d1 = np.where(z > 0, e / np.where(z > 0, z, 1.0) ** 2, 0.0)
            d2 = np.where(z > 0, e * (1 - 2 * z) / np.where(z > 0, z, 1.0) ** 4, 0.0)
        return e, d1, d2

    a, a1, a2 = bump(z)
    b, b1, b2 = bump(1.0 - z)
    b1, b2 = -b1, b2
    s = a + b
    s1 = a1 + b1
    s2 = a2 + b2
    f = a / s
    f1 = (a1 * s - a * s1) / s**2
    f2 = (a2 * s - a * s2) / s**2 - 2 * f1 * s1 / s
    dz = -1.0 / 0.75
    inner = (u > 0.25) & (u < 1.0)
    return f, np.where(inner, f1 * dz, 0.0), np.where(inner, f2 * dz * dz, 0.0)


def _segments_min_distance(P, Q, R, S):
    """Minimum distance between segments PQ and RS (batched)."""
    d1, d2, r = Q - P, S - R, P - R
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    f = np.einsum("ij,ij->i", d2, r)
    c = np.einsum("ij,ij->i", d1, r)
    b = np.einsum("ij,ij->i", d1, d2)
    den = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(den > 1e-300, np.clip((b * f - c * e) / den, 0, 1), 0.0)
        t = np.where(e > 1e-300, (b * s + f) / e, 0.0)
    t = np.clip(t, 0, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(a > 1e-300, np.clip((b * t - c) / a, 0, 1), 0.0)
    diff = (P + s[:, None] * d1) - (R + t[:, None] * d2)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _check_embedded(points: np.ndarray, closed: bool) -> None:
    seg_len = np.linalg.norm(np.diff(points, axis=0), axis=1)
    if np.any(seg_len <= 0):
        raise DegenerateSampling("repeated consecutive sample points")
    mids = 0.5 * (points[1:] + points[:-1])
    tree = cKDTree(mids)
    pairs = np.array(sorted(tree.query_pairs(seg_len.max() * 1.01)), dtype=int).reshape(-1, 2)
    if len(pairs) == 0:
        return
    m = len(mids)
    gap = np.abs(pairs[:, 0] - pairs[:, 1])
    if closed:
        gap = np.minimum(gap, m - gap)
    pairs = pairs[gap > 1]
    if len(pairs) == 0:
        return
    i, j = pairs[:, 0], pairs[:, 1]
    d = _segments_min_distance(points[i], points[i + 1], points[j], points[j + 1])
    if np.any(d < 1e-9 * seg_len.max()):
        raise DegenerateSampling("sample polyline intersects itself")


class _SplineCurve:
    """Quintic interpolating spline of a sampled curve, evaluable on jets."""

    def __init__(self, points: np.ndarray, closed: bool):
        s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))])
        bc = "periodic" if closed else None
        polys = [PPoly.from_spline(make_interp_spline(s, points[:, i], k=5, bc_type=bc))
                 for i in range(points.shape[1])]
        self.breaks = polys[0].x
        self.coef = np.stack([p.c for p in polys], axis=-1)  # (k+1, m, d)
        self.s = s
        self.closed = closed
        self.polys = polys
        self.tree = cKDTree(points)

    @property
    def period(self) -> float:
        return self.s[-1]

    def _wrap(self, s):
        if self.closed:
            return np.mod(s, self.period)
        return np.clip(s, self.s[0], self.s[-1])

    def segment(self, s):
        idx = np.searchsorted(self.breaks, s, side="right") - 1
        return np.clip(idx, 0, self.coef.shape[1] - 1)

    def eval(self, s, nu: int = 0) -> np.ndarray:
        s = self._wrap(np.asarray(s, float))
        return np.stack([p(s, nu) for p in self.polys], axis=-1)

    def project(self, x: np.ndarray, iters: int = 30) -> np.ndarray:
        """Parameter of the nearest curve point (float Newton from the nearest sample)."""
        _, k = self.tree.query(x)
        s = self.s[k].astype(float)
        for _ in range(iters):
            r = self.eval(s) - x
            d1, d2 = self.eval(s, 1), self.eval(s, 2)
            phi = np.einsum("...i,...i->...", r, d1)
            dphi = np.einsum("...i,...i->...", d1, d1) + np.einsum("...i,...i->...", r, d2)
            step = phi / np.where(np.abs(dphi) > 1e-300, dphi, 1.0)
            s = self._wrap(s - step)
            if np.max(np.abs(step)) < 1e-15:
                break
        return s

    def taylor(self, s0: np.ndarray):
        """Local polynomial coefficients about ``s0``: ``gamma(s0 + d) = sum_k a[k] d^k``."""
        idx = self.segment(s0)
        c = self.coef[:, idx]  # (k+1, B, d) highest degree first
        deg = c.shape[0] - 1
        dx = s0 - self.breaks[idx]
        # re-expand sum_j c_j (dx + d)^(deg - j) in powers of d
        from math import comb
        a = np.zeros((deg + 1,) + c.shape[1:])
        for j in range(deg + 1):
            p = deg - j
            for k in range(p + 1):
                a[k] += c[j] * comb(p, k) * (dx ** (p - k))[..., None]
        return a


def _poly_jet(a, d, order: int = 0):
    """``sum_k a[k] d^k`` (or its ``order``-th derivative) for a jet ``d``; a has shape (K, B, dim)."""
    K = a.shape[0]
    coeffs = [a[k] for k in range(K)]
    for _ in range(order):
        coeffs = [k * coeffs[k] for k in range(1, len(coeffs))]
    out = []
    for i in range(a.shape[-1]):
        acc = None
        for k in range(len(coeffs) - 1, -1, -1):
            acc = d.scale(0.0).shift(coeffs[k][:, i]) if acc is None else (acc * d).shift(coeffs[k][:, i])
        out.append(acc)
    return out


def rescale_to_geodesic(points, closed: bool = False, radius_fraction: float = 0.1) -> ConformalFactor:
    """Conformal factor making a flat-space curve a geodesic.

    The curve is given by dense samples in R^2 or R^3.  Near the curve
    ``log Omega = chi * C(s*) . (x - gamma(s*))`` where ``s*`` is the nearest
    curve parameter, ``C`` the curvature vector and ``chi`` a cutoff equal to 1
    within half the tube radius and 0 beyond it.  Its gradient along the curve
    is exactly ``C``, which cancels the acceleration in the rescaled metric.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise DimensionError("curve samples must have shape (N, 2) or (N, 3)")
    if closed and np.linalg.norm(pts[0] - pts[-1]) > 1e-12 * np.abs(pts).max():
        pts = np.vstack([pts, pts[:1]])
    if len(pts) < 8:
        raise DegenerateSampling("need at least 8 samples")
    _check_embedded(pts, closed)
    spline = _SplineCurve(pts, closed)
    diam = float(np.max(np.linalg.norm(pts[:, None] - pts[None], axis=-1))) if len(pts) <= 2000 \
        else float(np.ptp(pts, axis=0).max() * np.sqrt(pts.shape[1]))
    radius = radius_fraction * diam

    def log_omega(x):
        jets = isinstance(x[0], Jet)
        xv = np.stack([xi.val if jets else np.asarray(xi, float) for xi in x], axis=-1)
        flat = np.atleast_2d(xv)
        s0 = spline.project(flat)
        if not jets:
            x = [Jet(flat[:, i], np.zeros((1, len(flat))), np.zeros((1, 1, len(flat))))
                 for i in range(flat.shape[1])]
        else:
            batch_shape = np.shape(x[0].val)
            if batch_shape == ():
                x = [Jet(np.atleast_1d(xi.val), xi.grad[:, None],
                         None if xi.hess is None else xi.hess[:, :, None]) for xi in x]
        a = spline.taylor(s0)
        # jet Newton on (gamma(s0 + d) - x) . gamma'(s0 + d) = 0, starting from d = 0
        d = x[0].scale(0.0)
        for _ in range(3):
            gam = _poly_jet(a, d)
            dg = _poly_jet(a, d, 1)
            ddg = _poly_jet(a, d, 2)
            r = [gi - xi for gi, xi in zip(gam, x)]
            phi = sum(ri * di for ri, di in zip(r, dg))
            dphi = sum(di * di for di in dg) + sum(ri * ei for ri, ei in zip(r, ddg))
            d = d - phi / dphi
        gam = _poly_jet(a, d)
        dg = _poly_jet(a, d, 1)
        ddg = _poly_jet(a, d, 2)
        speed2 = sum(di * di for di in dg)
        tang_acc = sum(di * ei for di, ei in zip(dg, ddg))
        Cvec = [(ei - di * (tang_acc / speed2)) / speed2 for di, ei in zip(dg, ddg)]
        off = [xi - gi for xi, gi in zip(x, gam)]
        dist2 = sum(oi * oi for oi in off)
        u = dist2 * (1.0 / radius**2)
        chi = u.apply(*_smooth_step(u.val))
        f = chi * sum(ci * oi for ci, oi in zip(Cvec, off))
        if not jets:
            return f.val if np.ndim(xv) > 1 else float(f.val[0])
        if np.shape(xv) == (len(xv),):
            return Jet(f.val[0], f.grad[:, 0], None if f.hess is None else f.hess[:, :, 0])
        return f

    def omega(x):
        f = log_omega(x)
        return f.exp() if isinstance(f, Jet) else np.exp(f)

    factor = ConformalFactor(omega, name="rescale_to_geodesic")
    object.__setattr__(factor, "log_omega", log_omega)
    object.__setattr__(factor, "radius", radius)
    return factor


def flat_circle_point(t, U, C) -> np.ndarray:
    """The flat-space circle through 0 with velocity ``2U`` and acceleration ``8C`` at t=0
    (closed form, chart parameter ``t``)."""
    t = np.asarray(t, float)[..., None]
    U, C = np.asarray(U, float), np.asarray(C, float)
    return 2.0 * (t * U + t**2 * C) / (1.0 + t**2 * (C @ C))


def sphere_geodesic_point(s, x0, U0) -> np.ndarray:
    """Great circle of the unit sphere in stereographic coordinates.

    Starts at chart point ``x0`` with velocity ``U0`` (unit for ``4/(1+|x|^2)^2 |dx|^2``)
    and is evaluated at arc length ``s``.
    """
    x0, U0 = np.asarray(x0, float), np.asarray(U0, float)
    r2 = x0 @ x0
    p0 = np.append(2.0 * x0, r2 - 1.0) / (1.0 + r2)
    v0 = np.append(2.0 * U0 / (1.0 + r2) - 4.0 * x0 * (x0 @ U0) / (1.0 + r2) ** 2,
                   4.0 * (x0 @ U0) / (1.0 + r2) ** 2)
    s = np.asarray(s, float)[..., None]
    p = np.cos(s) * p0 + np.sin(s) * v0
    return p[..., :-1] / (1.0 - p[..., -1:])


def rescaled_acceleration(m: ChartMetric, omega: ConformalFactor, x, U, C) -> np.ndarray:
    """Norm, for ``omega**2 g``, of the acceleration of a curve given by ``g`` data.

    ``U`` is the unit ``g`` velocity and ``C = nabla_U U`` at the points ``x``;
    the curve is reparameterised by ``omega**2 g`` arc length.
    """
    x = np.atleast_2d(np.asarray(x, float))
    U, C = np.atleast_2d(U), np.atleast_2d(C)
    gam = christoffel(m, x)
    dU = C - np.einsum("kabc,kb,kc->ka", gam, U, U)
    w = np.asarray(omega.values(x), float)
    _, dlw, _ = omega.log_derivatives(x, order=1)
    dw = np.einsum("ka,ka->k", dlw, U) * w
    Uh = U / w[:, None]
    dUh = (dU / w[:, None] - U * (dw / w**2)[:, None]) / w[:, None]
    m_hat = conformal_rescale(m, omega, x)
    acc = dUh + np.einsum("kabc,kb,kc->ka", christoffel(m_hat, x), Uh, Uh)
    return np.sqrt(np.einsum("ka,kab,kb->k", acc, m_hat.at(x), acc))


def write_trajectory_csv(path, traj: Trajectory, residual_norms: np.ndarray | None = None) -> None:
    """CSV with columns t, x1..xn, U1..Un, C1..Cn, normE (blank where undefined)."""
    n = traj.x.shape[1]
    header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"U{i + 1}" for i in range(n)]
              + [f"C{i + 1}" for i in range(n)] + ["normE"])
    E = np.full(len(traj), np.nan)
    if residual_norms is not None:
        if len(residual_norms) == len(traj) - 2:
            E[1:-1] = residual_norms
        elif len(residual_norms) == len(traj):
            E[:] = residual_norms
        else:
            raise DimensionError("residual column length does not match the trajectory")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(traj)):
            row = [traj.t[k], *traj.x[k], *traj.U[k], *traj.C[k]]
            w.writerow([repr(float(v)) for v in row] + ["" if np.isnan(E[k]) else repr(float(E[k]))])
