"""Curvature conditions for distinguished contact geodesics in contact Legendrean geometry.

Curvature is ingested, not derived.  A :class:`LegendreanSample` holds the
pieces of the curvature of an exact Weyl connection at one point, in the
chosen scale, using matrix storage

* ``P[a, b] = P_a^b``
* ``A_lo[a, b] = A_{ab}``  and  ``A_hi[a, b] = A^{ab}``  (both symmetric)
* ``T_lo[a] = T_a``  and  ``T_hi[a] = T^a``

A type-(c) contact direction is a pair ``(U^a, V_a)`` with ``U.V = 1``.  Such a
geodesic is distinguished iff ``K = U.T_lo + V.T_hi`` vanishes and ``(U, V)``
is an eigenvector, with eigenvalue ``Lambda``, of

    U^a P_a^b + V_a A^{ab} = Lambda U^b
    U^a A_{ab} + V_a P_b^a = Lambda V_b
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NormalizationError, SpecMismatch

__all__ = [
    "LegendreanSample",
    "LegendreanDirection",
    "ConstraintResult",
    "ScaleCheck",
    "ProbeResult",
    "lambda_K",
    "eigen_rows",
    "constraint_check",
    "einstein_scale_check",
    "corollary_equivalence_probe",
    "bgg_trivial_scale",
    "random_direction",
    "single_violation_battery",
    "SYMMETRY_TOL",
    "NORMALIZATION_TOL",
]

SYMMETRY_TOL = 1e-12
NORMALIZATION_TOL = 1e-10


def _square(a, n: int, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (n, n):
        raise DimensionError(f"{name} must have shape ({n}, {n}), got {a.shape}")
    return a


def _vector(a, n: int, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {a.shape}")
    return a


@dataclass(frozen=True)
class LegendreanSample:
    """Curvature data at one point, in a fixed scale.  Missing pieces default to zero."""

    n: int
    P: np.ndarray = None
    A_lo: np.ndarray = None
    A_hi: np.ndarray = None
    T_lo: np.ndarray = None
    T_hi: np.ndarray = None

    def __post_init__(self):
        n = self.n
        if n < 1:
            raise DimensionError("leg rank n must be positive")
        zero_m, zero_v = np.zeros((n, n)), np.zeros(n)
        set_ = object.__setattr__
        set_(self, "P", _square(zero_m if self.P is None else self.P, n, "P"))
        for name in ("A_lo", "A_hi"):
            a = _square(zero_m if getattr(self, name) is None else getattr(self, name), n, name)
            if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
                raise SpecMismatch(f"{name} is not symmetric")
            set_(self, name, a)
        for name in ("T_lo", "T_hi"):
            set_(self, name, _vector(zero_v if getattr(self, name) is None else getattr(self, name),
                                     n, name))

    @classmethod
    def zero(cls, n: int) -> "LegendreanSample":
        return cls(n)

    @classmethod
    def einstein(cls, n: int, lam: float) -> "LegendreanSample":
        """Data solving the pure-trace system with constant ``lam``."""
        return cls(n, P=lam * np.eye(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> "LegendreanSample":
        def sym():
            a = rng.normal(size=(n, n))
            return scale * (a + a.T) / 2
        return cls(n, P=scale * rng.normal(size=(n, n)), A_lo=sym(), A_hi=sym(),
                   T_lo=scale * rng.normal(size=n), T_hi=scale * rng.normal(size=n))

    def __add__(self, other: "LegendreanSample") -> "LegendreanSample":
        return LegendreanSample(self.n, self.P + other.P, self.A_lo + other.A_lo,
                                self.A_hi + other.A_hi, self.T_lo + other.T_lo,
                                self.T_hi + other.T_hi)

    def __mul__(self, c: float) -> "LegendreanSample":
        return LegendreanSample(self.n, c * self.P, c * self.A_lo, c * self.A_hi,
                                c * self.T_lo, c * self.T_hi)

    __rmul__ = __mul__

    def to_json(self) -> dict:
        return {"P": self.P.tolist(), "A_lo": self.A_lo.tolist(), "A_hi": self.A_hi.tolist(),
                "T_lo": self.T_lo.tolist(), "T_hi": self.T_hi.tolist()}

    @classmethod
    def from_json(cls, n: int, record: dict) -> "LegendreanSample":
        return cls(n, **{k: record.get(k) for k in ("P", "A_lo", "A_hi", "T_lo", "T_hi")})


@dataclass(frozen=True)
class LegendreanDirection:
    """Tangent ``(U^a, V_a)`` of a type-(c) contact geodesic, normalized by ``U.V = 1``."""

    U: np.ndarray
    V: np.ndarray
    tol: float = field(default=NORMALIZATION_TOL, compare=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        V = np.asarray(self.V, dtype=float)
        if U.ndim != 1 or U.shape != V.shape:
            raise DimensionError(f"U and V must be vectors of equal length, got {U.shape}, {V.shape}")
        pairing = float(U @ V)
        if abs(pairing - 1.0) > self.tol:
            raise NormalizationError(f"U.V = {pairing!r}, expected 1")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @classmethod
    def normalized(cls, U, v) -> "LegendreanDirection":
        """Rescale the covector ``v`` so that it pairs to 1 with ``U``."""
        U = np.asarray(U, dtype=float)
        v = np.asarray(v, dtype=float)
        pairing = float(U @ v)
        if abs(pairing) < 1e-8 * (np.linalg.norm(U) * np.linalg.norm(v) + 1e-300):
            raise NormalizationError("U and v are (nearly) annihilating; cannot normalize")
        return cls(U, v / pairing)

    @property
    def n(self) -> int:
        return len(self.U)


def random_direction(n: int, rng: np.random.Generator) -> LegendreanDirection:
    while True:
        U, v = rng.normal(size=n), rng.normal(size=n)
        if abs(U @ v) > 0.1 * np.linalg.norm(U) * np.linalg.norm(v):
            return LegendreanDirection.normalized(U, v)


def _match(s: LegendreanSample, d: LegendreanDirection):
    if s.n != d.n:
        raise DimensionError(f"sample has n={s.n} but direction has n={d.n}")


def lambda_K(s: LegendreanSample, d: LegendreanDirection) -> tuple:
    """``(Lambda, K)`` with ``Lambda = A_{ab}U^aU^b + P_a^b U^a V_b`` and ``K = U.T_lo + V.T_hi``."""
    _match(s, d)
    U, V = d.U, d.V
    lam = float(U @ s.A_lo @ U + U @ s.P @ V)
    K = float(U @ s.T_lo + V @ s.T_hi)
    return lam, K


def eigen_rows(s: LegendreanSample, d: LegendreanDirection) -> tuple:
    """Left-hand sides of the two eigen-conditions: ``(P^T U + A_hi V, A_lo U + P V)``."""
    _match(s, d)
    # vector-matrix order, shared with the CR rows so real data agrees bit for bit
    return d.U @ s.P + d.V @ s.A_hi, d.U @ s.A_lo + d.V @ np.ascontiguousarray(s.P.T)


@dataclass(frozen=True)
class ConstraintResult:
    passed: bool
    lam: float
    K: float
    row_U: np.ndarray
    row_V: np.ndarray

    @property
    def eigen_residual(self) -> float:
        return float(np.sqrt(self.row_U @ self.row_U + self.row_V @ self.row_V))

    def __iter__(self):
        return iter((self.passed, self.lam, {"K": self.K, "eigen": self.eigen_residual}))


def constraint_check(s: LegendreanSample, d: LegendreanDirection,
                     tol: float = 1e-9) -> ConstraintResult:
    """Is the contact geodesic through ``d`` distinguished for this curvature?"""
    lam, K = lambda_K(s, d)
    top, bottom = eigen_rows(s, d)
    rU, rV = top - lam * d.U, bottom - lam * d.V
    ok = abs(K) < tol and float(np.sqrt(rU @ rU + rV @ rV)) < tol
    return ConstraintResult(bool(ok), lam, K, rU, rV)


@dataclass(frozen=True)
class ScaleCheck:
    passed: bool
    lam: float
    lam_variation: float
    max_defect: float
    failures: tuple = ()

    def __iter__(self):
        return iter((self.passed, self.lam))


def einstein_scale_check(samples, tol: float = 1e-9) -> ScaleCheck:
    """Does the scale solve ``T = 0, A = 0, P = lambda id`` with one constant ``lambda``?

    ``lambda`` is read off as ``trace(P)/n`` at each sample; the pass requires
    every other component to vanish and the per-sample values to agree.
    """
    samples = list(samples)
    if not samples:
        raise DimensionError("no samples")
    lams, defects, failures = [], [], []
    for k, s in enumerate(samples):
        lam = float(np.trace(s.P)) / s.n
        parts = {
            "T_lo": np.linalg.norm(s.T_lo),
            "T_hi": np.linalg.norm(s.T_hi),
            "A_lo": np.linalg.norm(s.A_lo),
            "A_hi": np.linalg.norm(s.A_hi),
            "P": np.linalg.norm(s.P - lam * np.eye(s.n)),
        }
        worst = max(parts, key=parts.get)
        if parts[worst] >= tol:
            failures.append((k, worst, float(parts[worst])))
        lams.append(lam)
        defects.append(parts[worst])
    variation = max(lams) - min(lams)
    if variation >= tol:
        failures.append((None, "lambda", float(variation)))
    return ScaleCheck(not failures, float(np.mean(lams)), float(variation),
                      float(max(defects)), tuple(failures))


@dataclass(frozen=True)
class ProbeResult:
    consistent: bool
    einstein: bool
    trials_run: int
    witness: LegendreanDirection | None = None
    false_witness: LegendreanDirection | None = None

    def __bool__(self) -> bool:
        return self.consistent


def corollary_equivalence_probe(s: LegendreanSample, trials: int = 200, seed=0,
                                tol: float = 1e-9, widen: int = 10,
                                check=constraint_check, direction=random_direction,
                                scale_check=einstein_scale_check) -> ProbeResult:
    """Monte-Carlo check that "every direction passes" matches the pure-trace test.

    With pure-trace data every sampled direction must pass; otherwise a failing
    direction (the witness) must turn up, with the search widened ``widen``-fold
    before giving up.  A missing witness or a failing direction on pure-trace
    data makes the result inconsistent.
    """
    rng = np.random.default_rng(seed)
    einstein = scale_check([s], tol).passed
    budget = trials if einstein else trials * widen
    for k in range(budget):
        d = direction(s.n, rng)
        passed = check(s, d, tol).passed
        if einstein and not passed:
            return ProbeResult(False, True, k + 1, false_witness=d)
        if not einstein and not passed:
            return ProbeResult(True, False, k + 1, witness=d)
    return ProbeResult(einstein, einstein, budget)


def bgg_trivial_scale(s: LegendreanSample) -> tuple:
    """First BGG operator applied to the constant scale ``1``, in that same scale."""
    return -s.A_lo, -s.A_hi


def single_violation_battery(n: int, size: float = 1.0) -> list:
    """One sample per curvature component, with only that component switched on.

    Symmetric pieces are switched on as ``e_i e_j + e_j e_i`` (or ``e_i e_i``);
    trace-only parts of ``P`` are skipped since they do not violate anything.
    Returns ``(label, sample)`` pairs.
    """
    out = []
    eye = np.eye(n)
    for i in range(n):
        for j in range(n):
            if i == j and n == 1:
                continue
            P = np.zeros((n, n))
            P[i, j] = size
            out.append((f"P[{i},{j}]", LegendreanSample(n, P=P)))
        for name in ("T_lo", "T_hi"):
            out.append((f"{name}[{i}]", LegendreanSample(n, **{name: size * eye[i]})))
    for i in range(n):
        for j in range(i, n):
            S = np.outer(eye[i], eye[j])
            S = size * (S + S.T) / (2.0 if i == j else 1.0)
            for name in ("A_lo", "A_hi"):
                out.append((f"{name}[{i},{j}]", LegendreanSample(n, **{name: S})))
    return out
