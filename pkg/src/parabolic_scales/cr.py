"""Distinguished contact geodesics on CR manifolds of hypersurface type.

Only the unbarred legs are stored: ``h[a, b] = h_{a b-bar}``,
``P[a, b] = P_{a b-bar}``, ``A[a, b] = A_{ab}`` and ``T[a] = T_a``.  Barred
legs follow by conjugation.  Indices move with the Levi form; with
``hinv = inv(h)`` the eigen-conditions on a direction ``(U^a, V^{a-bar})`` read

    U P hinv       + V conj(A) hinv     = Lambda U
    U A hinv^T     + V P^T hinv^T       = Lambda V

with ``Lambda = A(U, U) + P(U, V)`` and ``K = U.T + V.conj(T)``.  For
``h = 1`` and real data this is the contact Legendrean system with
``A_lo = A_hi = A`` and ``T_lo = T_hi = T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NormalizationError, SingularMetric, SpecMismatch
from .legendrean import (
    SYMMETRY_TOL,
    NORMALIZATION_TOL,
    LegendreanDirection,
    LegendreanSample,
    ProbeResult,
    ScaleCheck,
    corollary_equivalence_probe,
)

__all__ = [
    "CRSample",
    "CRDirection",
    "CRConstraintResult",
    "RealityResult",
    "cr_lambda_K",
    "cr_constraint_check",
    "cr_einstein_check",
    "reality_check",
    "random_cr_direction",
    "cr_corollary_probe",
    "embed_legendrean",
    "cr_single_violation_battery",
]


def _cmat(a, n, name):
    a = np.asarray(a, dtype=complex)
    if a.shape != (n, n):
        raise DimensionError(f"{name} must have shape ({n}, {n}), got {a.shape}")
    return a


def _cvec(a, n, name):
    a = np.asarray(a, dtype=complex)
    if a.shape != (n,):
        raise DimensionError(f"{name} must have shape ({n},), got {a.shape}")
    return a


@dataclass(frozen=True)
class CRSample:
    """CR curvature at one point in the scale of a contact form.

    ``T_bar`` and ``A_bar`` are optional explicitly stored barred legs; when
    omitted they are derived by conjugation.  ``P`` is not forced to be
    Hermitian here so that non-real data can be ingested and rejected by the
    checks.
    """

    n: int
    h: np.ndarray = None
    P: np.ndarray = None
    A: np.ndarray = None
    T: np.ndarray = None
    T_bar: np.ndarray | None = None
    A_bar: np.ndarray | None = None

    def __post_init__(self):
        n = self.n
        if n < 1:
            raise DimensionError("CR dimension n must be positive")
        set_ = object.__setattr__
        h = _cmat(np.eye(n) if self.h is None else self.h, n, "h")
        if np.max(np.abs(h - h.conj().T)) > SYMMETRY_TOL:
            raise SingularMetric("Levi form is not Hermitian")
        if abs(np.linalg.det(h)) < 1e-12:
            raise SingularMetric("Levi form is degenerate")
        set_(self, "h", h)
        set_(self, "P", _cmat(np.zeros((n, n)) if self.P is None else self.P, n, "P"))
        A = _cmat(np.zeros((n, n)) if self.A is None else self.A, n, "A")
        if np.max(np.abs(A - A.T)) > SYMMETRY_TOL:
            raise SpecMismatch("A is not symmetric")
        set_(self, "A", A)
        set_(self, "T", _cvec(np.zeros(n) if self.T is None else self.T, n, "T"))
        if self.T_bar is not None:
            set_(self, "T_bar", _cvec(self.T_bar, n, "T_bar"))
        if self.A_bar is not None:
            set_(self, "A_bar", _cmat(self.A_bar, n, "A_bar"))

    @property
    def hinv(self) -> np.ndarray:
        return np.linalg.inv(self.h)

    @classmethod
    def einstein(cls, n: int, lam: float, h=None) -> "CRSample":
        h = np.eye(n) if h is None else np.asarray(h, dtype=complex)
        return cls(n, h=h, P=lam * h)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, h=None) -> "CRSample":
        def c(*shape):
            return rng.normal(size=shape) + 1j * rng.normal(size=shape)
        P = c(n, n)
        A = c(n, n)
        return cls(n, h=h, P=(P + P.conj().T) / 2, A=(A + A.T) / 2, T=c(n))

    @classmethod
    def from_json(cls, n: int, record: dict) -> "CRSample":
        def cplx(x):
            if x is None:
                return None
            a = np.asarray(x, dtype=float)
            return a[..., 0] + 1j * a[..., 1]
        return cls(n, **{k: cplx(record.get(k)) for k in ("h", "P", "A", "T", "T_bar", "A_bar")})

    def to_json(self) -> dict:
        def pair(a):
            return np.stack([a.real, a.imag], axis=-1).tolist()
        out = {"h": pair(self.h), "P": pair(self.P), "A": pair(self.A), "T": pair(self.T)}
        if self.T_bar is not None:
            out["T_bar"] = pair(self.T_bar)
        if self.A_bar is not None:
            out["A_bar"] = pair(self.A_bar)
        return out


@dataclass(frozen=True)
class CRDirection:
    """Tangent ``(U^a, V^{a-bar})`` normalized by ``h(U, V) = 1``."""

    U: np.ndarray
    V: np.ndarray
    h: np.ndarray
    tol: float = field(default=NORMALIZATION_TOL, compare=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        V = np.asarray(self.V, dtype=complex)
        h = np.asarray(self.h, dtype=complex)
        if U.ndim != 1 or U.shape != V.shape or h.shape != (len(U), len(U)):
            raise DimensionError("U, V and h have inconsistent shapes")
        pairing = U @ h @ V
        if abs(pairing - 1.0) > self.tol:
            raise NormalizationError(f"h(U, V) = {pairing!r}, expected 1")
        for name, val in (("U", U), ("V", V), ("h", h)):
            object.__setattr__(self, name, val)

    @classmethod
    def normalized(cls, U, v, h) -> "CRDirection":
        U = np.asarray(U, dtype=complex)
        v = np.asarray(v, dtype=complex)
        pairing = U @ np.asarray(h, dtype=complex) @ v
        if abs(pairing) < 1e-8 * (np.linalg.norm(U) * np.linalg.norm(v) + 1e-300):
            raise NormalizationError("h(U, v) vanishes; cannot normalize")
        return cls(U, v / pairing, h)

    @classmethod
    def real_curve(cls, U, h) -> "CRDirection":
        """Direction of a real curve: ``V`` proportional to ``conj(U)`` with a real factor."""
        U = np.asarray(U, dtype=complex)
        h = np.asarray(h, dtype=complex)
        q = (U @ h @ U.conj()).real
        if abs(q) < 1e-8 * (U.conj() @ U).real:
            raise NormalizationError("U is null for the Levi form")
        return cls(U, U.conj() / q, h)

    @property
    def n(self) -> int:
        return len(self.U)


def random_cr_direction(h, rng: np.random.Generator, real: bool = True) -> CRDirection:
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    scale = np.linalg.norm(h, 2)
    while True:
        U = rng.normal(size=n) + 1j * rng.normal(size=n)
        if real:
            if abs((U @ h @ U.conj()).real) > 0.1 * scale * (U.conj() @ U).real:
                return CRDirection.real_curve(U, h)
        else:
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            if abs(U @ h @ v) > 0.1 * scale * np.linalg.norm(U) * np.linalg.norm(v):
                return CRDirection.normalized(U, v, h)


def _match(s: CRSample, d: CRDirection):
    if s.n != d.n:
        raise DimensionError(f"sample has n={s.n} but direction has n={d.n}")
    if np.max(np.abs(s.h - d.h)) > SYMMETRY_TOL:
        raise NormalizationError("direction was normalized against a different Levi form")


def _barred(s: CRSample):
    T_bar = s.T.conj() if s.T_bar is None else s.T_bar
    A_bar = s.A.conj() if s.A_bar is None else s.A_bar
    return T_bar, A_bar


# Scalar contractions are expanded into real products so that real data
# reproduces the real-arithmetic results bit for bit.
def _parts(a):
    return np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag)


def _dot(x, y) -> complex:
    (xr, xi), (yr, yi) = _parts(x), _parts(y)
    return complex(xr @ yr - xi @ yi, xr @ yi + xi @ yr)


def _vecmat(x, M) -> np.ndarray:
    (xr, xi), (Mr, Mi) = _parts(x), _parts(M)
    return (xr @ Mr - xi @ Mi) + 1j * (xr @ Mi + xi @ Mr)


def cr_lambda_K(s: CRSample, d: CRDirection) -> tuple:
    _match(s, d)
    T_bar, _ = _barred(s)
    lam = _dot(_vecmat(d.U, s.A), d.U) + _dot(_vecmat(d.U, s.P), d.V)
    K = _dot(d.U, s.T) + _dot(d.V, T_bar)
    return lam, K


@dataclass(frozen=True)
class CRConstraintResult:
    passed: bool
    lam: complex
    K: complex
    row_U: np.ndarray
    row_V: np.ndarray

    @property
    def eigen_residual(self) -> float:
        return float(np.sqrt(np.vdot(self.row_U, self.row_U).real
                             + np.vdot(self.row_V, self.row_V).real))

    def __iter__(self):
        return iter((self.passed, self.lam))


def cr_constraint_check(s: CRSample, d: CRDirection, tol: float = 1e-9) -> CRConstraintResult:
    lam, K = cr_lambda_K(s, d)
    _, A_bar = _barred(s)
    hinv = s.hinv
    top = _vecmat(_vecmat(d.U, s.P) + _vecmat(d.V, A_bar), hinv)
    bottom = _vecmat(_vecmat(d.U, s.A) + _vecmat(d.V, s.P.T), hinv.T)
    rU, rV = top - lam * d.U, bottom - lam * d.V
    res = CRConstraintResult(False, lam, K, rU, rV)
    ok = abs(K) < tol and res.eigen_residual < tol
    return CRConstraintResult(bool(ok), lam, K, rU, rV)


@dataclass(frozen=True)
class RealityResult:
    residuals: dict
    T_bar: np.ndarray
    A_bar: np.ndarray

    @property
    def max(self) -> float:
        return max(self.residuals.values())


def reality_check(s: CRSample) -> RealityResult:
    """Deviation of stored data from ``T_bar = conj T``, ``A_bar = conj A``, ``P = P^H``.

    Residuals are Frobenius norms.  Barred legs that are not stored are
    derived, so their residual is 0 by construction.
    """
    T_bar, A_bar = _barred(s)
    residuals = {
        "T": float(np.linalg.norm(T_bar - s.T.conj())),
        "A": float(np.linalg.norm(A_bar - s.A.conj())),
        "P": float(np.linalg.norm(s.P - s.P.conj().T)),
    }
    return RealityResult(residuals, T_bar, A_bar)


def cr_einstein_check(samples, tol: float = 1e-9) -> ScaleCheck:
    """Does the scale solve ``T = 0, A = 0, P = lambda h`` with one real constant ``lambda``?"""
    samples = list(samples)
    if not samples:
        raise DimensionError("no samples")
    lams, defects, failures = [], [], []
    for k, s in enumerate(samples):
        lam = complex(np.trace(s.hinv @ s.P)) / s.n
        T_bar, A_bar = _barred(s)
        parts = {
            "T": np.linalg.norm(s.T),
            "T_bar": np.linalg.norm(T_bar),
            "A": np.linalg.norm(s.A),
            "A_bar": np.linalg.norm(A_bar),
            "P": np.linalg.norm(s.P - lam * s.h),
            "imag(lambda)": abs(lam.imag),
        }
        worst = max(parts, key=parts.get)
        if parts[worst] >= tol:
            failures.append((k, worst, float(parts[worst])))
        lams.append(lam.real)
        defects.append(parts[worst])
    variation = max(lams) - min(lams)
    if variation >= tol:
        failures.append((None, "lambda", float(variation)))
    return ScaleCheck(not failures, float(np.mean(lams)), float(variation),
                      float(max(defects)), tuple(failures))


def cr_corollary_probe(s: CRSample, trials: int = 200, seed=0, tol: float = 1e-9,
                       widen: int = 10, real: bool = True) -> ProbeResult:
    """CR version of :func:`corollary_equivalence_probe` over random directions."""
    return corollary_equivalence_probe(
        s, trials, seed, tol, widen,
        check=cr_constraint_check,
        direction=lambda n, rng: random_cr_direction(s.h, rng, real=real),
        scale_check=cr_einstein_check,
    )


def embed_legendrean(s: LegendreanSample, d: LegendreanDirection | None = None):
    """Real Legendrean data as CR data with ``h = 1``.

    Needs ``A_lo == A_hi`` and ``T_lo == T_hi``, the only real data that the
    unbarred CR legs can carry.  Returns the CR sample, and the direction too
    when one is given.
    """
    if np.max(np.abs(s.A_lo - s.A_hi)) > 0 or np.max(np.abs(s.T_lo - s.T_hi)) > 0:
        raise SpecMismatch("only samples with A_lo == A_hi and T_lo == T_hi embed")
    n = s.n
    cs = CRSample(n, h=np.eye(n), P=s.P, A=s.A_lo, T=s.T_lo)
    if d is None:
        return cs
    return cs, CRDirection(d.U, d.V, np.eye(n))


def cr_single_violation_battery(n: int, h=None, size: float = 1.0) -> list:
    """One-component violations of the CR pure-trace system (complex and real parts)."""
    h = np.eye(n) if h is None else np.asarray(h, dtype=complex)
    eye = np.eye(n)
    out = []
    for i in range(n):
        for j in range(n):
            if n == 1:
                continue
            if i == j:
                P = np.zeros((n, n), dtype=complex)
                P[i, i] = size
                out.append((f"P[{i},{i}]", CRSample(n, h=h, P=P)))
            elif i < j:
                for tag, c in (("re", 1.0), ("im", 1j)):
                    P = np.zeros((n, n), dtype=complex)
                    P[i, j] = c * size
                    P[j, i] = np.conj(c) * size
                    out.append((f"P[{i},{j}].{tag}", CRSample(n, h=h, P=P)))
        for tag, c in (("re", 1.0), ("im", 1j)):
            out.append((f"T[{i}].{tag}", CRSample(n, h=h, T=c * size * eye[i])))
            for j in range(i, n):
                S = np.outer(eye[i], eye[j])
                S = (S + S.T) / (2.0 if i == j else 1.0)
                out.append((f"A[{i},{j}].{tag}", CRSample(n, h=h, A=c * size * S)))
    return out
