"""Matrix Lie algebras with a parabolic grading, the symmetry-algebra filtration
of a homogeneous curve, and a brute-force tangency oracle on flat space.

Three families are realised as (n+2) x (n+2) matrices, all graded by the
eigenvalues of ``ad E`` with ``E = diag(1, 0, ..., 0, -1)``:

* ``so(n+1,1)`` for conformal geometry in dimension n (|1|-graded),
* ``sl(n+2, R)`` for contact Legendrean geometry (|2|-graded),
* ``su(n+1,1)`` for CR geometry (|2|-graded, a real Lie algebra of complex
  matrices).

Every linear-algebra decision goes through the real vectorisation
:func:`vec`, so complex matrices are handled as real vectors of twice the
length and all spans are real spans.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateDirection, DegenerateSampling, DimensionError, SpecMismatch

__all__ = [
    "RANK_RTOL",
    "AlgebraSpec",
    "AlgebraElement",
    "Subspace",
    "FlatCurve",
    "ParameterSubspace",
    "Filtration",
    "vec",
    "numerical_rank",
    "nullspace",
    "so_conformal",
    "sl_contact",
    "su_cr",
    "make_algebra",
    "conformal_element",
    "conformal_blocks",
    "line_generator",
    "circle_generator",
    "legendrean_generator",
    "legendrean_blocks",
    "cr_generator",
    "cr_blocks",
    "bracket",
    "membership",
    "dkr_filtration",
    "graded_part",
    "verify_sym_constraints",
    "killing_field",
    "tangency_oracle",
    "conformal_sym_dim",
    "contact_sym_dim",
    "conformal_moduli_dim",
    "contact_moduli_dim",
]

RANK_RTOL = 1e-8
RANK_ATOL = 1e-12


# ---------------------------------------------------------------------------
# linear algebra helpers
# ---------------------------------------------------------------------------
def vec(M: np.ndarray) -> np.ndarray:
    """Real coordinates of a matrix (real and imaginary parts stacked if complex)."""
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return np.concatenate([M.real.ravel(), M.imag.ravel()])
    return M.ravel().astype(float)


def _rank_from_singular_values(s: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if s.size == 0 or s[0] <= RANK_ATOL:
        return 0
    return int(np.sum(s > max(rtol * s[0], RANK_ATOL)))


def numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    A = np.atleast_2d(A)
    if A.size == 0:
        return 0
    return _rank_from_singular_values(np.linalg.svd(A, compute_uv=False), rtol)


def nullspace(A: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the right nullspace of ``A``."""
    A = np.atleast_2d(A)
    ncols = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(ncols)
    _, s, vt = np.linalg.svd(A)
    r = _rank_from_singular_values(s, rtol)
    return vt[r:].T.copy()


def _orthonormal_columns(A: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the column span of ``A``."""
    if A.size == 0:
        return np.zeros((A.shape[0], 0))
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    return u[:, :_rank_from_singular_values(s, rtol)]


# ---------------------------------------------------------------------------
# algebras
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class AlgebraSpec:
    """A matrix Lie algebra with a homogeneous basis and its grading."""

    family: str
    n: int
    basis: tuple
    grading: tuple
    relations: Callable = field(repr=False)
    complex: bool = False
    depth: int = 1

    @property
    def tag(self) -> str:
        m = self.n + 2
        return {"SO(p,q)": f"so({m - 1},1)", "SL(m,R)": f"sl({m},R)",
                "SU(p,q)": f"su({m - 1},1)"}[self.family]

    @property
    def size(self) -> int:
        return self.n + 2

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def parabolic_indices(self) -> tuple:
        return tuple(i for i, k in enumerate(self.grading) if k >= 0)

    @property
    def parabolic_basis(self) -> list:
        return [self.basis[i] for i in self.parabolic_indices]

    def element(self, entries, check: bool = True) -> "AlgebraElement":
        dtype = complex if self.complex else float
        M = np.array(entries, dtype=dtype)
        if M.shape != (self.size, self.size):
            raise SpecMismatch(f"expected a {self.size}x{self.size} matrix, got {M.shape}")
        if check:
            r = self.relation_residual(M)
            if r > 1e-10 * max(1.0, np.abs(M).max()):
                raise SpecMismatch(f"matrix violates the defining relations of {self.tag} "
                                   f"(residual {r:.2e})")
        return AlgebraElement(M, self)

    def relation_residual(self, M) -> float:
        return float(self.relations(np.asarray(M)))

    def elements(self) -> list:
        return [AlgebraElement(B, self) for B in self.basis]

    def grading_element(self) -> np.ndarray:
        E = np.zeros((self.size, self.size))
        E[0, 0], E[-1, -1] = 1.0, -1.0
        return E

    @cached_property
    def basis_matrix(self) -> np.ndarray:
        """Columns are the real vectorisations of the basis."""
        return np.stack([vec(B) for B in self.basis], axis=1)

    def coordinates(self, M) -> np.ndarray:
        c, *_ = np.linalg.lstsq(self.basis_matrix, vec(M), rcond=None)
        return c

    def closure_residual(self) -> float:
        """Largest distance of a basis commutator from the span of the basis."""
        Q = _orthonormal_columns(self.basis_matrix)
        worst = 0.0
        for A, B in combinations(self.basis, 2):
            v = vec(A @ B - B @ A)
            worst = max(worst, float(np.linalg.norm(v - Q @ (Q.T @ v))))
        return worst

    def subspace(self, elements: Sequence) -> "Subspace":
        return Subspace.spanning(self, elements)

    @cached_property
    def parabolic(self) -> "Subspace":
        return Subspace(self, tuple(AlgebraElement(B, self) for B in self.parabolic_basis))

    def graded_subspace(self, min_grade: int) -> "Subspace":
        return Subspace(self, tuple(AlgebraElement(B, self)
                                    for B, k in zip(self.basis, self.grading) if k >= min_grade))

    def __repr__(self) -> str:
        return f"AlgebraSpec({self.tag}, n={self.n})"


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    entries: np.ndarray
    spec: AlgebraSpec

    @property
    def spec_tag(self) -> str:
        return self.spec.tag

    def vec(self) -> np.ndarray:
        return vec(self.entries)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vec()))

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_spec(self, other)
        return AlgebraElement(self.entries + other.entries, self.spec)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_spec(self, other)
        return AlgebraElement(self.entries - other.entries, self.spec)

    def __mul__(self, c: float) -> "AlgebraElement":
        return AlgebraElement(c * self.entries, self.spec)

    __rmul__ = __mul__

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(-self.entries, self.spec)

    def relation_residual(self) -> float:
        return self.spec.relation_residual(self.entries)


def _same_spec(a: AlgebraElement, b: AlgebraElement) -> None:
    if a.spec is not b.spec and (a.spec.tag != b.spec.tag or a.spec.n != b.spec.n):
        raise SpecMismatch(f"elements of {a.spec.tag} and {b.spec.tag} cannot be combined")


def _grades(basis, size: int) -> tuple:
    E = np.zeros((size, size))
    E[0, 0], E[-1, -1] = 1.0, -1.0
    out = []
    for B in basis:
        ad = E @ B - B @ E
        k = int(round(np.vdot(B, ad).real / np.vdot(B, B).real))
        if np.abs(ad - k * B).max() > 1e-12:
            raise DimensionError("basis element is not homogeneous for the grading")
        out.append(k)
    return tuple(out)


def _signature_q(size: int) -> np.ndarray:
    Q = np.eye(size)
    Q[0, 0] = Q[-1, -1] = 0.0
    Q[0, -1] = Q[-1, 0] = 1.0
    return Q


def conformal_element(n: int, X=None, F=None, lam: float = 0.0, Y=None) -> np.ndarray:
    """Matrix of the conformal Killing field with parameters (X, F, lam, Y).

    ``F`` is the skew matrix ``F^b_c``.
    """
    X = np.zeros(n) if X is None else np.asarray(X, dtype=float)
    Y = np.zeros(n) if Y is None else np.asarray(Y, dtype=float)
    F = np.zeros((n, n)) if F is None else np.asarray(F, dtype=float)
    M = np.zeros((n + 2, n + 2))
    M[0, 0], M[-1, -1] = lam, -lam
    M[0, 1:-1] = -Y
    M[1:-1, 0] = -X
    M[1:-1, 1:-1] = F
    M[1:-1, -1] = Y
    M[-1, 1:-1] = X
    return M


def conformal_blocks(M: np.ndarray) -> dict:
    """Inverse of :func:`conformal_element`."""
    M = np.asarray(M)
    return {"X": -M[1:-1, 0], "F": M[1:-1, 1:-1], "lam": M[0, 0], "Y": M[1:-1, -1]}


def so_conformal(n: int) -> AlgebraSpec:
    """``so(n+1,1)`` realised as conformal Killing fields on R^n."""
    if n < 1:
        raise DimensionError("n must be positive")
    eye = np.eye(n)
    basis = [conformal_element(n, X=eye[i]) for i in range(n)]
    for i, j in combinations(range(n), 2):
        F = np.zeros((n, n))
        F[i, j], F[j, i] = 1.0, -1.0
        basis.append(conformal_element(n, F=F))
    basis.append(conformal_element(n, lam=1.0))
    basis += [conformal_element(n, Y=eye[i]) for i in range(n)]
    Q = _signature_q(n + 2)

    def relations(M):
        QM = Q @ M
        return np.abs(QM + QM.T).max() + np.abs(np.imag(M)).max()

    return AlgebraSpec("SO(p,q)", n, tuple(basis), _grades(basis, n + 2), relations, False, 1)


def sl_contact(n: int) -> AlgebraSpec:
    """``sl(n+2, R)`` with the contact grading."""
    if n < 1:
        raise DimensionError("n must be positive")
    m = n + 2
    basis = []
    for i in range(m):
        for j in range(m):
            if i != j:
                B = np.zeros((m, m))
                B[i, j] = 1.0
                basis.append(B)
    for k in range(m - 1):
        B = np.zeros((m, m))
        B[k, k], B[k + 1, k + 1] = 1.0, -1.0
        basis.append(B)

    def relations(M):
        return abs(np.trace(M)) + np.abs(np.imag(M)).max()

    return AlgebraSpec("SL(m,R)", n, tuple(basis), _grades(basis, m), relations, False, 2)


def su_cr(n: int) -> AlgebraSpec:
    """``su(n+1,1)`` in the block form adapted to CR geometry."""
    if n < 1:
        raise DimensionError("n must be positive")
    m = n + 2
    basis = []

    def blank():
        return np.zeros((m, m), dtype=complex)

    B = blank()
    B[0, 0], B[-1, -1] = 1.0, -1.0
    basis.append(B)
    B = blank()
    B[0, 0], B[1, 1], B[-1, -1] = 1j, -2j, 1j
    basis.append(B)
    for k in range(n - 1):
        B = blank()
        B[1 + k, 1 + k], B[2 + k, 2 + k] = 1j, -1j
        basis.append(B)
    for j, k in combinations(range(n), 2):
        B = blank()
        B[1 + j, 1 + k], B[1 + k, 1 + j] = 1.0, -1.0
        basis.append(B)
        B = blank()
        B[1 + j, 1 + k] = B[1 + k, 1 + j] = 1j
        basis.append(B)
    for k in range(n):
        for z in (1.0, 1j):
            B = blank()  # r
            B[1 + k, -1] = z
            B[0, 1 + k] = -np.conj(z)
            basis.append(B)
            B = blank()  # s
            B[1 + k, 0] = z
            B[-1, 1 + k] = -np.conj(z)
            basis.append(B)
    B = blank()
    B[0, -1] = 1j
    basis.append(B)
    B = blank()
    B[-1, 0] = 1j
    basis.append(B)
    Q = _signature_q(m)

    def relations(M):
        M = np.asarray(M, dtype=complex)
        return np.abs(M.conj().T @ Q + Q @ M).max() + abs(np.trace(M))

    return AlgebraSpec("SU(p,q)", n, tuple(basis), _grades(basis, m), relations, True, 2)


_FAMILIES = {"SO(p,q)": so_conformal, "so": so_conformal, "conformal": so_conformal,
             "SL(m,R)": sl_contact, "sl": sl_contact, "legendrean": sl_contact,
             "SU(p,q)": su_cr, "su": su_cr, "cr": su_cr}


def make_algebra(family: str, n: int) -> AlgebraSpec:
    try:
        return _FAMILIES[family](n)
    except KeyError:
        raise SpecMismatch(f"unknown algebra family {family!r}") from None


# ---------------------------------------------------------------------------
# subspaces
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Subspace:
    """A real span of algebra elements with an independent basis."""

    ambient: AlgebraSpec
    basis: tuple

    @classmethod
    def spanning(cls, ambient: AlgebraSpec, elements: Sequence) -> "Subspace":
        """Subspace spanned by ``elements``, reduced to an independent basis."""
        elements = list(elements)
        for e in elements:
            if e.spec is not ambient:
                _same_spec(e, AlgebraElement(np.zeros(1), ambient))
        if not elements:
            return cls(ambient, ())
        A = np.stack([e.vec() for e in elements], axis=1)
        return cls.from_vectors(ambient, _orthonormal_columns(A))

    @classmethod
    def from_vectors(cls, ambient: AlgebraSpec, cols: np.ndarray) -> "Subspace":
        m = ambient.size
        out = []
        for v in np.asarray(cols).T:
            if ambient.complex:
                M = (v[: m * m] + 1j * v[m * m:]).reshape(m, m)
            else:
                M = v.reshape(m, m)
            out.append(AlgebraElement(M, ambient))
        return cls(ambient, tuple(out))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def matrix(self) -> np.ndarray:
        if not self.basis:
            return np.zeros((len(vec(np.zeros((self.ambient.size,) * 2,
                                              dtype=complex if self.ambient.complex else float))), 0))
        return np.stack([e.vec() for e in self.basis], axis=1)

    @cached_property
    def orthonormal(self) -> np.ndarray:
        return _orthonormal_columns(self.matrix)

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace.spanning(self.ambient, list(self.basis) + list(other.basis))

    def contains(self, other: "Subspace", tol: float = 1e-8) -> bool:
        return all(membership(e, self, tol)[0] for e in other.basis)

    def to_json(self) -> list:
        out = []
        for e in self.basis:
            M = e.entries
            if np.iscomplexobj(M):
                out.append([[[float(z.real), float(z.imag)] for z in row] for row in M])
            else:
                out.append(M.tolist())
        return out


def graded_part(S: Subspace, min_grade: int) -> Subspace:
    """Intersection of ``S`` with the sum of grades ``>= min_grade``."""
    G = S.ambient.graded_subspace(min_grade)
    A, B = S.orthonormal, G.orthonormal
    if A.shape[1] == 0 or B.shape[1] == 0:
        return Subspace(S.ambient, ())
    N = nullspace(np.hstack([A, -B]))
    return Subspace.from_vectors(S.ambient, _orthonormal_columns(A @ N[: A.shape[1]]))


def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    _same_spec(X, Y)
    return AlgebraElement(X.entries @ Y.entries - Y.entries @ X.entries, X.spec)


def membership(X: AlgebraElement, S: Subspace, tol: float = 1e-8):
    """Least-squares test of ``X`` in ``span(S)``; returns (bool, coefficients or None)."""
    if X.spec is not S.ambient:
        _same_spec(X, AlgebraElement(np.zeros(1), S.ambient))
    v = X.vec()
    if S.dim == 0:
        return (bool(np.linalg.norm(v) < tol), np.zeros(0) if np.linalg.norm(v) < tol else None)
    c, *_ = np.linalg.lstsq(S.matrix, v, rcond=None)
    ok = bool(np.linalg.norm(v - S.matrix @ c) < tol)
    return ok, (c if ok else None)


# ---------------------------------------------------------------------------
# the filtration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Filtration:
    chain: list
    sym: Subspace
    generator: AlgebraElement

    @property
    def dims(self) -> list:
        return [p.dim for p in self.chain]

    @property
    def stabilized_at(self) -> int:
        """Index ``l`` with ``p_l = p_infinity``."""
        return len(self.chain) - 1

    def __iter__(self):
        return iter((self.chain, self.sym))


def dkr_filtration(spec: AlgebraSpec, V: AlgebraElement, max_steps: int | None = None) -> Filtration:
    """Iterate ``p_{l+1} = {X in p_l : [X, V] in p_l + <V>}`` to its limit.

    Returns the chain ``[p_0, ..., p_inf]`` (each step strictly smaller, the
    last entry the stable one) and ``sym = p_inf + <V>``.
    """
    if V.spec is not spec:
        _same_spec(V, AlgebraElement(np.zeros(1), spec))
    if membership(V, spec.parabolic, 1e-8 * max(1.0, V.norm()))[0]:
        raise DegenerateDirection("generator lies in the parabolic subalgebra")
    if max_steps is None:
        max_steps = spec.dim + 1
    p = spec.parabolic
    chain = [p]
    for _ in range(max_steps):
        Q = _orthonormal_columns(np.hstack([p.matrix, V.vec()[:, None]]))
        if p.dim == 0:
            break
        W = np.stack([bracket(B, V).vec() for B in p.basis], axis=1)
        W = W - Q @ (Q.T @ W)
        N = nullspace(W)
        if N.shape[1] == p.dim:
            break
        p = Subspace.from_vectors(spec, _orthonormal_columns(p.matrix @ N))
        chain.append(p)
    sym = Subspace.spanning(spec, list(chain[-1].basis) + [V])
    return Filtration(chain, sym, V)


# ---------------------------------------------------------------------------
# generators and block read-offs
# ---------------------------------------------------------------------------
def _unit(U) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if abs(np.linalg.norm(U) - 1.0) > 1e-12:
        raise DegenerateDirection("U must have unit length")
    return U


def line_generator(spec: AlgebraSpec, U) -> AlgebraElement:
    """Generator of the straight line through the origin with direction U."""
    return spec.element(conformal_element(spec.n, X=_unit(U)))


def circle_generator(spec: AlgebraSpec, U, C) -> AlgebraElement:
    """Generator of the circle through the origin with velocity U and acceleration C."""
    U = _unit(U)
    C = np.asarray(C, dtype=float)
    if abs(U @ C) > 1e-12:
        raise DegenerateDirection("acceleration must be orthogonal to U")
    F = np.outer(U, C) - np.outer(C, U)
    return spec.element(conformal_element(spec.n, X=U, F=F, Y=(C @ C) * U))


def legendrean_generator(spec: AlgebraSpec, U, V) -> AlgebraElement:
    U, V = np.asarray(U, dtype=float), np.asarray(V, dtype=float)
    n = spec.n
    M = np.zeros((n + 2, n + 2))
    M[1:-1, 0] = U
    M[-1, 1:-1] = V
    return spec.element(M)


def legendrean_blocks(M: np.ndarray) -> dict:
    M = np.asarray(M)
    return {"a": M[0, 0], "Z": M[0, 1:-1], "b": M[0, -1], "X": M[1:-1, 0],
            "C": M[1:-1, 1:-1], "W": M[1:-1, -1], "d": M[-1, 0], "Y": M[-1, 1:-1],
            "e": M[-1, -1]}


def cr_generator(spec: AlgebraSpec, U) -> AlgebraElement:
    U = np.asarray(U, dtype=complex)
    n = spec.n
    M = np.zeros((n + 2, n + 2), dtype=complex)
    M[1:-1, 0] = U
    M[-1, 1:-1] = -U.conj()
    return spec.element(M)


def cr_blocks(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"lam": M[0, 0], "r": M[1:-1, -1], "q": M[0, -1] / 1j, "s": M[1:-1, 0],
            "C": M[1:-1, 1:-1], "p": M[-1, 0] / 1j}


def _parallel_coeff(v, U, tol):
    """(ok, f) with v = f U, f real (complex U allowed)."""
    U = np.asarray(U)
    f = np.vdot(U, v) / np.vdot(U, U)
    ok = np.linalg.norm(v - f * U) < tol
    return ok, f


def _check_conformal(M, data, tol, circle: bool) -> bool:
    b = conformal_blocks(M)
    U = np.asarray(data["U"], dtype=float)
    C = np.asarray(data.get("C", np.zeros_like(U)), dtype=float) if circle else np.zeros_like(U)
    okX, f = _parallel_coeff(b["X"], U, tol)
    if not okX:
        return False
    if np.linalg.norm(b["F"] @ U + f * C) > tol:
        return False
    if np.abs(b["F"] + b["F"].T).max() > tol:
        return False
    rest = b["Y"] - b["lam"] * C - b["F"] @ C
    return bool(_parallel_coeff(rest, U, tol)[0])


def _check_legendrean(M, data, tol) -> bool:
    b = legendrean_blocks(M)
    U, V = np.asarray(data["U"], dtype=float), np.asarray(data["V"], dtype=float)
    okX, f = _parallel_coeff(b["X"], U, tol)
    okZ, h = _parallel_coeff(b["Z"], V, tol)
    if not (okX and okZ):
        return False
    k = (b["a"] + b["e"]) / 2
    checks = [np.linalg.norm(b["Y"] - f * V), np.linalg.norm(b["W"] - h * U), abs(b["b"]),
              abs(b["d"]), np.linalg.norm(b["C"] @ U - k * U), np.linalg.norm(V @ b["C"] - k * V)]
    return bool(max(checks) < tol)


def _check_cr(M, data, tol) -> bool:
    M = np.asarray(M, dtype=complex)
    b = cr_blocks(M)
    U = np.asarray(data["U"], dtype=complex)
    okS, f = _parallel_coeff(b["s"], U, tol)
    okR, h = _parallel_coeff(b["r"], U, tol)
    if not (okS and okR) or abs(f.imag) > tol or abs(h.imag) > tol:
        return False
    theta = b["lam"].imag
    Mred = b["C"] - 1j * theta * np.eye(len(U))
    checks = [abs(b["q"]), abs(b["p"]), np.linalg.norm(Mred @ U),
              np.abs(Mred + Mred.conj().T).max(),
              abs(np.trace(Mred) + (len(U) + 2) * 1j * theta),
              abs(M[-1, -1] - (-b["lam"].real + 1j * theta))]
    return bool(max(checks) < tol)


_MODELS = {
    "conf_line": lambda M, d, t: _check_conformal(M, d, t, circle=False),
    "conf_circle": lambda M, d, t: _check_conformal(M, d, t, circle=True),
    "legendrean": _check_legendrean,
    "cr": _check_cr,
}


def verify_sym_constraints(sym, model: str, data: dict, tol: float = 1e-8) -> bool:
    """Do all basis elements satisfy the closed-form symmetry constraints of ``model``?

    ``sym`` may be a :class:`Subspace` or any iterable of matrices/elements.
    """
    try:
        check = _MODELS[model]
    except KeyError:
        raise SpecMismatch(f"unknown model tag {model!r}; known: {sorted(_MODELS)}") from None
    elements = sym.basis if isinstance(sym, Subspace) else sym
    for e in elements:
        M = e.entries if isinstance(e, AlgebraElement) else np.asarray(e)
        scale = max(1.0, float(np.abs(M).max()))
        if not check(M, data, tol * scale):
            return False
    return True


# ---------------------------------------------------------------------------
# flat curves and the tangency oracle
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FlatCurve:
    """A curve in flat R^n.

    ``kind`` is ``"line"``, ``"circle"`` or ``"sampled"``.  Lines and circles
    pass through the origin with unit velocity ``U`` and acceleration ``C``.
    Sampled curves carry either fixed ``(points, tangents)`` or a ``sampler``
    mapping a parameter array to ``(points, tangents)``.
    """

    n: int
    kind: str
    U: np.ndarray | None = None
    C: np.ndarray | None = None
    points: np.ndarray | None = None
    tangents: np.ndarray | None = None
    sampler: Callable | None = field(default=None, repr=False)
    t_range: tuple = (-1.5, 1.5)

    def __post_init__(self):
        if self.kind in ("line", "circle"):
            U = np.asarray(self.U, dtype=float)
            C = np.zeros(self.n) if self.C is None else np.asarray(self.C, dtype=float)
            if U.shape != (self.n,) or C.shape != (self.n,):
                raise DimensionError("U and C must have length n")
            if abs(np.linalg.norm(U) - 1.0) > 1e-12:
                raise DegenerateDirection("U must have unit length")
            if abs(U @ C) > 1e-12:
                raise DegenerateDirection("U and C must be orthogonal")
            if self.kind == "line" and np.any(C != 0):
                raise DegenerateDirection("a line has zero acceleration")
            object.__setattr__(self, "U", U)
            object.__setattr__(self, "C", C)
        elif self.kind == "sampled":
            if self.sampler is None and (self.points is None or self.tangents is None):
                raise DimensionError("sampled curve needs points and tangents or a sampler")
        else:
            raise DimensionError(f"unknown curve kind {self.kind!r}")

    @classmethod
    def line(cls, U) -> "FlatCurve":
        U = np.asarray(U, dtype=float)
        return cls(len(U), "line", U=U)

    @classmethod
    def circle(cls, U, C) -> "FlatCurve":
        U = np.asarray(U, dtype=float)
        return cls(len(U), "circle", U=U, C=np.asarray(C, dtype=float))

    @classmethod
    def parametric(cls, func: Callable, dfunc: Callable, n: int, t_range=(-1.0, 1.0)) -> "FlatCurve":
        def sampler(t):
            return np.array([func(s) for s in t]), np.array([dfunc(s) for s in t])
        return cls(n, "sampled", sampler=sampler, t_range=t_range)

    def sample(self, count: int):
        """``(points, tangents)`` at ``count`` parameter values."""
        t = np.linspace(*self.t_range, count)
        if self.kind in ("line", "circle"):
            U, C = self.U, self.C
            c2 = C @ C
            den = 1.0 + t**2 * c2
            pts = 2.0 * (np.outer(t, U) + np.outer(t**2, C)) / den[:, None]
            dnum = 2.0 * (U[None, :] + 2.0 * np.outer(t, C))
            num = 2.0 * (np.outer(t, U) + np.outer(t**2, C))
            tan = dnum / den[:, None] - num * (2.0 * t * c2 / den**2)[:, None]
            return pts, tan
        if self.sampler is not None:
            return self.sampler(t)
        idx = np.linspace(0, len(self.points) - 1, min(count, len(self.points))).round().astype(int)
        return np.asarray(self.points)[idx], np.asarray(self.tangents)[idx]


def killing_field(params: np.ndarray, n: int, x: np.ndarray) -> np.ndarray:
    """Value at ``x`` of the conformal Killing field with packed parameters.

    Packing: ``X`` (n), upper triangle of ``F`` row by row, ``lam``, ``Y`` (n).
    """
    X, F, lam, Y = unpack_parameters(params, n)
    x = np.asarray(x, dtype=float)
    return (X - x @ F.T + lam * x - np.asarray(x @ Y)[..., None] * x
            + 0.5 * np.sum(x * x, axis=-1, keepdims=True) * Y)


def parameter_count(n: int) -> int:
    return (n + 1) * (n + 2) // 2


def unpack_parameters(params: np.ndarray, n: int):
    params = np.asarray(params, dtype=float)
    if params.shape != (parameter_count(n),):
        raise DimensionError(f"expected {parameter_count(n)} parameters")
    X = params[:n]
    F = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    F[iu] = params[n:n + len(iu[0])]
    F = F - F.T
    lam = params[n + len(iu[0])]
    Y = params[-n:]
    return X, F, lam, Y


def pack_parameters(X, F, lam, Y) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    return np.concatenate([np.asarray(X, float), F[np.triu_indices(len(X), 1)], [lam],
                           np.asarray(Y, float)])


@dataclass(frozen=True)
class ParameterSubspace:
    """Span of Killing-field parameter vectors (columns of ``basis``)."""

    n: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def fields(self):
        return [unpack_parameters(c, self.n) for c in self.basis.T]

    def to_algebra(self, spec: AlgebraSpec) -> Subspace:
        """Image under the field-to-matrix dictionary."""
        if spec.family != "SO(p,q)" or spec.n != self.n:
            raise SpecMismatch("parameter subspace lives in the conformal algebra of R^n")
        elems = [spec.element(conformal_element(self.n, X, F, lam, Y)) for X, F, lam, Y in self.fields()]
        return Subspace.spanning(spec, elems)


def _tangency_system(points: np.ndarray, tangents: np.ndarray, n: int) -> np.ndarray:
    """Rows: normal components of the Killing field, linear in the parameters."""
    P = parameter_count(n)
    eye = np.eye(P)
    rows = []
    for x, u in zip(points, tangents):
        u = u / np.linalg.norm(u)
        proj = np.eye(n) - np.outer(u, u)
        cols = np.stack([killing_field(eye[k], n, x) for k in range(P)], axis=1)
        rows.append(proj @ cols)
    return np.vstack(rows)


def tangency_oracle(curve: FlatCurve, samples: int | None = None) -> ParameterSubspace:
    """Killing fields tangent to ``curve`` at every sample, by brute force.

    The rank of the stacked system is compared with the rank at twice the
    sampling density; disagreement means the samples were too few or
    degenerate and raises :class:`DegenerateSampling`.
    """
    n = curve.n
    P = parameter_count(n)
    if samples is None:
        samples = P
    if samples < P:
        raise DegenerateSampling(f"need at least {P} samples, got {samples}")
    pts, tan = curve.sample(samples)
    A = _tangency_system(pts, tan, n)
    pts2, tan2 = curve.sample(2 * samples)
    A2 = _tangency_system(pts2, tan2, n)
    N = nullspace(A)
    N2 = nullspace(A2)
    if N.shape[1] != N2.shape[1]:
        raise DegenerateSampling(
            f"rank did not plateau (nullity {N.shape[1]} vs {N2.shape[1]} at double density)")
    return ParameterSubspace(n, N2)


# ---------------------------------------------------------------------------
# dimension formulas
# ---------------------------------------------------------------------------
def conformal_sym_dim(n: int) -> int:
    return (n - 1) * (n - 2) // 2 + 3


def contact_sym_dim(n: int) -> int:
    return n * n - 2 * n + 4


def conformal_moduli_dim(n: int) -> int:
    return (n + 2) * (n + 1) // 2 - conformal_sym_dim(n)


def contact_moduli_dim(n: int) -> int:
    return (n + 2) ** 2 - 1 - contact_sym_dim(n)
