"""Independent reference computations used to check the package.

Curvature comes from sympy on hand-written metric formulas, so neither the
metric catalog nor the jet arithmetic is shared with the code under test.
"""
from functools import lru_cache

import numpy as np
import sympy as sp


def _symbols(n):
    return sp.symbols(f"x0:{n}", real=True)


def sphere_metric(n):
    x = _symbols(n)
    w = 4 / (1 + sum(xi**2 for xi in x)) ** 2
    return x, sp.diag(*([w] * n))


def perturbed_metric(n, eps=1):
    x = _symbols(n)
    entries = [1] * n
    entries[1] = 1 + eps * x[0] ** 2
    return x, sp.diag(*entries)


def warped_metric():
    """A non-diagonal 3-metric, not conformally flat in any obvious way."""
    x = _symbols(3)
    g = sp.Matrix([[1 + x[1] ** 2, x[0] * x[2] / 3, 0],
                   [x[0] * x[2] / 3, 2 + x[0] ** 2, x[1] / 4],
                   [0, x[1] / 4, 1 + x[2] ** 2 / 2]])
    return x, g


@lru_cache(maxsize=None)
def _curvature_functions(kind, n):
    x, g = {"sphere": lambda: sphere_metric(n), "perturbed": lambda: perturbed_metric(n),
            "warped": warped_metric}[kind]()
    ginv = g.inv()
    gam = [[[sum(ginv[a, d] * (sp.diff(g[d, c], x[b]) + sp.diff(g[d, b], x[c])
                               - sp.diff(g[b, c], x[d])) for d in range(n)) / 2
             for c in range(n)] for b in range(n)] for a in range(n)]
    # R^c_{d a b} = d_a G^c_{bd} - d_b G^c_{ad} + G^c_{ae} G^e_{bd} - G^c_{be} G^e_{ad}
    R = sp.MutableDenseNDimArray.zeros(n, n, n, n)
    for c in range(n):
        for d in range(n):
            for a in range(n):
                for b in range(a + 1, n):
                    val = (sp.diff(gam[c][b][d], x[a]) - sp.diff(gam[c][a][d], x[b])
                           + sum(gam[c][a][e] * gam[e][b][d] - gam[c][b][e] * gam[e][a][d]
                                 for e in range(n)))
                    R[c, d, a, b] = val
                    R[c, d, b, a] = -val
    ric = sp.Matrix(n, n, lambda b, d: sum(R[a, b, a, d] for a in range(n)))
    f_g = sp.lambdify(x, g, "numpy")
    f_gam = sp.lambdify(x, gam, "numpy")
    f_R = sp.lambdify(x, R.tolist(), "numpy")
    f_ric = sp.lambdify(x, ric, "numpy")
    return f_g, f_gam, f_R, f_ric


def curvature_oracle(kind, n, point):
    """Dict with g, gamma[a,b,c], riemann_up[c,d,a,b], ricci, scalar, schouten at one point."""
    f_g, f_gam, f_R, f_ric = _curvature_functions(kind, n)
    p = [float(v) for v in point]
    g = np.array(f_g(*p), dtype=float)
    ric = np.array(f_ric(*p), dtype=float)
    scal = float(np.trace(np.linalg.solve(g, ric)))
    P = (ric - scal / (2 * (n - 1)) * g) / (n - 2)
    return {"g": g, "gamma": np.array(f_gam(*p), dtype=float),
            "riemann_up": np.array(f_R(*p), dtype=float), "ricci": ric, "scalar": scal,
            "schouten": P}


def legendrean_rows_oracle(P, A_lo, A_hi, U, V):
    """Both eigen-rows written directly in index form with einsum."""
    row_up = np.einsum("ab,a->b", P, U) + np.einsum("ab,a->b", A_hi, V)
    row_down = np.einsum("ab,b->a", A_lo, U) + np.einsum("ab,b->a", P, V)
    lam = np.einsum("ab,a,b->", A_lo, U, U) + np.einsum("ab,a,b->", P, U, V)
    return row_up, row_down, lam


def cr_rows_oracle(h, P, A, A_bar, U, V):
    """CR eigen-rows by explicit loops (indices raised with the inverse Levi form)."""
    n = len(U)
    hinv = np.linalg.inv(h)
    top = np.zeros(n, complex)
    bottom = np.zeros(n, complex)
    for g_ in range(n):
        for a in range(n):
            for b in range(n):
                top[g_] += (U[a] * P[a, b] + V[a] * A_bar[a, b]) * hinv[b, g_]
                bottom[g_] += (U[a] * A[a, b] + V[a] * P[b, a]) * hinv[g_, b]
    lam = sum(A[a, b] * U[a] * U[b] + P[a, b] * U[a] * V[b] for a in range(n) for b in range(n))
    return top, bottom, lam
