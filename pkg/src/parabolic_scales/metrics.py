"""A small catalog of chart metrics used by tests, demos and the CLI."""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .jets import matrix
from .riemann_engine import ChartMetric

__all__ = [
    "flat",
    "round_sphere",
    "hyperbolic_ball",
    "fubini_study",
    "perturbed_diagonal",
    "polynomial_metric",
    "get_metric",
    "METRICS",
]


def _sq_norm(x):
    total = 0.0
    for xi in x:
        total = total + xi * xi
    return total


def _conformally_flat(n: int, factor):
    def g(x):
        w = factor(x)
        return matrix([[w if i == j else 0.0 for j in range(n)] for i in range(n)])
    return g


def flat(n: int = 3) -> ChartMetric:
    return ChartMetric(n, _conformally_flat(n, lambda x: 1.0), name="flat",
                       domain_hint=(-5.0, 5.0), params={"n": n})


def round_sphere(n: int = 3) -> ChartMetric:
    """Unit sphere in stereographic coordinates; the equator is ``|x| = 1``."""
    return ChartMetric(n, _conformally_flat(n, lambda x: 4.0 / (1.0 + _sq_norm(x)) ** 2),
                       name="round_sphere", domain_hint=(-3.0, 3.0), params={"n": n})


def hyperbolic_ball(n: int = 3) -> ChartMetric:
    """Poincare ball model of curvature -1."""
    half = 0.9 / np.sqrt(n)
    return ChartMetric(n, _conformally_flat(n, lambda x: 4.0 / (1.0 - _sq_norm(x)) ** 2),
                       name="hyperbolic_ball", domain_hint=(-half, half), params={"n": n})


def fubini_study() -> ChartMetric:
    """Fubini-Study metric on CP^2 in the affine chart, real coordinates (x1, x2, y1, y2).

    Holomorphic sectional curvature 4, so the metric is Einstein.
    """
    def g(p):
        x, y = p[:2], p[2:]
        s = 1.0 + _sq_norm(p)
        re = [[(1.0 / s if i == j else 0.0) - (x[i] * x[j] + y[i] * y[j]) / (s * s)
               for j in range(2)] for i in range(2)]
        im = [[(x[i] * y[j] - x[j] * y[i]) / (s * s) for j in range(2)] for i in range(2)]
        rows = []
        for i in range(2):
            rows.append([re[i][0], re[i][1], -im[i][0], -im[i][1]])
        for i in range(2):
            rows.append([im[i][0], im[i][1], re[i][0], re[i][1]])
        return matrix(rows)

    return ChartMetric(4, g, name="fubini_study", domain_hint=(-40.0, 40.0), params={})


def perturbed_diagonal(n: int = 4, eps: float = 1.0) -> ChartMetric:
    """``diag(1, 1 + eps x0^2, 1, ...)``: a curved surface times flat space.

    Not Einstein and not conformally flat for ``n >= 4``.
    """
    if n < 3:
        raise ConfigError("perturbed_diagonal needs n >= 3")

    def g(x):
        diag = [1.0] * n
        diag[1] = 1.0 + eps * x[0] * x[0]
        return matrix([[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)])

    return ChartMetric(n, g, name="perturbed_diagonal", domain_hint=(-3.0, 3.0),
                       params={"n": n, "eps": eps})


def polynomial_metric(spec: dict) -> ChartMetric:
    """Metric with polynomial components.

    ``spec = {"n": 3, "components": {"i,j": [[coef, [e0, e1, ...]], ...]}}``;
    unlisted components on the diagonal default to 1, off-diagonal to 0.
    Entries are symmetrised from whichever of ``i,j`` / ``j,i`` is given.
    """
    try:
        n = int(spec["n"])
        comps = spec.get("components", {})
        table = {}
        for key, terms in comps.items():
            i, j = (int(t) for t in key.split(","))
            if not (0 <= i < n and 0 <= j < n):
                raise ConfigError(f"component index {key} out of range for n={n}")
            parsed = [(float(c), [int(e) for e in exps]) for c, exps in terms]
            for _, exps in parsed:
                if len(exps) != n or min(exps, default=0) < 0:
                    raise ConfigError(f"bad exponent vector {exps} in component {key}")
            table[(i, j)] = table[(j, i)] = parsed
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed polynomial metric: {exc}") from exc

    def poly(x, terms):
        total = 0.0
        for c, exps in terms:
            mono = c
            for xi, e in zip(x, exps):
                if e:
                    mono = mono * xi ** e
            total = total + mono
        return total

    def g(x):
        return matrix([[poly(x, table[(i, j)]) if (i, j) in table else (1.0 if i == j else 0.0)
                        for j in range(n)] for i in range(n)])

    dom = spec.get("domain", 1.0)
    return ChartMetric(n, g, name=spec.get("name", "polynomial"), domain_hint=(-dom, dom),
                       params={"spec": spec})


METRICS = {
    "flat": flat,
    "round_sphere": round_sphere,
    "hyperbolic_ball": hyperbolic_ball,
    "fubini_study": fubini_study,
    "perturbed_diagonal": perturbed_diagonal,
    "polynomial": polynomial_metric,
}


def get_metric(name: str, **params) -> ChartMetric:
    try:
        factory = METRICS[name]
    except KeyError:
        raise ConfigError(f"unknown metric {name!r}; known: {sorted(METRICS)}") from None
    if name == "polynomial":
        return factory(params)
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for metric {name!r}: {exc}") from exc
