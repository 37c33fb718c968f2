"""Second-order forward-mode differentiation.

A :class:`Jet` carries a value together with its gradient and Hessian with
respect to ``n`` independent variables.  Arithmetic on jets is truncated
Taylor arithmetic, so evaluating an ordinary expression on jets yields
first and second derivatives exact to roundoff.

Jets are batched: ``val`` may have any shape ``B`` and then ``grad`` has
shape ``(n,) + B`` and ``hess`` shape ``(n, n) + B``.  One evaluation of a
metric function on batched jets gives derivatives at a whole set of points.

Metric functions written with ``+ - * / **`` and the numpy ufuncs ``exp``,
``log``, ``sqrt``, ``sin``, ``cos``, ``tanh`` work unchanged on object arrays
of jets (numpy dispatches those ufuncs to the methods of the same name).
"""
from __future__ import annotations

from typing import Callable

import numpy as np


class Jet:
    """Truncated Taylor polynomial ``v + g.dx + 1/2 dx.H.dx``.

    ``hess`` is ``None`` for first-order jets; mixing orders degrades to
    first order.
    """

    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess=None):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variables(cls, x, order: int = 2) -> np.ndarray:
        """Independent variables seeded at ``x`` (shape ``(n,)`` or ``(B, n)``)."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        batch = x.shape[:-1]
        out = np.empty(n, dtype=object)
        for i in range(n):
            grad = np.zeros((n,) + batch)
            grad[i] = 1.0
            hess = np.zeros((n, n) + batch) if order >= 2 else None
            out[i] = cls(x[..., i].copy() if batch else float(x[i]), grad, hess)
        return out

    def _chain(self, f0, f1, f2) -> "Jet":
        g = f1 * self.grad
        if self.hess is None:
            return Jet(f0, g)
        return Jet(f0, g, f1 * self.hess + f2 * (self.grad[:, None] * self.grad[None, :]))

    def __repr__(self) -> str:
        return f"Jet({self.val!r})"

    def __add__(self, other):
        if isinstance(other, Jet):
            h = None if self.hess is None or other.hess is None else self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, h)
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, Jet):
            h = None if self.hess is None or other.hess is None else self.hess - other.hess
            return Jet(self.val - other.val, self.grad - other.grad, h)
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            g = a.val * b.grad + b.val * a.grad
            if a.hess is None or b.hess is None:
                return Jet(a.val * b.val, g)
            cross = a.grad[:, None] * b.grad[None, :]
            return Jet(a.val * b.val, g,
                       a.val * b.hess + b.val * a.hess + cross + cross.swapaxes(0, 1))
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Jet(self.val * other, self.grad * other,
                   None if self.hess is None else self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        r = 1.0 / self.val
        return self._chain(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, np.ndarray):
            return NotImplemented
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return (self.log() * p).exp()
        if p == 2:
            return self * self
        if p == 1:
            return self
        if p == 0:
            return Jet(np.ones_like(self.val), 0.0 * self.grad,
                       None if self.hess is None else 0.0 * self.hess)
        v = self.val
        return self._chain(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def __rpow__(self, base):
        return (self * float(np.log(base))).exp()

    def exp(self):
        e = np.exp(self.val)
        return self._chain(e, e, e)

    def log(self):
        v = self.val
        return self._chain(np.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self):
        s = np.sqrt(self.val)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.val))

    def square(self):
        return self * self

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)

    def tanh(self):
        t = np.tanh(self.val)
        d = 1.0 - t * t
        return self._chain(t, d, -2.0 * t * d)

    def arctan(self):
        v = self.val
        d = 1.0 / (1.0 + v * v)
        return self._chain(np.arctan(v), d, -2.0 * v * d * d)

    def apply(self, f0, f1, f2) -> "Jet":
        """Compose with a scalar function given its value and two derivatives at ``val``."""
        return self._chain(f0, f1, f2)

    # Binary operators defer to numpy for ndarray operands (elementwise over
    # object arrays); these two treat an array as a per-batch-entry constant.
    def scale(self, a) -> "Jet":
        a = np.asarray(a, dtype=float)
        return Jet(self.val * a, self.grad * a, None if self.hess is None else self.hess * a)

    def shift(self, a) -> "Jet":
        return Jet(self.val + np.asarray(a, dtype=float), self.grad, self.hess)


def value(a):
    """Value part of a jet, or ``a`` itself for plain numbers."""
    return a.val if isinstance(a, Jet) else a


def unpack(entries, n: int, batch: tuple = (), order: int = 2):
    """Split an array of jets/numbers into (values, gradients, Hessians).

    Output arrays put the batch shape first and derivative indices next, so a
    matrix-valued function gives ``val[..., i, j]``, ``grad[..., k, i, j]`` and
    ``hess[..., k, l, i, j]``.
    """
    arr = np.asarray(entries, dtype=object)
    shape = arr.shape
    val = np.zeros(batch + shape)
    grad = np.zeros(batch + (n,) + shape)
    hess = np.zeros(batch + (n, n) + shape) if order >= 2 else None
    nb = len(batch)
    lead = (slice(None),) * nb
    for idx in np.ndindex(shape):
        e = arr[idx]
        if isinstance(e, Jet):
            val[lead + idx] = e.val
            grad[lead + (slice(None),) + idx] = np.moveaxis(e.grad, 0, -1)
            if hess is not None:
                if e.hess is None:
                    raise ValueError("first-order jet where a second-order jet was required")
                hess[lead + (slice(None), slice(None)) + idx] = np.moveaxis(e.hess, (0, 1), (-2, -1))
        else:
            val[lead + idx] = np.asarray(e, dtype=float)
    return val, grad, hess


def derivatives(func: Callable, x, order: int = 2):
    """Value, gradient and Hessian of ``func`` at ``x`` by jet evaluation.

    ``x`` has shape ``(n,)`` or ``(B, n)``; ``func`` maps a point (object array
    of jets) to a scalar or an array of jets/numbers.
    """
    x = np.asarray(x, dtype=float)
    out = func(Jet.variables(x, order=order))
    return unpack(out, x.shape[-1], x.shape[:-1], order=order)


def matrix(rows) -> np.ndarray:
    """Object array from nested rows, safe for mixing jets and constants."""
    rows = list(rows)
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            out[i, j] = e
    return out
