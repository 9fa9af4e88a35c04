"""Vectorized forward-mode dual numbers.

A :class:`Dual` carries a value array of shape ``S`` and a derivative array of
shape ``S + (k,)``.  Group laws written with plain arithmetic operate on floats,
numpy arrays and duals alike, which is how chart Jacobians are computed.
"""
from __future__ import annotations

import numpy as np


def _val(x):
    return x.val if isinstance(x, Dual) else np.asarray(x)


class Dual:
    __slots__ = ("val", "der")
    # numpy must hand mixed operations back to us
    __array_ufunc__ = None

    def __init__(self, val, der):
        self.val = np.asarray(val, dtype=float)
        self.der = np.asarray(der, dtype=float)

    @classmethod
    def seed(cls, values, k=None, offset=0):
        """Independent variables: component ``i`` gets unit direction ``offset + i``."""
        values = [np.asarray(v, dtype=float) for v in values]
        k = len(values) if k is None else k
        out = []
        for i, v in enumerate(values):
            d = np.zeros(v.shape + (k,))
            d[..., offset + i] = 1.0
            out.append(cls(v, d))
        return out

    def __repr__(self):
        return f"Dual({self.val!r}, {self.der!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.der + other.der)
        o = np.asarray(other)
        return Dual(self.val + o, self.der + np.zeros(o.shape + (1,)))

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.der * other.val[..., None] + self.val[..., None] * other.der,
            )
        o = np.asarray(other, dtype=float)
        return Dual(self.val * o, self.der * o[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return self * other.reciprocal()
        o = np.asarray(other, dtype=float)
        return Dual(self.val / o, self.der / o[..., None])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        inv = 1.0 / self.val
        return Dual(inv, -self.der * (inv * inv)[..., None])

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        p = float(p)
        if p == int(p) and p >= 0:
            out = 1.0
            for _ in range(int(p)):
                out = self * out
            return out if isinstance(out, Dual) else Dual(np.ones_like(self.val), 0 * self.der)
        v = self.val**p
        return Dual(v, self.der * (p * self.val ** (p - 1))[..., None])

    def __rpow__(self, base):
        return exp(self * np.log(base))


def exp(x):
    if isinstance(x, Dual):
        v = np.exp(x.val)
        return Dual(v, x.der * v[..., None])
    return np.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(np.log(x.val), x.der / x.val[..., None])
    return np.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        v = np.sqrt(x.val)
        return Dual(v, x.der / (2.0 * v)[..., None])
    return np.sqrt(x)


def value(x):
    """Strip derivative information."""
    return _val(x)


def jacobian(outputs, k, shape=()):
    """Stack derivative parts of ``outputs`` into an array of shape ``shape + (m, k)``."""
    rows = []
    for o in outputs:
        if isinstance(o, Dual):
            rows.append(np.broadcast_to(o.der, shape + (k,)) if o.der.shape != shape + (k,) else o.der)
        else:
            rows.append(np.zeros(shape + (k,)))
    if not rows:
        return np.zeros(shape + (0, k))
    return np.stack(rows, axis=-2)
