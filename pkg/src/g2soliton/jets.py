"""Degree-2 forward-mode jets.

A :class:`Jet2` carries the value, gradient and (symmetric) Hessian of a
scalar quantity with respect to ``arity`` active variables.  All arrays may
carry leading batch dimensions, so a single jet can hold the Taylor data of
one expression at many points at once::

    value.shape == B
    grad.shape  == B + (n,)
    hess.shape  == B + (n, n)

Arithmetic follows the exact product/chain rules, so for closed-form inputs
every derivative is exact up to floating point rounding.
"""

from __future__ import annotations

import numbers

import numpy as np


class JetDomainError(ValueError):
    """Raised when a jet primitive is evaluated outside its domain."""


class ArityError(ValueError):
    """Raised when jets with different numbers of variables are mixed."""


class Jet2:
    __slots__ = ("value", "grad", "hess")

    __array_priority__ = 1000

    def __init__(self, value, grad, hess):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    # -- construction -------------------------------------------------

    @classmethod
    def constant(cls, value, arity: int) -> "Jet2":
        v = np.asarray(value, dtype=float)
        return cls(v, np.zeros(v.shape + (arity,)), np.zeros(v.shape + (arity, arity)))

    @classmethod
    def variable(cls, index: int, value, arity: int) -> "Jet2":
        """The jet of the coordinate function ``x[index]`` evaluated at ``value``."""
        v = np.asarray(value, dtype=float)
        g = np.zeros(v.shape + (arity,))
        g[..., index] = 1.0
        return cls(v, g, np.zeros(v.shape + (arity, arity)))

    @classmethod
    def variables(cls, points) -> list["Jet2"]:
        """Coordinate jets for an array of points with shape ``B + (arity,)``."""
        p = np.asarray(points, dtype=float)
        n = p.shape[-1]
        return [cls.variable(i, p[..., i], n) for i in range(n)]

    @property
    def arity(self) -> int:
        return self.grad.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"

    def __getitem__(self, idx) -> "Jet2":
        return Jet2(self.value[idx], self.grad[idx], self.hess[idx])

    # -- helpers ------------------------------------------------------

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            if other.arity != self.arity:
                raise ArityError(f"arity mismatch: {self.arity} vs {other.arity}")
            return other
        if isinstance(other, (numbers.Real, np.ndarray, np.floating)):
            return Jet2.constant(other, self.arity)
        return NotImplemented

    def _apply(self, f, df, d2f) -> "Jet2":
        """Chain rule for a scalar function with known first/second derivatives."""
        g = self.grad
        df_ = df[..., None]
        hess = df_[..., None] * self.hess + d2f[..., None, None] * (g[..., :, None] * g[..., None, :])
        return Jet2(f, df_ * g, hess)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        if isinstance(other, (numbers.Real, np.floating)):
            return Jet2(self.value * other, self.grad * other, self.hess * other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        a, b = self, o
        av, bv = a.value[..., None], b.value[..., None]
        grad = av * b.grad + bv * a.grad
        cross = a.grad[..., :, None] * b.grad[..., None, :]
        hess = (av[..., None] * b.hess + bv[..., None] * a.hess) + (cross + np.swapaxes(cross, -1, -2))
        return Jet2(a.value * b.value, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (numbers.Real, np.floating)):
            if other == 0:
                raise JetDomainError("division by zero")
            return self * (1.0 / other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.recip()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o * self.recip()

    def __pow__(self, r):
        if isinstance(r, Jet2):
            raise TypeError("jet exponents are not supported; use exp(b * log(a))")
        return power(self, r)

    # -- primitives ---------------------------------------------------

    def recip(self) -> "Jet2":
        v = self.value
        if np.any(v == 0):
            raise JetDomainError("reciprocal of zero")
        inv = 1.0 / v
        return self._apply(inv, -inv * inv, 2.0 * inv * inv * inv)

    def exp(self) -> "Jet2":
        e = np.exp(self.value)
        return self._apply(e, e, e)

    def log(self) -> "Jet2":
        v = self.value
        if np.any(v <= 0):
            raise JetDomainError("log of a non-positive value")
        inv = 1.0 / v
        return self._apply(np.log(v), inv, -inv * inv)

    def sqrt(self) -> "Jet2":
        v = self.value
        if np.any(v <= 0):
            raise JetDomainError("sqrt of a non-positive value")
        s = np.sqrt(v)
        return self._apply(s, 0.5 / s, -0.25 / (s * v))

    def sin(self) -> "Jet2":
        s, c = np.sin(self.value), np.cos(self.value)
        return self._apply(s, c, -s)

    def cos(self) -> "Jet2":
        s, c = np.sin(self.value), np.cos(self.value)
        return self._apply(c, -s, -c)

    def embed(self, arity: int, indices) -> "Jet2":
        """Re-express this jet in a larger variable set.

        ``indices[i]`` is the position of this jet's i-th variable among the
        ``arity`` new variables; derivatives along the others are zero.
        """
        idx = np.asarray(indices)
        shape = self.value.shape
        g = np.zeros(shape + (arity,))
        h = np.zeros(shape + (arity, arity))
        g[..., idx] = self.grad
        h[..., idx[:, None], idx[None, :]] = self.hess
        return Jet2(self.value, g, h)


def power(a: Jet2, r) -> Jet2:
    """``a ** r`` for a real exponent.

    Integer exponents accept any base (non-zero when negative); non-integer
    exponents require a strictly positive base.
    """
    r = float(r)
    v = a.value
    if r == 0.0:
        return Jet2.constant(np.ones_like(v), a.arity)
    if r.is_integer():
        if r < 0 and np.any(v == 0):
            raise JetDomainError("negative power of zero")
        if r == 1.0:
            return a
        k = int(r)
        return a._apply(v ** k, k * v ** (k - 1.0), k * (k - 1.0) * v ** (k - 2.0))
    if np.any(v <= 0):
        raise JetDomainError(f"non-integer power {r} of a non-positive value")
    p = v ** r
    return a._apply(p, r * p / v, r * (r - 1.0) * p / (v * v))


def _unary(name):
    def fn(a):
        if isinstance(a, Jet2):
            return getattr(a, name)()
        return getattr(np, name)(a)

    fn.__name__ = name
    return fn


exp = _unary("exp")
log = _unary("log")
sqrt = _unary("sqrt")
sin = _unary("sin")
cos = _unary("cos")


def recip(a):
    return a.recip() if isinstance(a, Jet2) else 1.0 / a


def compose(outer: Jet2, inner: list[Jet2]) -> Jet2:
    """Chain rule for ``F(u_1(x), ..., u_m(x))``.

    ``outer`` holds the jet of F with respect to its m arguments, evaluated at
    ``u(x)``; ``inner`` holds the jets of the u_i with respect to x.
    """
    if outer.arity != len(inner):
        raise ArityError("outer arity must equal the number of inner jets")
    n = inner[0].arity
    for u in inner:
        if u.arity != n:
            raise ArityError("inner jets must share one arity")
    J = np.stack([u.grad for u in inner], axis=-2)  # B + (m, n)
    grad = np.einsum("...i,...ij->...j", outer.grad, J)
    hess = np.einsum("...ik,...ij,...kl->...jl", outer.hess, J, J)
    for i, u in enumerate(inner):
        hess = hess + outer.grad[..., i, None, None] * u.hess
    return Jet2(outer.value, grad, hess)
