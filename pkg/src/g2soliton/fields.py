"""Scalar fields on coordinate charts, evaluable as :class:`~g2soliton.jets.Jet2`.

Fields are immutable.  ``eval_jet(points)`` takes an array whose last axis
has length ``arity`` and returns a jet with the remaining axes as batch
dimensions.  Closed-form fields are built by ordinary arithmetic on
:func:`coordinates` and other fields; grid-backed fields use second-order
central stencils on a :class:`Grid2`.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import jets
from .jets import Jet2


class OutOfDomainError(ValueError):
    """A field was evaluated where it is not defined (grid edge, masked cell, ...)."""


class ScalarField:
    """Base class.  Subclasses implement :meth:`eval_jet`."""

    arity: int = 2

    def eval_jet(self, points) -> Jet2:
        raise NotImplementedError

    def __call__(self, points) -> np.ndarray:
        """Values only."""
        return self.eval_jet(points).value

    # -- algebra ------------------------------------------------------

    def _wrap(self, other):
        if isinstance(other, ScalarField):
            if other.arity != self.arity:
                raise jets.ArityError(f"field arity mismatch: {self.arity} vs {other.arity}")
            return other
        if isinstance(other, numbers.Real):
            return Constant(float(other), self.arity)
        return NotImplemented

    def _binary(self, other, op, reflected=False):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return BinaryField(op, o, self) if reflected else BinaryField(op, self, o)

    def __add__(self, other):
        return self._binary(other, "add")

    def __radd__(self, other):
        return self._binary(other, "add", True)

    def __sub__(self, other):
        return self._binary(other, "sub")

    def __rsub__(self, other):
        return self._binary(other, "sub", True)

    def __mul__(self, other):
        return self._binary(other, "mul")

    def __rmul__(self, other):
        return self._binary(other, "mul", True)

    def __truediv__(self, other):
        return self._binary(other, "div")

    def __rtruediv__(self, other):
        return self._binary(other, "div", True)

    def __neg__(self):
        return UnaryField(lambda a: -a, self, "neg")

    def __pow__(self, r):
        return UnaryField(lambda a: jets.power(a, r), self, f"pow({r})")


class Constant(ScalarField):
    def __init__(self, value: float, arity: int = 2):
        self.value = float(value)
        self.arity = arity

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        return Jet2.constant(np.full(p.shape[:-1], self.value), self.arity)

    def __repr__(self):
        return f"Constant({self.value})"


class Coordinate(ScalarField):
    def __init__(self, index: int, arity: int = 2):
        self.index = index
        self.arity = arity

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        _check_arity(p, self.arity)
        return Jet2.variable(self.index, p[..., self.index], self.arity)

    def __repr__(self):
        return f"Coordinate({self.index})"


def coordinates(arity: int = 2) -> tuple[Coordinate, ...]:
    return tuple(Coordinate(i, arity) for i in range(arity))


class BinaryField(ScalarField):
    _ops = {
        "add": lambda a, b: a + b,
        "sub": lambda a, b: a - b,
        "mul": lambda a, b: a * b,
        "div": lambda a, b: a / b,
    }

    def __init__(self, op: str, a: ScalarField, b: ScalarField):
        self.op, self.a, self.b = op, a, b
        self.arity = a.arity

    def eval_jet(self, points) -> Jet2:
        return self._ops[self.op](self.a.eval_jet(points), self.b.eval_jet(points))

    def __call__(self, points) -> np.ndarray:
        # values only: children are evaluated value-only, so grid data is usable up to the edge
        return self._ops[self.op](_value_jet(self.a(points)), _value_jet(self.b(points))).value


class UnaryField(ScalarField):
    def __init__(self, fn: Callable[[Jet2], Jet2], a: ScalarField, name: str = "fn"):
        self.fn, self.a, self.name = fn, a, name
        self.arity = a.arity

    def eval_jet(self, points) -> Jet2:
        return self.fn(self.a.eval_jet(points))

    def __call__(self, points) -> np.ndarray:
        return self.fn(_value_jet(self.a(points))).value


def _value_jet(v) -> Jet2:
    """A jet with no active variables: arithmetic and domain checks on values alone."""
    return Jet2.constant(v, 0)


def _lift(name):
    def fn(f: ScalarField) -> ScalarField:
        return UnaryField(getattr(jets, name), f, name)

    fn.__name__ = name
    return fn


exp = _lift("exp")
log = _lift("log")
sqrt = _lift("sqrt")
sin = _lift("sin")
cos = _lift("cos")


class ClosedForm(ScalarField):
    """A field given by a Python function of the coordinate jets."""

    def __init__(self, fn: Callable[..., Jet2], arity: int = 2, name: str = "closed_form"):
        self.fn, self.arity, self.name = fn, arity, name

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        _check_arity(p, self.arity)
        out = self.fn(*Jet2.variables(p))
        if not isinstance(out, Jet2):
            out = Jet2.constant(np.broadcast_to(out, p.shape[:-1]), self.arity)
        return out

    def __repr__(self):
        return f"ClosedForm({self.name})"


class Lifted(ScalarField):
    """A field of (t1, t2) viewed on the 4D chart (t1, t2, z1, z2); z-derivatives are exactly zero."""

    def __init__(self, base: ScalarField):
        if base.arity != 2:
            raise jets.ArityError("only 2D base fields can be lifted")
        self.base = base
        self.arity = 4

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        _check_arity(p, 4)
        return self.base.eval_jet(p[..., :2]).embed(4, [0, 1])


class Composed(ScalarField):
    """``outer(inner_1(x), ..., inner_m(x))`` evaluated by the jet chain rule."""

    def __init__(self, outer: ScalarField, inner: Sequence[ScalarField]):
        if outer.arity != len(inner):
            raise jets.ArityError("outer arity must equal len(inner)")
        self.outer, self.inner = outer, list(inner)
        self.arity = self.inner[0].arity

    def eval_jet(self, points) -> Jet2:
        ij = [f.eval_jet(points) for f in self.inner]
        q = np.stack([u.value for u in ij], axis=-1)
        return jets.compose(self.outer.eval_jet(q), ij)


class Partial(ScalarField):
    """The partial derivative of ``base`` along variable ``index``.

    Value and gradient are exact (read off the base jet).  The Hessian needs
    third derivatives of the base and is obtained by central differences of
    the exact base Hessian with step ``step * (1 + |x|)``.
    """

    def __init__(self, base: ScalarField, index: int, step: float = 1e-4):
        self.base, self.index, self.step = base, index, step
        self.arity = base.arity

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        j = self.base.eval_jet(p)
        n, k = self.arity, self.index
        hess = np.zeros(p.shape[:-1] + (n, n))
        for m in range(n):
            d = self.step * (1.0 + np.abs(p[..., m]))
            dp = np.zeros_like(p)
            dp[..., m] = d
            hp = self.base.eval_jet(p + dp).hess[..., k, :]
            hm = self.base.eval_jet(p - dp).hess[..., k, :]
            hess[..., m, :] = (hp - hm) / (2.0 * d[..., None])
        hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
        return Jet2(j.grad[..., k], j.hess[..., k, :], hess)


def _check_arity(p: np.ndarray, arity: int) -> None:
    if p.shape[-1] != arity:
        raise jets.ArityError(f"points have {p.shape[-1]} coordinates, field expects {arity}")


# -- grids ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Grid2:
    """Uniform node grid on a (t1, t2) rectangle.

    ``mask`` (shape ``(n1, n2)``, True = excluded) marks nodes near singular
    loci; masked nodes never enter norms or stencils.
    """

    n1: int
    n2: int
    h1: float
    h2: float
    origin: tuple[float, float] = (0.0, 0.0)
    mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.n1 < 5 or self.n2 < 5:
            raise ValueError("grids need at least 5 nodes per axis")
        if not (self.h1 > 0 and self.h2 > 0):
            raise ValueError("grid spacings must be positive")
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != (self.n1, self.n2):
                raise ValueError("mask shape must be (n1, n2)")
            object.__setattr__(self, "mask", m)

    @classmethod
    def from_window(cls, window: Sequence[float], n1: int, n2: int | None = None, mask=None) -> "Grid2":
        a, b, c, d = (float(x) for x in window)
        n2 = n1 if n2 is None else n2
        return cls(n1, n2, (b - a) / (n1 - 1), (d - c) / (n2 - 1), (a, c), mask)

    @property
    def window(self) -> tuple[float, float, float, float]:
        a, c = self.origin
        return (a, a + (self.n1 - 1) * self.h1, c, c + (self.n2 - 1) * self.h2)

    @property
    def t1(self) -> np.ndarray:
        return self.origin[0] + self.h1 * np.arange(self.n1)

    @property
    def t2(self) -> np.ndarray:
        return self.origin[1] + self.h2 * np.arange(self.n2)

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(n1, n2, 2)``; axis 0 runs along t1."""
        T1, T2 = np.meshgrid(self.t1, self.t2, indexing="ij")
        return np.stack([T1, T2], axis=-1)

    def masked(self) -> np.ndarray:
        return np.zeros((self.n1, self.n2), bool) if self.mask is None else self.mask

    def with_mask(self, mask) -> "Grid2":
        return Grid2(self.n1, self.n2, self.h1, self.h2, self.origin, mask)

    def interior(self, margin: int = 2) -> np.ndarray:
        """Boolean array of nodes at least ``margin`` cells from every edge."""
        m = np.zeros((self.n1, self.n2), bool)
        m[margin : self.n1 - margin, margin : self.n2 - margin] = True
        return m

    def index_of(self, points, tol: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(points, dtype=float)
        x1 = (p[..., 0] - self.origin[0]) / self.h1
        x2 = (p[..., 1] - self.origin[1]) / self.h2
        i, j = np.rint(x1).astype(int), np.rint(x2).astype(int)
        if np.any(np.abs(x1 - i) > tol) or np.any(np.abs(x2 - j) > tol):
            raise OutOfDomainError("grid fields can only be evaluated at grid nodes")
        return i, j

    def refine(self, factor: int = 2) -> "Grid2":
        return Grid2(
            (self.n1 - 1) * factor + 1,
            (self.n2 - 1) * factor + 1,
            self.h1 / factor,
            self.h2 / factor,
            self.origin,
        )


def singular_mask(grid: Grid2, loci: Sequence[Callable[[np.ndarray, np.ndarray], np.ndarray]], margin: int = 3) -> np.ndarray:
    """Mask nodes within ``margin`` cells of the zero set of any locus function.

    A node is singular when a locus function is zero, non-finite, or changes
    sign towards a neighbouring node.
    """
    T1, T2 = np.meshgrid(grid.t1, grid.t2, indexing="ij")
    bad = np.zeros((grid.n1, grid.n2), bool)
    with np.errstate(all="ignore"):
        for fn in loci:
            s = np.asarray(fn(T1, T2), dtype=float) * np.ones_like(T1)
            bad |= ~np.isfinite(s) | (s == 0)
            sg = np.sign(s)
            flip1 = sg[1:, :] * sg[:-1, :] < 0
            flip2 = sg[:, 1:] * sg[:, :-1] < 0
            bad[1:, :] |= flip1
            bad[:-1, :] |= flip1
            bad[:, 1:] |= flip2
            bad[:, :-1] |= flip2
    if margin > 0 and bad.any():
        out = bad.copy()
        for di in range(-margin, margin + 1):
            for dj in range(-margin, margin + 1):
                out |= _shift(bad, di, dj)
        bad = out
    if grid.mask is not None:
        bad |= grid.mask
    return bad


def _shift(a: np.ndarray, di: int, dj: int) -> np.ndarray:
    out = np.zeros_like(a)
    n1, n2 = a.shape
    src = a[max(0, -di) : n1 - max(0, di), max(0, -dj) : n2 - max(0, dj)]
    out[max(0, di) : n1 - max(0, -di), max(0, dj) : n2 - max(0, -dj)] = src
    return out


class GridField(ScalarField):
    """A field known by its samples on a :class:`Grid2`.

    Derivatives use 3-point central differences per axis and the 4-point
    cross stencil for the mixed term (all O(h^2)).  Evaluation is restricted
    to nodes at least two cells from the grid edge whose stencils avoid
    masked nodes.
    """

    arity = 2

    def __init__(self, grid: Grid2, values):
        v = np.asarray(values, dtype=float)
        if v.shape != (grid.n1, grid.n2):
            v = v.reshape(grid.n1, grid.n2)
        self.grid = grid
        self.values = v

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        _check_arity(p, 2)
        g = self.grid
        i, j = g.index_of(p)
        if np.any(i < 2) or np.any(j < 2) or np.any(i > g.n1 - 3) or np.any(j > g.n2 - 3):
            raise OutOfDomainError("grid evaluation needs nodes at least 2 cells inside the boundary")
        if g.mask is not None:
            m = g.mask
            near = np.zeros(i.shape, bool)
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    near |= m[i + di, j + dj]
            if near.any():
                raise OutOfDomainError("grid evaluation touches a masked cell")
        u = self.values
        h1, h2 = g.h1, g.h2
        c = u[i, j]
        d1 = (u[i + 1, j] - u[i - 1, j]) / (2 * h1)
        d2 = (u[i, j + 1] - u[i, j - 1]) / (2 * h2)
        d11 = (u[i + 1, j] - 2 * c + u[i - 1, j]) / h1**2
        d22 = (u[i, j + 1] - 2 * c + u[i, j - 1]) / h2**2
        d12 = (u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1] + u[i - 1, j - 1]) / (4 * h1 * h2)
        grad = np.stack([d1, d2], axis=-1)
        hess = np.stack([np.stack([d11, d12], -1), np.stack([d12, d22], -1)], -2)
        return Jet2(c, grad, hess)

    def __call__(self, points) -> np.ndarray:
        """Nodal values; unlike :meth:`eval_jet` this works up to the grid edge."""
        i, j = self.grid.index_of(np.asarray(points, dtype=float))
        return self.values[i, j]

    @classmethod
    def sample(cls, f: ScalarField, grid: Grid2) -> "GridField":
        return cls(grid, f(grid.nodes()))


# -- antiderivatives along t2 -----------------------------------------------


class AntiderivativeT2(ScalarField):
    """``F(t1, t2) = int_{base}^{t2} integrand(t1, s) ds`` for a closed-form integrand.

    The value and the t1-derivatives are composite Gauss-Legendre quadratures
    of the integrand jet; the t2-derivatives are read off the integrand
    itself.  Changing ``base`` adds a function of t1 only.
    """

    def __init__(self, integrand: ScalarField, base: float = 0.0, panel: float = 0.25, order: int = 16):
        self.integrand, self.base = integrand, float(base)
        self.panel, self.order = panel, order
        self.arity = 2
        self._x, self._w = np.polynomial.legendre.leggauss(order)
        self._last = None  # (points, jet) of the most recent call

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        _check_arity(p, 2)
        last = self._last
        if last is not None and last[0].shape == p.shape and np.array_equal(last[0], p):
            return last[1]
        out = self._integrate(p)
        self._last = (p.copy(), out)
        return out

    def _integrate(self, p: np.ndarray) -> Jet2:
        t1, t2 = p[..., 0], p[..., 1]
        length = t2 - self.base
        npan = max(1, int(math.ceil(np.max(np.abs(length), initial=0.0) / self.panel)))
        # nodes on [base, t2] split into npan panels
        k = np.arange(npan)[:, None]
        s01 = ((k + 0.5 * (self._x[None, :] + 1.0)) / npan).ravel()
        w01 = np.tile(self._w / (2.0 * npan), npan)
        S = self.base + length[..., None] * s01
        q = np.stack([np.broadcast_to(t1[..., None], S.shape), S], axis=-1)
        ij = self.integrand.eval_jet(q)
        wl = w01 * length[..., None]
        value = np.sum(ij.value * wl, axis=-1)
        d1 = np.sum(ij.grad[..., 0] * wl, axis=-1)
        d11 = np.sum(ij.hess[..., 0, 0] * wl, axis=-1)
        at = self.integrand.eval_jet(p)
        grad = np.stack([d1, at.value], axis=-1)
        hess = np.stack([np.stack([d11, at.grad[..., 0]], -1), np.stack([at.grad[..., 0], at.grad[..., 1]], -1)], -2)
        return Jet2(value, grad, hess)


def trapezoid_antiderivative_t2(values: np.ndarray, grid: Grid2, base_index: int = 0) -> GridField:
    """Cumulative composite-trapezoid integral along t2, zero on column ``base_index``."""
    v = np.asarray(values, dtype=float).reshape(grid.n1, grid.n2)
    inc = 0.5 * grid.h2 * (v[:, 1:] + v[:, :-1])
    F = np.concatenate([np.zeros((grid.n1, 1)), np.cumsum(inc, axis=1)], axis=1)
    F -= F[:, base_index : base_index + 1]
    return GridField(grid, F)


# -- 1D fields defined by an autonomous ODE ------------------------------------


class ODEField(ScalarField):
    """A function ``y(t1)`` solving ``y' = rhs(y)``, stored on 1D nodes.

    Values come from cubic Hermite interpolation of the nodal data (with
    nodal slopes ``rhs(y)``); the derivative jets are then taken from the
    ODE itself, ``y' = rhs(y)``, ``y'' = rhs'(y) rhs(y)``, so the local
    2-jet is consistent with the ODE at every evaluation point.
    """

    arity = 2

    def __init__(self, t: np.ndarray, y: np.ndarray, rhs: Callable, drhs: Callable):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("ODE nodes must be increasing")
        self.rhs, self.drhs = rhs, drhs

    def interpolate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        lo, hi = self.t[0], self.t[-1]
        span = hi - lo
        if np.any(t < lo - 1e-12 * span) or np.any(t > hi + 1e-12 * span):
            raise OutOfDomainError(f"t1 outside the integrated range [{lo}, {hi}]")
        k = np.clip(np.searchsorted(self.t, t) - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[k], self.t[k + 1]
        h = t1 - t0
        s = (t - t0) / h
        y0, y1 = self.y[k], self.y[k + 1]
        m0, m1 = self.rhs(y0), self.rhs(y1)
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1

    def interpolant_derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.t, t) - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[k], self.t[k + 1]
        h = t1 - t0
        s = (t - t0) / h
        y0, y1 = self.y[k], self.y[k + 1]
        m0, m1 = self.rhs(y0), self.rhs(y1)
        d00 = (6 * s**2 - 6 * s) / h
        d10 = 3 * s**2 - 4 * s + 1
        d01 = (-6 * s**2 + 6 * s) / h
        d11 = 3 * s**2 - 2 * s
        return d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1

    def eval_jet(self, points) -> Jet2:
        p = np.asarray(points, dtype=float)
        _check_arity(p, 2)
        y = self.interpolate(p[..., 0])
        f = self.rhs(y)
        grad = np.zeros(y.shape + (2,))
        hess = np.zeros(y.shape + (2, 2))
        grad[..., 0] = f
        hess[..., 0, 0] = self.drhs(y) * f
        return Jet2(y, grad, hess)


# -- plain-text grid files ----------------------------------------------------

GRID_FILE_MAGIC = "# g2soliton-grid v1"


def write_grid(path, grid: Grid2, values) -> None:
    """Write samples in the documented plain-text layout.

    Line 1: the magic header.  Line 2: ``n1 n2 h1 h2 t1_0 t2_0``.  Then
    ``n1*n2`` values, one per line, t1-major (the t2 index runs fastest).
    Masked nodes are written as ``nan``.
    """
    v = np.asarray(values, dtype=float).reshape(grid.n1, grid.n2).copy()
    if grid.mask is not None:
        v[grid.mask] = np.nan
    lines = [GRID_FILE_MAGIC, f"{grid.n1} {grid.n2} {grid.h1:.17g} {grid.h2:.17g} {grid.origin[0]:.17g} {grid.origin[1]:.17g}"]
    lines += [f"{x:.17g}" for x in v.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid(path) -> GridField:
    lines = Path(path).read_text().split("\n")
    if not lines or lines[0].strip() != GRID_FILE_MAGIC:
        raise ValueError(f"{path}: not a grid file (missing header {GRID_FILE_MAGIC!r})")
    head = lines[1].split()
    if len(head) != 6:
        raise ValueError(f"{path}: malformed size line")
    n1, n2 = int(head[0]), int(head[1])
    h1, h2, o1, o2 = (float(x) for x in head[2:])
    vals = np.array([float(x) for x in lines[2:] if x.strip()])
    if vals.size != n1 * n2:
        raise ValueError(f"{path}: expected {n1 * n2} values, found {vals.size}")
    vals = vals.reshape(n1, n2)
    mask = ~np.isfinite(vals)
    grid = Grid2(n1, n2, h1, h2, (o1, o2), mask if mask.any() else None)
    return GridField(grid, vals)
