"""Solvers for the constraint equations: linear second-order PDEs in (t1, t2),
the Liouville-type equation ``P_11 + e0 P_22 = Lambda exp(-2P)``, and the ODE
``R' = R^{3/2} + c``.

Discretization is second order on uniform grids.  Elliptic problems use
red-black SOR (Newton outer iteration for Liouville); hyperbolic problems are
marched explicitly in t2 with a leapfrog scheme.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fields as F
from .fields import Grid2, GridField, ODEField, ScalarField
from .jets import Jet2

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    pass


class InstabilityError(SolverError):
    pass


class ClassificationError(ValueError):
    pass


class ODEDomainError(SolverError):
    pass


@dataclass
class LinearPDEProblem:
    """``a11 u_11 + a22 u_22 + b1 u_1 + c0 u = f`` on ``grid``.

    ``data`` supplies Dirichlet values on the boundary (elliptic) or the
    initial row ``t2 = t2_0`` and the side values (hyperbolic);
    ``data_t2`` is the initial t2-derivative for hyperbolic problems
    (defaults to the t2-derivative of ``data``).
    """

    a11: ScalarField
    a22: ScalarField
    f: ScalarField
    grid: Grid2
    data: ScalarField
    b1: ScalarField | None = None
    c0: ScalarField | None = None
    data_t2: ScalarField | None = None
    name: str = ""

    def coefficients(self, pts=None) -> dict[str, np.ndarray]:
        pts = self.grid.nodes() if pts is None else pts
        zero = np.zeros(pts.shape[:-1])
        return {
            "a11": self.a11(pts) + zero,
            "a22": self.a22(pts) + zero,
            "b1": zero if self.b1 is None else self.b1(pts) + zero,
            "c0": zero if self.c0 is None else self.c0(pts) + zero,
            "f": self.f(pts) + zero,
        }

    def classify(self) -> str:
        c = self.coefficients()
        prod = (c["a11"] * c["a22"])[1:-1, 1:-1]
        if self.grid.mask is not None:
            prod = prod[~self.grid.mask[1:-1, 1:-1]]
        if np.all(prod > 0):
            return "elliptic"
        if np.all(prod < 0):
            return "hyperbolic"
        raise ClassificationError("operator changes type (or degenerates) on the grid")

    def operator_jet(self, u: ScalarField, pts) -> np.ndarray:
        """``L[u] - f`` at ``pts`` evaluated through jets of ``u``."""
        j = u.eval_jet(pts)
        c = self.coefficients(pts)
        return c["a11"] * j.hess[..., 0, 0] + c["a22"] * j.hess[..., 1, 1] + c["b1"] * j.grad[..., 0] + c["c0"] * j.value - c["f"]


@dataclass
class GridSolution:
    grid: Grid2
    values: np.ndarray
    residual: float
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    def field(self) -> GridField:
        return GridField(self.grid, self.values)

    def write(self, path) -> None:
        F.write_grid(path, self.grid, self.values)


# -- discrete operator ----------------------------------------------------------


def apply_operator(u: np.ndarray, coef: dict, h1: float, h2: float) -> np.ndarray:
    """Interior values of the 5-point discretization of L (boundary rows are zero)."""
    out = np.zeros_like(u)
    c = u[1:-1, 1:-1]
    s = lambda a: a[1:-1, 1:-1]  # noqa: E731
    out[1:-1, 1:-1] = (
        s(coef["a11"]) * (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / h1**2
        + s(coef["a22"]) * (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / h2**2
        + s(coef["b1"]) * (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * h1)
        + s(coef["c0"]) * c
    )
    return out


def transfinite_guess(boundary: np.ndarray) -> np.ndarray:
    """Coons-patch interpolation of the boundary values into the interior."""
    u = boundary
    n1, n2 = u.shape
    s = np.linspace(0.0, 1.0, n1)[:, None]
    t = np.linspace(0.0, 1.0, n2)[None, :]
    left, right = u[0:1, :], u[-1:, :]
    bottom, top = u[:, 0:1], u[:, -1:]
    corners = (
        (1 - s) * (1 - t) * u[0, 0] + s * (1 - t) * u[-1, 0] + (1 - s) * t * u[0, -1] + s * t * u[-1, -1]
    )
    return (1 - s) * left + s * right + (1 - t) * bottom + t * top - corners


def _sor_omega(coef: dict, grid: Grid2) -> float:
    w1 = np.mean(np.abs(coef["a11"])) / grid.h1**2
    w2 = np.mean(np.abs(coef["a22"])) / grid.h2**2
    rho = (w1 * math.cos(math.pi / (grid.n1 - 1)) + w2 * math.cos(math.pi / (grid.n2 - 1))) / (w1 + w2)
    rho = min(rho, 1.0 - 1e-12)
    return 2.0 / (1.0 + math.sqrt(1.0 - rho * rho))


def sor_solve(
    u0: np.ndarray,
    coef: dict,
    grid: Grid2,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    omega: float | None = None,
    fixed: np.ndarray | None = None,
) -> tuple[np.ndarray, int, float]:
    """Red-black SOR for the interior nodes; boundary (and ``fixed``) nodes are held.

    Iterates until the discrete L-inf residual is below ``tol`` or below the
    rounding floor ``16 eps max|diag| max|u|``, whichever is larger.  Returns
    the iterate, the number of sweeps and the final residual.
    """
    u = np.array(u0, dtype=float)
    h1, h2 = grid.h1, grid.h2
    s = lambda a: a[1:-1, 1:-1]  # noqa: E731
    a11, a22, b1, c0, f = (s(coef[k]) for k in ("a11", "a22", "b1", "c0", "f"))
    diag = -2 * a11 / h1**2 - 2 * a22 / h2**2 + c0
    if np.any(diag == 0):
        raise SolverError("zero diagonal in relaxation")
    cp = a11 / h1**2 + b1 / (2 * h1)
    cm = a11 / h1**2 - b1 / (2 * h1)
    cq = a22 / h2**2
    omega = _sor_omega(coef, grid) if omega is None else omega
    I, J = np.meshgrid(np.arange(1, grid.n1 - 1), np.arange(1, grid.n2 - 1), indexing="ij")
    free = np.ones(I.shape, bool) if fixed is None else ~s(fixed)
    colors = [((I + J) % 2 == 0) & free, ((I + J) % 2 == 1) & free]
    mask_f = ~free

    def residual():
        r = f - s(apply_operator(u, coef, h1, h2))
        r[mask_f] = 0.0
        return float(np.max(np.abs(r))) if r.size else 0.0

    # the discrete residual cannot drop below rounding in |diag| * |u|
    floor = 16 * np.finfo(float).eps * float(np.max(np.abs(diag))) * max(1.0, float(np.max(np.abs(u))))
    tol_eff = max(tol, floor)
    res = residual()
    it = 0
    check = 10
    while res > tol_eff:
        if it >= max_iter:
            raise ConvergenceError(f"relaxation did not reach {tol_eff:g} in {max_iter} sweeps (residual {res:.3e})")
        for col in colors:
            c = u[1:-1, 1:-1]
            off = cp * u[2:, 1:-1] + cm * u[:-2, 1:-1] + cq * (u[1:-1, 2:] + u[1:-1, :-2])
            new = (f - off) / diag
            c[col] += omega * (new[col] - c[col])
        it += 1
        if it % check == 0:
            res = residual()
            if not np.isfinite(res):
                raise ConvergenceError("relaxation diverged")
    return u, it, res


# -- linear problems ----------------------------------------------------------


def independent_residual(prob: LinearPDEProblem, values: np.ndarray, margin: int = 2) -> float:
    """L-inf of ``L[u] - f`` over interior nodes, evaluated through grid-field jets."""
    g = prob.grid
    gf = GridField(g.with_mask(None), values)
    sel = g.interior(margin)
    if g.mask is not None:
        near = g.mask.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                near |= F._shift(g.mask, di, dj)
        sel &= ~near
    pts = g.nodes()[sel]
    if len(pts) == 0:
        return 0.0
    return float(np.max(np.abs(prob.operator_jet(gf, pts))))


def solve_linear2(prob: LinearPDEProblem, tol: float = 1e-10, max_iter: int = 200_000) -> GridSolution:
    """Solve a linear problem; the type (elliptic/hyperbolic) is read off the coefficients."""
    kind = prob.classify()
    if kind == "elliptic":
        return _solve_elliptic(prob, tol, max_iter)
    return _solve_hyperbolic(prob)


def _solve_elliptic(prob: LinearPDEProblem, tol: float, max_iter: int) -> GridSolution:
    g = prob.grid
    coef = prob.coefficients()
    data = prob.data(g.nodes())
    u0 = transfinite_guess(data)
    u0[0, :], u0[-1, :], u0[:, 0], u0[:, -1] = data[0, :], data[-1, :], data[:, 0], data[:, -1]
    fixed = None
    if g.mask is not None:
        fixed = g.mask
        u0[fixed] = data[fixed]
    u, it, res = sor_solve(u0, coef, g, tol=tol, max_iter=max_iter, fixed=fixed)
    log.info("elliptic solve %s: %d sweeps, discrete residual %.3e", prob.name, it, res)
    return GridSolution(g, u, independent_residual(prob, u), it, {"kind": "elliptic", "discrete_residual": res})


def _march(
    grid: Grid2,
    accel: Callable[[np.ndarray, float], np.ndarray],
    side: Callable[[float], tuple[float, float] | tuple[np.ndarray, np.ndarray]],
    u0: np.ndarray,
    v0: np.ndarray,
    substeps: int,
    growth: float = 1e6,
) -> np.ndarray:
    """Leapfrog in t2.  ``accel(u_row, t2)`` returns u_22 on interior nodes of the row."""
    n1, n2 = grid.n1, grid.n2
    dt = grid.h2 / substeps
    t0 = grid.origin[1]
    out = np.empty((n1, n2))
    out[:, 0] = u0
    scale = max(1.0, float(np.max(np.abs(u0))))
    prev = u0.copy()
    cur = u0.copy()
    cur[1:-1] = u0[1:-1] + dt * v0[1:-1] + 0.5 * dt * dt * accel(u0, t0)
    cur[0], cur[-1] = side(t0 + dt)
    step = 1
    for j in range(1, n2):
        while step < j * substeps:
            t = t0 + step * dt
            nxt = np.empty_like(cur)
            nxt[1:-1] = 2 * cur[1:-1] - prev[1:-1] + dt * dt * accel(cur, t)
            nxt[0], nxt[-1] = side(t + dt)
            prev, cur = cur, nxt
            step += 1
            if not np.all(np.isfinite(cur)) or np.max(np.abs(cur)) > growth * scale:
                raise InstabilityError(f"explicit march blew up at t2 = {t:.6g}")
        out[:, j] = cur
    return out


def _cfl_substeps(ratio_max: float, grid: Grid2) -> int:
    # stable when max|a11/a22| (dt/h1)^2 <= 1
    return max(1, int(math.ceil(grid.h2 * math.sqrt(ratio_max) / grid.h1 - 1e-12)))


def _solve_hyperbolic(prob: LinearPDEProblem) -> GridSolution:
    g = prob.grid
    t1 = g.t1
    t0 = g.origin[1]

    def row_pts(t):
        return np.stack([t1, np.full_like(t1, t)], axis=-1)

    ratio = np.max(np.abs(prob.a11(g.nodes()) / prob.a22(g.nodes())))
    m = _cfl_substeps(float(ratio), g)
    h1 = g.h1

    def accel(u, t):
        c = prob.coefficients(row_pts(t))
        s = slice(1, -1)
        u11 = (u[2:] - 2 * u[s] + u[:-2]) / h1**2
        u1 = (u[2:] - u[:-2]) / (2 * h1)
        return (c["f"][s] - c["a11"][s] * u11 - c["b1"][s] * u1 - c["c0"][s] * u[s]) / c["a22"][s]

    def side(t):
        v = prob.data(row_pts(t))
        return v[0], v[-1]

    p0 = row_pts(t0)
    u0 = prob.data(p0)
    dt_field = prob.data_t2 or F.Partial(prob.data, 1)
    v0 = dt_field(p0)
    u = _march(g, accel, side, u0, v0, m)
    log.info("hyperbolic march %s: %d substeps per row", prob.name, m)
    return GridSolution(g, u, independent_residual(prob, u), (g.n2 - 1) * m, {"kind": "hyperbolic", "substeps": m})


# -- Liouville-type equation ------------------------------------------------------


def liouville_residual(P: np.ndarray, Lam: float, eps0: int, grid: Grid2) -> np.ndarray:
    coef = _laplace_coef(P.shape, eps0)
    r = apply_operator(P, coef, grid.h1, grid.h2) - Lam * np.exp(-2 * P)
    r[0, :] = r[-1, :] = r[:, 0] = r[:, -1] = 0.0
    return r


def _laplace_coef(shape, eps0, c0=None):
    one = np.ones(shape)
    return {"a11": one, "a22": eps0 * one, "b1": 0 * one, "c0": 0 * one if c0 is None else c0, "f": 0 * one}


def solve_liouville(
    Lam: float,
    eps0: int,
    grid: Grid2,
    data: ScalarField,
    data_t2: ScalarField | None = None,
    tol: float = 1e-9,
    max_newton: int = 50,
    damping: float = 0.5,
) -> GridSolution:
    """``P_11 + e0 P_22 = Lambda exp(-2P)`` on ``grid``.

    ``e0 = +1``: Dirichlet data from ``data`` on the boundary, Newton outer
    iteration (each step halved up to 30 times until the residual decreases)
    with an SOR inner solve.  ``e0 = -1``: explicit march in t2 from the
    initial row of ``data`` and ``data_t2``.
    """
    if eps0 not in (1, -1):
        raise ValueError("eps0 must be +1 or -1")
    nodes = grid.nodes()
    if eps0 == -1:
        t1 = grid.t1
        h1 = grid.h1

        def accel(u, t):
            # P_22 = P_11 - Lambda e^{-2P}
            return (u[2:] - 2 * u[1:-1] + u[:-2]) / h1**2 - Lam * np.exp(-2 * u[1:-1])

        def side(t):
            v = data(np.stack([t1, np.full_like(t1, t)], axis=-1))
            return v[0], v[-1]

        m = _cfl_substeps(1.0, grid)
        v0 = (data_t2 or F.Partial(data, 1))(nodes[:, 0])
        u = _march(grid, accel, side, data(nodes[:, 0]), v0, m)
        res = _liouville_jet_residual(u, Lam, eps0, grid)
        return GridSolution(grid, u, res, (grid.n2 - 1) * m, {"kind": "hyperbolic", "substeps": m})

    bd = data(nodes)
    P = transfinite_guess(bd)
    r = liouville_residual(P, Lam, eps0, grid)
    rn = float(np.max(np.abs(r)))
    history = [rn]
    total_sweeps = 0
    for k in range(max_newton):
        if rn <= tol:
            break
        coef = _laplace_coef(P.shape, eps0, c0=2 * Lam * np.exp(-2 * P))
        coef["f"] = -r
        inner_tol = max(0.5 * tol, 1e-3 * rn)
        delta, sweeps, _ = sor_solve(np.zeros_like(P), coef, grid, tol=inner_tol)
        total_sweeps += sweeps
        lam = 1.0
        for _ in range(30):
            trial = P + lam * delta
            rt = liouville_residual(trial, Lam, eps0, grid)
            rtn = float(np.max(np.abs(rt)))
            if np.isfinite(rtn) and rtn < rn:
                break
            lam *= damping
        else:
            raise ConvergenceError(f"Newton step could not reduce the residual ({rn:.3e})")
        P, r, rn = trial, rt, rtn
        history.append(rn)
        log.info("Newton %d: residual %.3e (step %.3g)", k + 1, rn, lam)
    else:
        if rn > tol:
            raise ConvergenceError(f"Newton did not converge in {max_newton} iterations (residual {rn:.3e})")
    res = _liouville_jet_residual(P, Lam, eps0, grid)
    return GridSolution(grid, P, res, len(history) - 1, {"kind": "elliptic", "residual_history": history, "sweeps": total_sweeps})


def _liouville_jet_residual(P: np.ndarray, Lam: float, eps0: int, grid: Grid2) -> float:
    gf = GridField(grid.with_mask(None), P)
    pts = grid.nodes()[grid.interior(2)]
    j = gf.eval_jet(pts)
    return float(np.max(np.abs(j.hess[..., 0, 0] + eps0 * j.hess[..., 1, 1] - Lam * np.exp(-2 * j.value))))


# -- the ODE R' = R^{3/2} + c ------------------------------------------------------


@dataclass
class ODESolution:
    field: ODEField
    t: np.ndarray
    R: np.ndarray
    residual: float


def solve_R_ode(
    c: float,
    R0: float,
    t_range: tuple[float, float],
    step: float,
    require_inequality: bool = False,
) -> ODESolution:
    """Classical RK4 for ``R' = R^{3/2} + c`` from ``R(t_range[0]) = R0``.

    The returned residual is ``max |R_I' - R_I^{3/2} - c|`` over cell
    midpoints, where ``R_I`` is the cubic Hermite interpolant of the nodes.
    """
    a, b = (float(x) for x in t_range)
    if R0 <= 0:
        raise ODEDomainError("R0 must be positive")
    n = max(1, int(round((b - a) / step)))
    dt = (b - a) / n

    def rhs(R):
        R = np.asarray(R, dtype=float)
        if np.any(R <= 0):
            raise ODEDomainError("R <= 0 reached")
        return R**1.5 + c

    def drhs(R):
        return 1.5 * np.sqrt(R)

    def check(R, t):
        if R <= 0:
            raise ODEDomainError(f"R <= 0 reached at t1 = {t:.6g}")
        if require_inequality and R**1.5 + c <= 0:
            raise ODEDomainError(f"R^(3/2) + c <= 0 reached at t1 = {t:.6g}")

    t = a + dt * np.arange(n + 1)
    R = np.empty(n + 1)
    R[0] = R0
    check(R0, a)
    for i in range(n):
        y = R[i]
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        R[i + 1] = y + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        check(R[i + 1], t[i + 1])
    fld = ODEField(t, R, rhs, drhs)
    mid = 0.5 * (t[1:] + t[:-1])
    res = float(np.max(np.abs(fld.interpolant_derivative(mid) - rhs(fld.interpolate(mid)))))
    return ODESolution(fld, t, R, res)


# -- convergence helpers ------------------------------------------------------------


def observed_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    x, y = np.log(np.asarray(hs, float)), np.log(np.asarray(errors, float))
    return float(np.polyfit(x, y, 1)[0])


def richardson_order(coarse: float, mid: float, fine: float, ratio: float = 2.0) -> float:
    """Order from three solutions at spacings h, h/r, h/r^2 (no exact solution needed)."""
    return float(math.log(abs(coarse - mid) / abs(mid - fine)) / math.log(ratio))


def manufactured_source(prob_like: LinearPDEProblem, u_star: ScalarField) -> ScalarField:
    """``f := L[u*]`` as a closed-form field."""
    terms = prob_like.a11 * _hess_field(u_star, 0, 0) + prob_like.a22 * _hess_field(u_star, 1, 1)
    if prob_like.b1 is not None:
        terms = terms + prob_like.b1 * _grad_field(u_star, 0)
    if prob_like.c0 is not None:
        terms = terms + prob_like.c0 * u_star
    return terms


class _JetComponent(ScalarField):
    """A component of another field's jet, as a values-only field (no derivatives)."""

    def __init__(self, base: ScalarField, pick: Callable):
        self.base, self.pick = base, pick
        self.arity = base.arity

    def eval_jet(self, points):
        v = self.pick(self.base.eval_jet(points))
        return Jet2.constant(v, self.arity)


def _hess_field(u, i, j):
    return _JetComponent(u, lambda jt: jt.hess[..., i, j])


def _grad_field(u, i):
    return _JetComponent(u, lambda jt: jt.grad[..., i])
