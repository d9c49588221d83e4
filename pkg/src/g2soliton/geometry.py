"""Curvature and soliton machinery on adapted charts.

Conventions
-----------
Points on the 4D chart are ordered ``(t1, t2, z1, z2)``.  Derivative arrays
put the differentiation indices first::

    dg[..., c, a, b]     = d_c g_ab
    ddg[..., c, d, a, b] = d_c d_d g_ab
    gamma[..., a, b, c]  = Gamma^a_{bc}

The Ricci tensor is ``Ric_bd = d_a G^a_bd - d_b G^a_ad + G^a_ac G^c_bd - G^a_dc G^c_ba``,
which makes the unit round sphere satisfy ``Ric = +g`` and ``K = +1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import fields as F
from .fields import Grid2, ScalarField
from .jets import Jet2


class DegenerateMetricError(ValueError):
    pass


class MetricJet(NamedTuple):
    g: np.ndarray
    dg: np.ndarray
    ddg: np.ndarray


def _zero(arity=2):
    return F.Constant(0.0, arity)


def _sym(m):
    return [[m[0][0], m[0][1]], [m[0][1], m[1][1]]]


class ComponentMetric:
    """A metric given by an n x n (symmetric) table of scalar fields of arity n."""

    def __init__(self, components: Sequence[Sequence[ScalarField]]):
        self.components = [list(r) for r in components]
        self.dim = len(self.components)

    def jet(self, points) -> MetricJet:
        p = np.asarray(points, dtype=float)
        n = self.dim
        shape = p.shape[:-1]
        g = np.empty(shape + (n, n))
        dg = np.empty(shape + (n, n, n))
        ddg = np.empty(shape + (n, n, n, n))
        for a in range(n):
            for b in range(a, n):
                j = self.components[a][b].eval_jet(p)
                for (x, y) in {(a, b), (b, a)}:
                    g[..., x, y] = j.value
                    dg[..., :, x, y] = j.grad
                    ddg[..., :, :, x, y] = j.hess
        return MetricJet(g, dg, ddg)

    def values(self, points) -> np.ndarray:
        return self.jet(points).g


class AdaptedMetric:
    """4D metric in adapted block form.

    ``g = b_ij dt_i dt_j + 2 f_ik dt_i dz_k + h_kl dz_k dz_l`` with every
    block entry a field of (t1, t2) only; the Killing fields are d/dz1, d/dz2.
    ``f[i][k]``: row = base index i, column = Killing index k.
    """

    dim = 4

    def __init__(self, b, f, h):
        self.b = _sym(b)
        self.f = [list(r) for r in f]
        self.h = _sym(h)

    def blocks(self):
        return self.b, self.f, self.h

    def component_fields(self) -> list[list[ScalarField]]:
        b, f, h = self.b, self.f, self.h
        return [
            [b[0][0], b[0][1], f[0][0], f[0][1]],
            [b[1][0], b[1][1], f[1][0], f[1][1]],
            [f[0][0], f[1][0], h[0][0], h[0][1]],
            [f[0][1], f[1][1], h[1][0], h[1][1]],
        ]

    def jet(self, points) -> MetricJet:
        """4D metric jets at points with shape ``B + (4,)`` (z is ignored)."""
        p = np.asarray(points, dtype=float)
        t = p[..., :2]
        shape = p.shape[:-1]
        comps = self.component_fields()
        g = np.empty(shape + (4, 4))
        dg = np.zeros(shape + (4, 4, 4))
        ddg = np.zeros(shape + (4, 4, 4, 4))
        for a in range(4):
            for b in range(a, 4):
                j = comps[a][b].eval_jet(t)
                for (x, y) in {(a, b), (b, a)}:
                    g[..., x, y] = j.value
                    dg[..., :2, x, y] = j.grad
                    ddg[..., :2, :2, x, y] = j.hess
        return MetricJet(g, dg, ddg)

    def values(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        comps = self.component_fields()
        t = p[..., :2]
        g = np.empty(p.shape[:-1] + (4, 4))
        for a in range(4):
            for b in range(a, 4):
                g[..., a, b] = g[..., b, a] = comps[a][b](t)
        return g


# -- linear algebra -------------------------------------------------------------


def inverse(g: np.ndarray, guard: float = 1e-12) -> np.ndarray:
    """Batched inverse by cofactor expansion, rejecting near-singular matrices."""
    n = g.shape[-1]
    if n == 2:
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
        adj = np.empty_like(g)
        adj[..., 0, 0] = g[..., 1, 1]
        adj[..., 1, 1] = g[..., 0, 0]
        adj[..., 0, 1] = -g[..., 0, 1]
        adj[..., 1, 0] = -g[..., 1, 0]
    else:
        cof = np.empty_like(g)
        idx = np.arange(n)
        for i in range(n):
            for j in range(n):
                rows, cols = idx[idx != i], idx[idx != j]
                minor = g[..., rows[:, None], cols[None, :]]
                cof[..., i, j] = (-1) ** (i + j) * np.linalg.det(minor)
        det = np.einsum("...j,...j->...", g[..., 0, :], cof[..., 0, :])
        adj = np.swapaxes(cof, -1, -2)
    scale = np.max(np.abs(g), axis=(-1, -2))
    if np.any(~np.isfinite(det)) or np.any(np.abs(det) < guard * scale**n):
        raise DegenerateMetricError("metric is degenerate at an evaluated point")
    return adj / det[..., None, None]


def determinant(g: np.ndarray) -> np.ndarray:
    return np.linalg.det(g)


# -- curvature ------------------------------------------------------------------


def christoffel_from_jet(mj: MetricJet, ginv: np.ndarray | None = None) -> np.ndarray:
    g, dg = mj.g, mj.dg
    ginv = inverse(g) if ginv is None else ginv
    # lowered: G_dbc = 1/2 (d_b g_dc + d_c g_bd - d_d g_bc)
    low = 0.5 * (np.einsum("...bdc->...dbc", dg) + np.einsum("...cbd->...dbc", dg) - dg)
    return np.einsum("...ad,...dbc->...abc", ginv, low)


def ricci_from_jet(mj: MetricJet) -> np.ndarray:
    g, dg, ddg = mj
    ginv = inverse(g)
    low = 0.5 * (np.einsum("...bdc->...dbc", dg) + np.einsum("...cbd->...dbc", dg) - dg)
    gam = np.einsum("...ad,...dbc->...abc", ginv, low)
    # d_e of the lowered symbols
    dlow = 0.5 * (
        np.einsum("...ebdc->...edbc", ddg) + np.einsum("...ecbd->...edbc", ddg) - ddg
    )
    # d_e Gamma^a_bc = -g^ap d_e g_pq Gamma^q_bc + g^ad d_e G_dbc
    dgam = -np.einsum("...ap,...epq,...qbc->...eabc", ginv, dg, gam) + np.einsum(
        "...ad,...edbc->...eabc", ginv, dlow
    )
    term1 = np.einsum("...aabd->...bd", dgam)
    term2 = np.einsum("...baad->...bd", dgam)
    term3 = np.einsum("...aac,...cbd->...bd", gam, gam)
    term4 = np.einsum("...adc,...cba->...bd", gam, gam)
    return term1 - term2 + term3 - term4


def christoffel(metric, p) -> np.ndarray:
    """Gamma^a_bc at point(s) ``p``."""
    return christoffel_from_jet(metric.jet(p))


def ricci(metric, p) -> np.ndarray:
    """Ricci tensor at point(s) ``p``."""
    return ricci_from_jet(metric.jet(p))


def scalar_curvature(metric, p) -> np.ndarray:
    mj = metric.jet(p)
    return np.einsum("...ab,...ab->...", inverse(mj.g), ricci_from_jet(mj))


def gauss_curvature_2d(metric2, p) -> np.ndarray:
    """Gauss curvature of a 2D metric: half its scalar curvature.

    ``metric2`` is a :class:`ComponentMetric` of dimension 2 or a 2x2 table
    of fields.
    """
    if not isinstance(metric2, ComponentMetric):
        metric2 = ComponentMetric(metric2)
    if metric2.dim != 2:
        raise ValueError("gauss_curvature_2d needs a 2D metric")
    return 0.5 * scalar_curvature(metric2, p)


# -- vector fields --------------------------------------------------------------


class SolitonVectorField:
    """``X = X^{z1} d_z1 + X^{z2} d_z2`` with affine z-dependence.

    ``X^{z_i} = lin[i][0] z1 + lin[i][1] z2 + const[i]``; optionally
    ``A(z1)`` (a field of arity 1) is added to ``X^{z2}``.  X has no
    t-components.
    """

    def __init__(self, lin=((0.0, 0.0), (0.0, 0.0)), const=(0.0, 0.0), A: ScalarField | None = None):
        self.lin = np.asarray(lin, dtype=float)
        self.const = np.asarray(const, dtype=float)
        self.A = A
        if A is not None and A.arity != 1:
            raise ValueError("A(z1) must be a field of arity 1")

    @classmethod
    def killing(cls, k: int) -> "SolitonVectorField":
        c = [0.0, 0.0]
        c[k] = 1.0
        return cls(const=c)

    def jets(self, points) -> list[Jet2]:
        p = np.asarray(points, dtype=float)
        shape = p.shape[:-1]
        z1, z2 = p[..., 2], p[..., 3]
        out = [Jet2.constant(np.zeros(shape), 4), Jet2.constant(np.zeros(shape), 4)]
        for i in range(2):
            v = self.lin[i, 0] * z1 + self.lin[i, 1] * z2 + self.const[i]
            g = np.zeros(shape + (4,))
            g[..., 2] = self.lin[i, 0]
            g[..., 3] = self.lin[i, 1]
            out.append(Jet2(v, g, np.zeros(shape + (4, 4))))
        if self.A is not None:
            out[3] = out[3] + self.A.eval_jet(z1[..., None]).embed(4, [2])
        return out

    def values(self, points) -> np.ndarray:
        return np.stack([j.value for j in self.jets(points)], axis=-1)

    def jacobian(self, points) -> np.ndarray:
        """``D[..., a, b] = d_b X^a``."""
        return np.stack([j.grad for j in self.jets(points)], axis=-2)


def lie_derivative_from_jet(mj: MetricJet, X: Sequence[Jet2]) -> np.ndarray:
    """(L_X g)_ab = X^c d_c g_ab + g_cb d_a X^c + g_ac d_b X^c."""
    Xv = np.stack([x.value for x in X], axis=-1)
    DX = np.stack([x.grad for x in X], axis=-2)  # [..., c, a] = d_a X^c
    t1 = np.einsum("...c,...cab->...ab", Xv, mj.dg)
    t2 = np.einsum("...cb,...ca->...ab", mj.g, DX)
    return t1 + t2 + np.swapaxes(t2, -1, -2)


def lie_derivative_metric(metric, X: SolitonVectorField, p) -> np.ndarray:
    return lie_derivative_from_jet(metric.jet(p), X.jets(p))


# -- soliton instances ------------------------------------------------------------


@dataclass
class SolitonInstance:
    """Metric, soliton vector field and constant, ready for residual evaluation.

    ``loci`` are functions of (t1, t2) whose zero sets are singular for the
    chart; nodes near them are masked.
    """

    metric: AdaptedMetric
    X: SolitonVectorField
    Lambda: float
    eps0: int = 1
    loci: list[Callable] = field(default_factory=list)
    name: str = ""
    orbit_curvature: Callable | None = None
    orbit_curvature_label: str = ""

    def __post_init__(self):
        if self.eps0 not in (1, -1):
            raise ValueError("eps0 must be +1 or -1")


def soliton_residual_from_jet(mj: MetricJet, Xj: Sequence[Jet2], Lam: float) -> np.ndarray:
    return ricci_from_jet(mj) + 0.5 * lie_derivative_from_jet(mj, Xj) - Lam * mj.g


def soliton_residual(inst: SolitonInstance, p) -> np.ndarray:
    """E_ab = Ric_ab + 1/2 (L_X g)_ab - Lambda g_ab."""
    return soliton_residual_from_jet(inst.metric.jet(p), inst.X.jets(p), inst.Lambda)


@dataclass
class Claim:
    name: str
    measured: float
    expected: float | str
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "name": self.name,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


def claim_le(name, measured, tolerance, expected=0.0) -> Claim:
    m = float(measured)
    return Claim(name, m, expected, float(tolerance), bool(np.isfinite(m) and m <= tolerance))


def claim_ge(name, measured, bound, expected=">0") -> Claim:
    m = float(measured)
    return Claim(name, m, expected, float(bound), bool(np.isfinite(m) and m >= bound))


@dataclass
class ResidualReport:
    grid: Grid2
    sup_norm: float
    rms: float
    per_component: np.ndarray
    points_evaluated: int
    points_masked: int
    claims: list[Claim] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims)


class EmptyScanError(ValueError):
    pass


def scan_points(inst: SolitonInstance, grid: Grid2, z=(0.0, 0.0), margin: int = 3, edge: int = 0):
    """Unmasked grid nodes as 4D points, plus the mask actually used."""
    mask = F.singular_mask(grid, inst.loci, margin)
    if edge:
        mask = mask | ~grid.interior(edge)
    nodes = grid.nodes()[~mask]
    pts = np.concatenate([nodes, np.broadcast_to(np.asarray(z, float), nodes.shape[:-1] + (2,))], axis=-1)
    return pts, mask


def residual_scan(inst: SolitonInstance, grid: Grid2, z=(0.0, 0.0), margin: int = 3, edge: int = 0) -> ResidualReport:
    """Soliton residual norms over the unmasked nodes of ``grid``.

    ``edge`` additionally excludes nodes within that many cells of the grid
    boundary (needed when slots are grid-backed).
    """
    pts, mask = scan_points(inst, grid, z, margin, edge)
    if len(pts) == 0:
        raise EmptyScanError("no unmasked points to evaluate")
    E = soliton_residual(inst, pts)
    absE = np.abs(E)
    per = absE.max(axis=0)
    return ResidualReport(
        grid=grid.with_mask(mask),
        sup_norm=float(per.max()),
        rms=float(np.sqrt(np.mean(E**2))),
        per_component=per,
        points_evaluated=int(len(pts)),
        points_masked=int(mask.sum()),
    )


# -- submersion data ----------------------------------------------------------------


@dataclass
class GerochData:
    """Orbit metric, mixed components f_j^k and leaf metric h as fields of (t1, t2)."""

    gt: list[list[ScalarField]]
    fup: list[list[ScalarField]]
    h: list[list[ScalarField]]

    def orbit_metric(self) -> ComponentMetric:
        return ComponentMetric(self.gt)

    def assemble(self) -> AdaptedMetric:
        """Rebuild the block form from ``gt + h_kl (dz_k + f_i^k dt_i)(dz_l + f_j^l dt_j)``."""
        gt, fu, h = self.gt, self.fup, self.h
        f = [[sum((h[k][l] * fu[i][l] for l in range(2)), _zero()) for k in range(2)] for i in range(2)]
        b = [
            [gt[i][j] + sum((h[k][l] * fu[i][k] * fu[j][l] for k in range(2) for l in range(2)), _zero()) for j in range(2)]
            for i in range(2)
        ]
        return AdaptedMetric(b, f, h)


def leaf_inverse(h):
    det = h[0][0] * h[1][1] - h[0][1] * h[0][1]
    return [[h[1][1] / det, -h[0][1] / det], [-h[0][1] / det, h[0][0] / det]]


def geroch_decompose(metric: AdaptedMetric) -> GerochData:
    """g~_ij = b_ij - f_ik f_jl h^kl and f_j^k = f_js h^sk."""
    b, f, h = metric.blocks()
    hi = leaf_inverse(h)
    fup = [[f[j][0] * hi[0][k] + f[j][1] * hi[1][k] for k in range(2)] for j in range(2)]
    gt = [
        [b[i][j] - sum((f[i][k] * f[j][l] * hi[k][l] for k in range(2) for l in range(2)), _zero()) for j in range(2)]
        for i in range(2)
    ]
    return GerochData(gt, fup, h)


def check_leaf_nondegenerate(metric: AdaptedMetric, t_points) -> np.ndarray:
    h = metric.h
    det = h[0][0](t_points) * h[1][1](t_points) - h[0][1](t_points) ** 2
    if np.any(det == 0) or np.any(~np.isfinite(det)):
        raise DegenerateMetricError("singular h (null Killing leaves)")
    return det


def curvature_vector(gd: GerochData, p) -> tuple[np.ndarray, np.ndarray]:
    """Components (C^{z1}, C^{z2}) of the submersion curvature vector field."""
    t = np.asarray(p, dtype=float)[..., :2]
    gt = gd.orbit_metric().jet(t).g
    det = gt[..., 0, 0] * gt[..., 1, 1] - gt[..., 0, 1] ** 2
    if np.any(det == 0):
        raise DegenerateMetricError("degenerate orbit metric")
    root = np.sqrt(np.abs(det))
    out = []
    for k in range(2):
        d2f1 = gd.fup[0][k].eval_jet(t).grad[..., 1]
        d1f2 = gd.fup[1][k].eval_jet(t).grad[..., 0]
        out.append((d2f1 - d1f2) / root)
    return out[0], out[1]


def c_norm_squared(gd: GerochData, p) -> np.ndarray:
    """g(C, C) = h_kl C^k C^l."""
    t = np.asarray(p, dtype=float)[..., :2]
    C = curvature_vector(gd, t)
    h = [[gd.h[k][l](t) for l in range(2)] for k in range(2)]
    return sum(h[k][l] * C[k] * C[l] for k in range(2) for l in range(2))


# -- assumption checks ----------------------------------------------------------------


@dataclass
class AssumptionReport:
    checks: list[Claim]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Claim:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _null_defect(h: np.ndarray) -> np.ndarray:
    """min over unit v of |h(v, v)| for symmetric 2x2 h (0 when h is indefinite or degenerate)."""
    ev = np.linalg.eigvalsh(h)
    same_sign = ev[..., 0] * ev[..., 1] > 0
    return np.where(same_sign, np.min(np.abs(ev), axis=-1), 0.0)


def validate_assumptions(
    inst: SolitonInstance,
    grid: Grid2,
    z=(0.0, 0.0),
    margin: int = 3,
    edge: int = 0,
    tol: float = 1e-9,
    cc_tol: float = 1e-10,
    nondegeneracy: float = 1e-8,
) -> AssumptionReport:
    """Evaluate the structural assumptions on the unmasked nodes of ``grid``.

    Failures are reported, never raised.
    """
    pts, _ = scan_points(inst, grid, z, margin, edge)
    t = pts[..., :2]
    metric = inst.metric
    mj = metric.jet(pts)
    checks = []

    k_sup = max(float(np.max(np.abs(lie_derivative_from_jet(mj, SolitonVectorField.killing(k).jets(pts))))) for k in range(2))
    checks.append(claim_le("K1_killing", k_sup, tol))

    hv = mj.g[..., 2:, 2:]
    deth = hv[..., 0, 0] * hv[..., 1, 1] - hv[..., 0, 1] ** 2
    checks.append(claim_ge("K2_leaves_non_null", float(np.min(np.abs(deth))), nondegeneracy, expected="|det h|>0"))

    checks.append(claim_le("N_null_vector", float(np.max(_null_defect(hv))), tol))
    checks.append(claim_le("N_h22_zero", float(np.max(np.abs(hv[..., 1, 1]))), tol))

    gd = geroch_decompose(metric)
    C = curvature_vector(gd, t)
    cc = sum(hv[..., k, l] * C[k] * C[l] for k in range(2) for l in range(2))
    checks.append(claim_le("C0_null_curvature_vector", float(np.max(np.abs(cc))), cc_tol))
    cmag = np.maximum(np.abs(C[0]), np.abs(C[1]))
    checks.append(claim_ge("C1_intransitive", float(np.min(cmag)), nondegeneracy))

    Xv = inst.X.values(pts)
    checks.append(claim_le("X1_tangent_to_leaves", float(np.max(np.abs(Xv[..., :2]))), 0.0))

    # [X, e_j]^{z_a} = f_j^k d_{z_k} X^{z_a};  g([X, e_j], xi_i) = h_ia [X, e_j]^{z_a}
    DX = inst.X.jacobian(pts)[..., 2:, 2:]
    fup = np.stack([np.stack([gd.fup[j][k](t) for k in range(2)], -1) for j in range(2)], -2)
    br = np.einsum("...ak,...jk->...ja", DX, fup)
    sym = np.einsum("...ia,...ja->...ij", hv, br)
    checks.append(claim_le("X2_symmetry_of_orthogonal_distribution", float(np.max(np.abs(sym))), tol))
    return AssumptionReport(checks)


def orbit_curvature_claim(inst: SolitonInstance, grid: Grid2, tol: float, margin: int = 3, edge: int = 0) -> Claim:
    pts, _ = scan_points(inst, grid, (0.0, 0.0), margin, edge)
    t = pts[..., :2]
    K = gauss_curvature_2d(geroch_decompose(inst.metric).orbit_metric(), t)
    expected = inst.orbit_curvature(t[..., 0], t[..., 1])
    err = float(np.max(np.abs(K - expected)))
    return claim_le("orbit_gauss_curvature", err, tol, expected=inst.orbit_curvature_label)
