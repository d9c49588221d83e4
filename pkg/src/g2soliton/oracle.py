"""Value-only finite-difference curvature, used to cross-check the jet pipeline.

Nothing here touches jets: metric components are sampled at shifted points,
first derivatives come from central differences, and the derivative of the
Christoffel symbols from central differences of finite-difference Christoffel
symbols (a ``p +- 2h`` neighbourhood).  Inversion uses ``numpy.linalg.inv``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

MetricFn = Callable[[np.ndarray], np.ndarray]


def default_step(p) -> float:
    """``1e-4`` times the local coordinate scale."""
    return 1e-4 * max(1.0, float(np.max(np.abs(p))))


def _shift(p: np.ndarray, axis: int, delta: float) -> np.ndarray:
    q = np.array(p, dtype=float, copy=True)
    q[..., axis] += delta
    return q


def fd_metric_derivative(g: MetricFn, p: np.ndarray, h: float) -> np.ndarray:
    """``dg[..., c, a, b] ~ d_c g_ab`` by central differences."""
    n = p.shape[-1]
    return np.stack([(g(_shift(p, c, h)) - g(_shift(p, c, -h))) / (2 * h) for c in range(n)], axis=-3)


def fd_christoffel(g: MetricFn, p, h: float | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    h = default_step(p) if h is None else h
    n = p.shape[-1]
    gv = g(p)
    ginv = np.linalg.inv(gv)
    dg = fd_metric_derivative(g, p, h)
    gam = np.zeros(p.shape[:-1] + (n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                s = 0.0
                for d in range(n):
                    s = s + ginv[..., a, d] * (dg[..., b, d, c] + dg[..., c, b, d] - dg[..., d, b, c])
                gam[..., a, b, c] = 0.5 * s
    return gam


def fd_ricci(g: MetricFn, p, h: float | None = None) -> np.ndarray:
    """Ricci tensor from metric values only (same sign convention as the jet path)."""
    p = np.asarray(p, dtype=float)
    h = default_step(p) if h is None else h
    n = p.shape[-1]
    gam = fd_christoffel(g, p, h)
    dgam = np.stack(
        [(fd_christoffel(g, _shift(p, e, h), h) - fd_christoffel(g, _shift(p, e, -h), h)) / (2 * h) for e in range(n)],
        axis=-4,
    )  # [..., e, a, b, c]
    ric = np.zeros(p.shape[:-1] + (n, n))
    for b in range(n):
        for d in range(n):
            s = 0.0
            for a in range(n):
                s = s + dgam[..., a, a, b, d] - dgam[..., b, a, a, d]
                for c in range(n):
                    s = s + gam[..., a, a, c] * gam[..., c, b, d] - gam[..., a, d, c] * gam[..., c, b, a]
            ric[..., b, d] = s
    return ric


def fd_lie(g: MetricFn, X: Callable[[np.ndarray], np.ndarray], p, h: float | None = None) -> np.ndarray:
    """``(L_X g)_ab`` from values of g and of the vector field X."""
    p = np.asarray(p, dtype=float)
    h = default_step(p) if h is None else h
    n = p.shape[-1]
    gv = g(p)
    Xv = X(p)
    dg = fd_metric_derivative(g, p, h)
    dX = np.stack([(X(_shift(p, a, h)) - X(_shift(p, a, -h))) / (2 * h) for a in range(n)], axis=-1)  # [..., c, a]
    out = np.zeros(p.shape[:-1] + (n, n))
    for a in range(n):
        for b in range(n):
            s = 0.0
            for c in range(n):
                s = s + Xv[..., c] * dg[..., c, a, b] + gv[..., c, b] * dX[..., c, a] + gv[..., a, c] * dX[..., c, b]
            out[..., a, b] = s
    return out


def dual_path_disagreement(g: MetricFn, jet_ricci: np.ndarray, p, steps=(1e-2, 5e-3, 2.5e-3)) -> np.ndarray:
    """``max |fd_ricci - jet_ricci|`` (over points and components) for each step size."""
    return np.array([float(np.max(np.abs(fd_ricci(g, p, h) - jet_ricci))) for h in steps])
