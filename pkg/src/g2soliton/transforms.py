"""Adapted coordinate changes ``tb = phi(t)``, ``zb = alpha z + psi(t)``.

These are the changes of chart that keep the Killing fields of the form
d/dz; they act on the block data (b, f, h) by pullback.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .fields import Composed, Partial, ScalarField
from .geometry import AdaptedMetric


class SingularTransformError(ValueError):
    pass


class AdaptedTransform:
    """``tb_i = phi_i(t)``, ``zb_k = alpha[k][l] z_l + psi_k(t)``.

    Parameters
    ----------
    phi, psi : pair of ScalarField
        Fields of (t1, t2).
    alpha : (2, 2) array_like
        Constant, invertible.
    jacobian, psi_grad : 2x2 tables of ScalarField, optional
        Exact derivative fields ``d phi_i / d t_j`` and ``d psi_k / d t_j``.
        When omitted they are derived with :class:`~g2soliton.fields.Partial`
        (exact values and gradients, finite-difference Hessians).
    """

    def __init__(self, phi: Sequence[ScalarField], alpha, psi: Sequence[ScalarField], jacobian=None, psi_grad=None):
        self.phi = list(phi)
        self.alpha = np.asarray(alpha, dtype=float)
        self.psi = list(psi)
        if self.alpha.shape != (2, 2):
            raise ValueError("alpha must be 2x2")
        if abs(np.linalg.det(self.alpha)) == 0.0:
            raise SingularTransformError("det(alpha) = 0")
        self.jacobian = jacobian or [[Partial(self.phi[i], j) for j in range(2)] for i in range(2)]
        self.psi_grad = psi_grad or [[Partial(self.psi[k], j) for j in range(2)] for k in range(2)]

    def map_points(self, points) -> np.ndarray:
        """Image of 4D points ``(t1, t2, z1, z2)``."""
        p = np.asarray(points, dtype=float)
        t, z = p[..., :2], p[..., 2:]
        tb = np.stack([f(t) for f in self.phi], axis=-1)
        zb = np.einsum("kl,...l->...k", self.alpha, z) + np.stack([f(t) for f in self.psi], axis=-1)
        return np.concatenate([tb, zb], axis=-1)

    def jacobian_determinant(self, t_points) -> np.ndarray:
        J = [[self.jacobian[i][j](t_points) for j in range(2)] for i in range(2)]
        return J[0][0] * J[1][1] - J[0][1] * J[1][0]

    def check_invertible(self, t_points, tol: float = 1e-12) -> None:
        d = self.jacobian_determinant(t_points)
        if np.any(~np.isfinite(d)) or np.any(np.abs(d) <= tol):
            raise SingularTransformError("Jacobian of phi vanishes at a requested point")

    def inverse(self, phi_inverse: Sequence[ScalarField]) -> "AdaptedTransform":
        """The inverse transform, given the inverse base map ``t = phi^{-1}(tb)``."""
        ai = np.linalg.inv(self.alpha)
        shifted = [Composed(f, phi_inverse) for f in self.psi]
        psi_inv = [-(ai[k, 0] * shifted[0] + ai[k, 1] * shifted[1]) for k in range(2)]
        return AdaptedTransform(phi_inverse, ai, psi_inv)


def pullback_metric(g: AdaptedMetric, T: AdaptedTransform) -> AdaptedMetric:
    """Express ``g`` (given in the barred chart) in the original chart.

    With ``M = [[J, 0], [Dpsi, alpha]]`` the 4x4 metric is ``M^T G(phi(t)) M``;
    blockwise::

        h = alpha^T H alpha
        f = J^T F alpha + Dpsi^T H alpha
        b = J^T B J + J^T F Dpsi + Dpsi^T F^T J + Dpsi^T H Dpsi
    """
    B = [[Composed(g.b[i][j], T.phi) for j in range(2)] for i in range(2)]
    Fb = [[Composed(g.f[i][k], T.phi) for k in range(2)] for i in range(2)]
    H = [[Composed(g.h[k][l], T.phi) for l in range(2)] for k in range(2)]
    J, D, a = T.jacobian, T.psi_grad, T.alpha

    def lin(terms):
        out = None
        for coef, fld in terms:
            if isinstance(coef, float) and coef == 0.0:
                continue
            term = coef * fld
            out = term if out is None else out + term
        return out if out is not None else 0.0 * B[0][0]

    h = [[lin([(float(a[k, m] * a[l, n]), H[k][l]) for k in range(2) for l in range(2)]) for n in range(2)] for m in range(2)]
    f = [
        [
            lin(
                [(float(a[k, l]), J[i][j] * Fb[i][k]) for i in range(2) for k in range(2)]
                + [(float(a[m, l]), D[k][j] * H[k][m]) for k in range(2) for m in range(2)]
            )
            for l in range(2)
        ]
        for j in range(2)
    ]
    b = [[None, None], [None, None]]
    for i in range(2):
        for j in range(i, 2):
            terms = []
            for p in range(2):
                for q in range(2):
                    terms.append((1.0, J[p][i] * B[p][q] * J[q][j]))
                    terms.append((1.0, J[p][i] * Fb[p][q] * D[q][j]))
                    terms.append((1.0, D[q][i] * Fb[p][q] * J[p][j]))
                    terms.append((1.0, D[p][i] * H[p][q] * D[q][j]))
            b[i][j] = b[j][i] = lin(terms)
    return AdaptedMetric(b, f, h)
