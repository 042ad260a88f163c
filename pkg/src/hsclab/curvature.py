"""Curvature tensor and Ricci form of a metric field, with symmetry diagnostics.

Index convention: R[i, j, k, l] stores the component with holomorphic indices
i, k and conjugate indices j, l; the inverse metric satisfies
sum_q g[s, q] ginv[q, p] = delta_{s p}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ComplexGrid, ScalarField, d_z_values, d_zbar_values
from .metrics import (
    HermitianMetricField,
    complex_hessian,
    hermitize,
    inverse_metric,
    log_det,
)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Four-index curvature tensor plus the Ricci matrix field of one metric."""

    grid: ComplexGrid
    R: np.ndarray = field(repr=False)
    ric: np.ndarray = field(repr=False)


def curvature_tensor(metric: HermitianMetricField) -> CurvatureField:
    """R[i,j,k,l] = -d_i d_jbar g_{k lbar} + ginv[q,p] (d_i g_{k qbar})(d_jbar g_{p lbar})."""
    grid, g = metric.grid, metric.g
    n = grid.n
    ginv = inverse_metric(g)

    dg = np.empty(grid.shape + (n, n, n), dtype=np.complex128)
    for i in range(n):
        dg[..., i, :, :] = d_z_values(g, grid, i)

    ddg = np.empty(grid.shape + (n, n, n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            ddg[..., i, j, :, :] = d_zbar_values(dg[..., i, :, :], grid, j)

    # second term: sum_{p,q} (d_i g_{k qbar}) ginv[q,p] conj(d_j g_{l pbar})
    term2 = np.einsum("...ikq,...qp,...jlp->...ijkl", dg, ginv, np.conj(dg))
    R = -ddg + term2
    return CurvatureField(grid, R, ricci(metric))


def ricci(metric: HermitianMetricField) -> np.ndarray:
    """Ricci matrix field Ric[i,j] = -d_i d_jbar log det g (exactly Hermitian)."""
    s = ScalarField(metric.grid, log_det(metric))
    return -complex_hessian(s)


def ricci_from_trace(curv: CurvatureField, metric: HermitianMetricField) -> np.ndarray:
    """Cross-check contraction ginv[l,k] R[i,j,k,l]; agrees with `ricci` on smooth fields."""
    ginv = inverse_metric(metric.g)
    return hermitize(np.einsum("...lk,...ijkl->...ij", ginv, curv.R))


def scalar_curvature_density(curv: CurvatureField, metric: HermitianMetricField) -> ScalarField:
    """Full trace ginv[j,i] ginv[l,k] R[i,j,k,l] as a real field."""
    ginv = inverse_metric(metric.g)
    s = np.einsum("...ji,...lk,...ijkl->...", ginv, ginv, curv.R)
    return ScalarField(curv.grid, s.real)


def curvature_symmetry_residuals(curv: CurvatureField) -> dict:
    """Relative residuals of the four index symmetries of the curvature tensor."""
    R = curv.R
    scale = max(float(np.max(np.abs(R))), 1e-30)
    swap_ik = np.swapaxes(R, -4, -2)
    swap_jl = np.swapaxes(R, -3, -1)
    conj_pair = np.conj(np.swapaxes(np.swapaxes(R, -4, -3), -2, -1))
    ric_herm = float(np.max(np.abs(curv.ric - np.conj(np.swapaxes(curv.ric, -1, -2)))))
    return {
        "swap_first_pair": float(np.max(np.abs(R - swap_ik))) / scale,
        "swap_second_pair": float(np.max(np.abs(R - swap_jl))) / scale,
        "conjugation": float(np.max(np.abs(R - conj_pair))) / scale,
        "ricci_hermitian": ric_herm / max(float(np.max(np.abs(curv.ric))), 1e-30),
    }
