"""Hermitian metric fields on complex grids: constructors, densities, diagnostics.

Volume normalization used throughout: the top form of a positive (1,1)-form with
coefficient matrix g has density 2^n * n! * det(g) against the coordinate measure
dx^1 dy^1 ... dx^n dy^n. Every ratio and inequality audited downstream uses this
one convention for both metrics, so the choice never enters a comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Sequence

import numpy as np

from .errors import ConstructionError, DomainError, SingularMetricError
from .grid import ComplexGrid, ScalarField, d_z_values, d_zbar_values, product_grid

KAHLER_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class MetricProvenance:
    """How a metric was built; carries the potential when one is known."""

    kind: str
    psi: ScalarField | None = None
    base: "HermitianMetricField | None" = None


@dataclass(frozen=True, eq=False)
class HermitianMetricField:
    """Grid-sampled positive-definite Hermitian matrices g_{i jbar}(x)."""

    grid: ComplexGrid
    g: np.ndarray = field(repr=False)
    provenance: MetricProvenance | None = None

    def __post_init__(self):
        arr = np.asarray(self.g, dtype=np.complex128)
        n = self.grid.n
        if arr.shape != self.grid.shape + (n, n):
            raise DomainError(f"metric shape {arr.shape} does not match grid {self.grid.shape} + ({n},{n})")
        object.__setattr__(self, "g", arr)

    @property
    def n(self) -> int:
        return self.grid.n

    def scaled(self, c: float) -> "HermitianMetricField":
        if not c > 0:
            raise DomainError(f"metric scale must be positive, got {c}")
        return HermitianMetricField(self.grid, c * self.g, provenance=MetricProvenance("scaled", base=self))


def hermitize(matrix_field: np.ndarray) -> np.ndarray:
    """Project onto exactly-Hermitian matrices (the storage invariant)."""
    return 0.5 * (matrix_field + np.conj(np.swapaxes(matrix_field, -1, -2)))


def min_eigenvalue(matrix_field: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(hermitize(matrix_field))[..., 0]


def max_eigenvalue(matrix_field: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(hermitize(matrix_field))[..., -1]


def complex_hessian(f: ScalarField) -> np.ndarray:
    """Matrix field H[i,j] = d^2 f / dz^i dzbar^j; exactly Hermitian for real f."""
    grid = f.grid
    n = grid.n
    H = np.empty(grid.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        dzi = d_z_values(f.values, grid, i)
        for j in range(n):
            H[..., i, j] = d_zbar_values(dzi, grid, j)
    if f.is_real:
        H = hermitize(H)
    return H


def kahler_residual(metric: HermitianMetricField) -> float:
    """Max over i<k,j of |d_i g_{k jbar} - d_k g_{i jbar}| relative to the field scale."""
    grid, g = metric.grid, metric.g
    n = grid.n
    if n == 1:
        return 0.0
    scale = max(float(np.max(np.abs(g))), 1e-30)
    worst = 0.0
    dg = [d_z_values(g, grid, i) for i in range(n)]
    for i in range(n):
        for k in range(i + 1, n):
            worst = max(worst, float(np.max(np.abs(dg[i][..., k, :] - dg[k][..., i, :]))))
    return worst / scale


def hermitian_residual(metric: HermitianMetricField) -> float:
    g = metric.g
    scale = max(float(np.max(np.abs(g))), 1e-30)
    return float(np.max(np.abs(g - np.conj(np.swapaxes(g, -1, -2))))) / scale


def validate_metric(metric: HermitianMetricField, kahler_tol: float = KAHLER_TOL) -> dict:
    """Check the stored-field invariants; raises on violation, returns diagnostics."""
    herm = hermitian_residual(metric)
    if herm > 1e-12:
        raise ConstructionError(f"metric is not Hermitian as stored (residual {herm:.3e})")
    lam_min = float(np.min(min_eigenvalue(metric.g)))
    if lam_min <= 0:
        raise ConstructionError(
            f"metric is not positive definite (min eigenvalue {lam_min:.3e})", min_eigenvalue=lam_min
        )
    kres = kahler_residual(metric)
    if kres > kahler_tol:
        raise ConstructionError(f"metric violates the closedness condition (residual {kres:.3e})")
    return {"hermitian_residual": herm, "min_eigenvalue": lam_min, "kahler_residual": kres}


def flat_metric(grid: ComplexGrid, scale: float = 1.0) -> HermitianMetricField:
    if not scale > 0:
        raise ConstructionError(f"flat metric scale must be positive, got {scale}")
    g = np.broadcast_to(scale * np.eye(grid.n, dtype=np.complex128), grid.shape + (grid.n, grid.n)).copy()
    return HermitianMetricField(grid, g, provenance=MetricProvenance("flat"))


def conformal_metric(grid: ComplexGrid, u: ScalarField, normalize_mean: float | None = None) -> HermitianMetricField:
    """g = e^u * identity. Closed automatically for n=1; validated for n >= 2.

    normalize_mean rescales so the mean coefficient equals the given value
    (used to place the metric in a prescribed class on the torus chart).
    """
    if u.grid != grid:
        raise DomainError("conformal factor lives on a different grid")
    eu = np.exp(u.real_values())
    if normalize_mean is not None:
        eu = eu * (normalize_mean / float(np.mean(eu)))
    g = eu[..., None, None] * np.eye(grid.n, dtype=np.complex128)
    metric = HermitianMetricField(grid, g, provenance=MetricProvenance("conformal"))
    validate_metric(metric)
    return metric


def product_metric(m1: HermitianMetricField, m2: HermitianMetricField) -> HermitianMetricField:
    """Block-diagonal metric on the product grid."""
    grid = product_grid(m1.grid, m2.grid)
    n1, n2 = m1.n, m2.n
    n = n1 + n2
    g = np.zeros(grid.shape + (n, n), dtype=np.complex128)
    g[..., :n1, :n1] = m1.g[(slice(None),) * (2 * n1) + (None,) * (2 * n2)]
    g[..., n1:, n1:] = m2.g[(None,) * (2 * n1)]
    metric = HermitianMetricField(grid, g, provenance=MetricProvenance("product"))
    validate_metric(metric)
    return metric


def perturbed_metric(base: HermitianMetricField, h: np.ndarray, epsilon: float) -> HermitianMetricField:
    """g = base + epsilon * h for a per-point Hermitian perturbation h."""
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != base.g.shape:
        raise DomainError(f"perturbation shape {h.shape} does not match metric shape {base.g.shape}")
    g = hermitize(base.g + epsilon * h)
    lam_min = float(np.min(min_eigenvalue(g)))
    if lam_min <= 0:
        raise ConstructionError(
            f"perturbation destroys positivity (min eigenvalue {lam_min:.3e})", min_eigenvalue=lam_min
        )
    metric = HermitianMetricField(base.grid, g, provenance=MetricProvenance("perturbed", base=base))
    validate_metric(metric)
    return metric


def metric_from_potential(base: HermitianMetricField, psi: ScalarField) -> HermitianMetricField:
    """g = base + Hess(psi), the closed-by-construction perturbation in base's class.

    psi is sup-normalized before use, so the stored provenance satisfies
    sup psi = 0 exactly.
    """
    if psi.grid != base.grid:
        raise DomainError("potential lives on a different grid")
    vals = psi.real_values()
    psi_norm = ScalarField(base.grid, vals - float(np.max(vals)))
    h = complex_hessian(psi_norm)
    g = hermitize(base.g + h)
    lam_min = float(np.min(min_eigenvalue(g)))
    if lam_min <= 0:
        raise ConstructionError(
            f"potential perturbation destroys positivity (min eigenvalue {lam_min:.3e})",
            min_eigenvalue=lam_min,
        )
    metric = HermitianMetricField(
        base.grid, g, provenance=MetricProvenance("potential", psi=psi_norm, base=base)
    )
    validate_metric(metric)
    return metric


def make_metric(kind: str, **kwargs) -> HermitianMetricField:
    """Dispatch by construction kind: flat, conformal, product, perturbed, potential."""
    builders = {
        "flat": flat_metric,
        "conformal": conformal_metric,
        "product": product_metric,
        "perturbed": perturbed_metric,
        "potential": metric_from_potential,
    }
    if kind not in builders:
        raise DomainError(f"unknown metric kind {kind!r}; expected one of {sorted(builders)}")
    return builders[kind](**kwargs)


def volume_normalization(n: int) -> float:
    """2^n * n!, the density of the top form of a unit (1,1)-form."""
    return float(2**n * math.factorial(n))


def det_field(matrix_field: np.ndarray) -> np.ndarray:
    """Determinant of a Hermitian matrix field, as real values."""
    det = np.linalg.det(matrix_field)
    return det.real


def volume_density(metric: HermitianMetricField) -> ScalarField:
    """Density of the metric's top form against the coordinate measure."""
    return ScalarField(metric.grid, volume_normalization(metric.n) * det_field(metric.g))


def log_det(metric_or_matrix) -> np.ndarray:
    g = metric_or_matrix.g if isinstance(metric_or_matrix, HermitianMetricField) else metric_or_matrix
    sign, logabs = np.linalg.slogdet(g)
    if np.min(sign.real) <= 0:
        raise SingularMetricError("log det of a non-positive matrix field")
    return logabs


def mixed_form_density(matrix_fields: Sequence[np.ndarray], grid: ComplexGrid) -> ScalarField:
    """Density of the wedge product of n (1,1)-forms given by Hermitian matrix fields.

    density = 2^n * sum_{sigma,tau} sgn(sigma) sgn(tau) prod_m A^(m)[sigma(m), tau(m)];
    with all factors equal this reduces to 2^n * n! * det, matching volume_density.
    """
    n = grid.n
    if len(matrix_fields) != n:
        raise DomainError(f"need exactly {n} factor fields, got {len(matrix_fields)}")
    mats = [np.asarray(a, dtype=np.complex128) for a in matrix_fields]
    total = np.zeros(grid.shape, dtype=np.complex128)
    idx = list(range(n))
    for sigma in permutations(idx):
        sgn_s = _perm_sign(sigma)
        for tau in permutations(idx):
            term = np.ones(grid.shape, dtype=np.complex128)
            for m in range(n):
                term = term * mats[m][..., sigma[m], tau[m]]
            total += sgn_s * _perm_sign(tau) * term
    return ScalarField(grid, (2.0**n) * total.real)


def _perm_sign(perm) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def inverse_metric(matrix_field: np.ndarray, guard: float = 1e-12):
    """Batched inverse with an explicit smallest-eigenvalue guard."""
    lam = min_eigenvalue(matrix_field)
    lam_min = float(np.min(lam))
    if lam_min <= guard:
        point = np.unravel_index(int(np.argmin(lam)), lam.shape)
        raise SingularMetricError(
            f"matrix field nearly singular (min eigenvalue {lam_min:.3e} at point {point})",
            point=point,
            min_eigenvalue=lam_min,
        )
    return np.linalg.inv(matrix_field)
