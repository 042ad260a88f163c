"""Capacity of the negative part of the sectional-curvature rescaling.

All integrands are densities against the coordinate measure with the single
volume normalization from `metrics` (2^n n! det), so the region comparisons and
every reported ratio are normalization-independent. Boundary convention: points
where the densities tie go to the bounded region U.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import ricci
from .errors import DomainError
from .grid import ComplexGrid, ScalarField, top_form_integral
from .hsc import KappaField
from .metrics import (
    HermitianMetricField,
    det_field,
    max_eigenvalue,
    mixed_form_density,
    volume_density,
    volume_normalization,
)

NORMALIZATION_DOC = "top-form density = 2^n * n! * det(coefficient matrix) per coordinate volume"


@dataclass(frozen=True, eq=False)
class CapacityReport:
    """Capacity value at one lambda with its region masks and component integrals."""

    lam: float
    U_mask: np.ndarray = field(repr=False)
    V_mask: np.ndarray = field(repr=False)
    mass_U: float = 0.0
    mass_V: float = 0.0
    H_value: float = 0.0
    neg_locus_measure: float = 0.0
    min_form_value: float = 0.0

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "H": self.H_value,
            "mass_U": self.mass_U,
            "mass_V": self.mass_V,
            "neg_locus_measure": self.neg_locus_measure,
            "min_form_value": self.min_form_value,
            "U_points": int(self.U_mask.sum()),
            "V_points": int(self.V_mask.sum()),
            "normalization": NORMALIZATION_DOC,
        }


def _check_grids(omega: HermitianMetricField, kappa: KappaField, omega0: HermitianMetricField | None = None):
    if kappa.grid != omega.grid:
        raise DomainError("kappa field and metric live on different grids")
    if omega0 is not None and omega0.grid != omega.grid:
        raise DomainError("reference metric lives on a different grid")


def density_neg_kappa(omega: HermitianMetricField, kappa: KappaField) -> ScalarField:
    """Density of the negative-part top form: (-kappa)^n * 2^n n! det g on {kappa<0}, else 0."""
    _check_grids(omega, kappa)
    n = omega.n
    kv = kappa.kappa.real_values()
    neg = kv < 0
    dens = np.zeros(omega.grid.shape)
    detg = det_field(omega.g)
    dens[neg] = ((-kv[neg]) ** n) * volume_normalization(n) * detg[neg]
    return ScalarField(omega.grid, dens)


def regions(
    omega: HermitianMetricField, kappa: KappaField, lam: float, omega0: HermitianMetricField
) -> tuple[np.ndarray, np.ndarray]:
    """Classify {kappa < 0} into the bounded region U (ties included) and excess region V."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    _check_grids(omega, kappa, omega0)
    neg = kappa.negative_mask
    dk = density_neg_kappa(omega, kappa).values
    d0 = volume_density(omega0).values
    U = neg & (dk <= lam * d0)
    V = neg & (dk > lam * d0)
    return U, V


def capacity(
    omega: HermitianMetricField, kappa: KappaField, lam: float, omega0: HermitianMetricField
) -> CapacityReport:
    """Capacity at one lambda; computes both the U/V split and the min-form expression."""
    U, V = regions(omega, kappa, lam, omega0)
    grid = omega.grid
    dk = density_neg_kappa(omega, kappa).values
    d0 = volume_density(omega0).values
    neg = kappa.negative_mask
    mass_U = top_form_integral(ScalarField(grid, np.where(U, dk, 0.0)), grid)
    mass_V = lam * top_form_integral(ScalarField(grid, np.where(V, d0, 0.0)), grid)
    min_form = top_form_integral(ScalarField(grid, np.where(neg, np.minimum(dk, lam * d0), 0.0)), grid)
    neg_measure = top_form_integral(ScalarField(grid, np.where(neg, d0, 0.0)), grid)
    return CapacityReport(
        lam=float(lam),
        U_mask=U,
        V_mask=V,
        mass_U=mass_U,
        mass_V=mass_V,
        H_value=mass_U + mass_V,
        neg_locus_measure=neg_measure,
        min_form_value=min_form,
    )


def capacity_profile(
    omega: HermitianMetricField,
    kappa: KappaField,
    omega0: HermitianMetricField,
    lambdas,
) -> list[CapacityReport]:
    lams = [float(l) for l in lambdas]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise DomainError("lambdas must be strictly increasing")
    if any(l <= 0 for l in lams):
        raise DomainError("lambdas must be positive")
    return [capacity(omega, kappa, lam, omega0) for lam in lams]


def stabilization_threshold(
    omega: HermitianMetricField, kappa: KappaField, omega0: HermitianMetricField
) -> float | None:
    """Max density ratio over the negative locus; None when the locus is empty."""
    _check_grids(omega, kappa, omega0)
    neg = kappa.negative_mask
    if not np.any(neg):
        return None
    dk = density_neg_kappa(omega, kappa).values
    d0 = volume_density(omega0).values
    return float(np.max(dk[neg] / d0[neg]))


def negative_mass(omega: HermitianMetricField, kappa: KappaField) -> float:
    """Full negative-part mass, the stabilized capacity value."""
    dens = density_neg_kappa(omega, kappa)
    return top_form_integral(dens, omega.grid)


def c1n_integral(omega0: HermitianMetricField, ric: np.ndarray | None = None) -> float:
    """Integral of the n-th power of minus the Ricci form.

    On a torus chart the class-level value is 0, so the return value is a direct
    measure of combined curvature and quadrature error.
    """
    if ric is None:
        ric = ricci(omega0)
    n = omega0.n
    dens = mixed_form_density([-ric] * n, omega0.grid)
    return top_form_integral(dens, omega0.grid)


def negative_ricci_mass_from_ricci(ric: np.ndarray, grid: ComplexGrid) -> float:
    """Mass of the Ricci-negative-definite region: integral of det(-Ric) * 2^n n! there."""
    n = grid.n
    neg_def = max_eigenvalue(ric) < 0
    dens = np.zeros(grid.shape)
    if np.any(neg_def):
        dens[neg_def] = volume_normalization(n) * det_field(-ric)[neg_def]
    return top_form_integral(ScalarField(grid, dens), grid)


def negative_ricci_mass(omega: HermitianMetricField) -> float:
    return negative_ricci_mass_from_ricci(ricci(omega), omega.grid)


def capacity_csv(reports: list[CapacityReport]) -> str:
    """CSV profile export with the documented column layout."""
    lines = ["lambda,H,massU,massV,negMeasure"]
    for r in reports:
        lines.append(f"{r.lam!r},{r.H_value!r},{r.mass_U!r},{r.mass_V!r},{r.neg_locus_measure!r}")
    return "\n".join(lines) + "\n"
