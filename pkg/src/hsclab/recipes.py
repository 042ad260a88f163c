"""Deterministic constructors for fields, metrics and metric sequences from JSON recipes."""

from __future__ import annotations

import numpy as np

from .audit import bump_potential, spike_potential
from .errors import DomainError
from .grid import ComplexGrid, ScalarField, random_bandlimited_field
from .hsc import synthetic_kappa_field
from .metrics import (
    HermitianMetricField,
    complex_hessian,
    conformal_metric,
    flat_metric,
    metric_from_potential,
    perturbed_metric,
    product_metric,
)
from .sequences import SequenceEntry

FIELD_TYPES = ("constant", "cos", "sum", "bump", "spike", "random_bandlimited")
METRIC_KINDS = ("flat", "conformal", "product", "potential", "perturbed", "scaled")
SEQUENCE_KINDS = ("shrinking_amplitude", "shrinking_support", "heavy_bump", "explicit")


def grid_from_spec(spec: dict) -> ComplexGrid:
    return ComplexGrid(spec["n"], spec["sizes"], spec.get("periods"))


def field_from_recipe(grid: ComplexGrid, spec: dict, rng: np.random.Generator) -> ScalarField:
    kind = spec.get("type")
    if kind == "constant":
        return ScalarField(grid, np.full(grid.shape, float(spec.get("value", 0.0))))
    if kind == "cos":
        axis = int(spec.get("axis", 0))
        freq = int(spec.get("frequency", 1))
        amp = float(spec.get("amplitude", 1.0))
        phase = float(spec.get("phase", 0.0))
        x = grid.coordinate_field(axis) / grid.periods[axis]
        return ScalarField(grid, amp * np.cos(2 * np.pi * freq * x + phase))
    if kind == "sum":
        total = np.zeros(grid.shape)
        for term in spec.get("terms", []):
            total = total + field_from_recipe(grid, term, rng).real_values()
        return ScalarField(grid, total)
    if kind == "bump":
        return bump_potential(grid, float(spec["depth"]), float(spec["width"]), spec.get("center"))
    if kind == "spike":
        return spike_potential(grid, float(spec["weight"]), float(spec["eta"]), spec.get("center"))
    if kind == "random_bandlimited":
        return random_bandlimited_field(
            grid, rng, max_mode=int(spec.get("max_mode", 3)), amplitude=float(spec.get("amplitude", 1.0))
        )
    raise DomainError(f"unknown field recipe type {kind!r}; expected one of {FIELD_TYPES}")


def metric_from_recipe(grid: ComplexGrid, spec: dict, rng: np.random.Generator) -> HermitianMetricField:
    kind = spec.get("kind")
    if kind == "flat":
        return flat_metric(grid, float(spec.get("scale", 1.0)))
    if kind == "conformal":
        u = field_from_recipe(grid, spec["u"], rng)
        return conformal_metric(grid, u, normalize_mean=spec.get("normalize_mean"))
    if kind == "product":
        factors = spec.get("factors", [])
        if len(factors) != 2:
            raise DomainError("product recipe needs exactly two factors")
        mets = []
        for fac in factors:
            fgrid = grid_from_spec(fac["grid"])
            mets.append(metric_from_recipe(fgrid, fac["metric"], rng))
        prod = product_metric(mets[0], mets[1])
        if prod.grid != grid:
            raise DomainError("product of factor grids does not match the scenario grid")
        return prod
    if kind == "potential":
        base = metric_from_recipe(grid, spec["base"], rng)
        psi = field_from_recipe(grid, spec["psi"], rng)
        return metric_from_potential(base, psi)
    if kind == "perturbed":
        base = metric_from_recipe(grid, spec["base"], rng)
        h = complex_hessian(field_from_recipe(grid, spec["h_potential"], rng))
        return perturbed_metric(base, h, float(spec.get("epsilon", 1.0)))
    if kind == "scaled":
        return metric_from_recipe(grid, spec["base"], rng).scaled(float(spec["factor"]))
    raise DomainError(f"unknown metric kind {kind!r}; expected one of {METRIC_KINDS}")


def _axis_window_mask(grid: ComplexGrid, lo: float, hi: float, axis: int = 0) -> np.ndarray:
    """Points with fractional axis coordinate in [lo, hi); exact measure when the
    endpoints are multiples of the axis spacing."""
    frac = grid.coordinate_field(axis) / grid.periods[axis]
    return (frac >= lo - 1e-12) & (frac < hi - 1e-12)


def _step_kappa_entry(
    grid: ComplexGrid,
    neg_value: float,
    neg_window: tuple[float, float],
    mu: float,
    mu_window: tuple[float, float],
    label: str,
) -> SequenceEntry:
    """Flat metric with an injected piecewise-constant kappa profile.

    Negative plateau of the given value on one axis window, a positive plateau
    realizing the prescribed maximum on a disjoint window, zero elsewhere.
    Cell-aligned windows make every capacity integral exactly hand-computable.
    """
    kv = np.zeros(grid.shape)
    kv[_axis_window_mask(grid, *neg_window)] = neg_value
    kv[_axis_window_mask(grid, *mu_window)] = mu
    return SequenceEntry(
        omega_hat=flat_metric(grid),
        kappa=synthetic_kappa_field(grid, kv),
        label=label,
        synthetic=True,
    )


def sequence_from_recipe(grid: ComplexGrid, spec: dict, rng: np.random.Generator) -> list[SequenceEntry]:
    kind = spec.get("kind")
    count = int(spec.get("count", 5))
    mu0 = float(spec.get("mu0", 0.5))
    mu_decay = float(spec.get("mu_decay", 0.5))
    mu_window = tuple(spec.get("mu_window", (0.75, 0.875)))
    if kind == "shrinking_amplitude":
        window = tuple(spec.get("support", (0.0, 0.25)))
        amp0 = float(spec.get("amplitude0", 2.0))
        amp_limit = float(spec.get("amplitude_limit", 0.5))
        decay = float(spec.get("amplitude_decay", 0.5))
        entries = []
        for i in range(count):
            amp = amp_limit + (amp0 - amp_limit) * decay**i
            entries.append(
                _step_kappa_entry(
                    grid, -amp, window, mu0 * mu_decay**i, mu_window, f"shrinking_amplitude[{i}]"
                )
            )
        return entries
    if kind == "shrinking_support":
        amp = float(spec.get("amplitude", 2.0))
        width0 = float(spec.get("support0", 0.25))
        decay = float(spec.get("support_decay", 0.5))
        min_cells = 1.0 / grid.sizes[0]
        entries = []
        for i in range(count):
            width = max(width0 * decay**i, min_cells)
            entries.append(
                _step_kappa_entry(grid, -amp, (0.0, width), mu0 * mu_decay**i, mu_window, f"shrinking_support[{i}]")
            )
        return entries
    if kind == "heavy_bump":
        window = tuple(spec.get("support", (0.0, 0.25)))
        log_ratio = float(spec.get("log_ratio", 6.0))
        # flat metrics on both sides: density ratio is (-kappa)^n, so kappa = -e^{log_ratio/n}
        kappa_val = -float(np.exp(log_ratio / grid.n))
        return [
            _step_kappa_entry(grid, kappa_val, window, mu0 * mu_decay**i, mu_window, f"heavy_bump[{i}]")
            for i in range(count)
        ]
    if kind == "explicit":
        entries = []
        for i, item in enumerate(spec.get("entries", [])):
            metric = metric_from_recipe(grid, item["metric"], rng)
            kv = field_from_recipe(grid, item["kappa"], rng).real_values()
            entries.append(
                SequenceEntry(metric, synthetic_kappa_field(grid, kv), label=f"explicit[{i}]", synthetic=True)
            )
        return entries
    raise DomainError(f"unknown sequence kind {kind!r}; expected one of {SEQUENCE_KINDS}")
