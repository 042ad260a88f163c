import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hsclab.capacity import (
    c1n_integral,
    capacity,
    capacity_csv,
    capacity_profile,
    density_neg_kappa,
    negative_mass,
    negative_ricci_mass,
    negative_ricci_mass_from_ricci,
    regions,
    stabilization_threshold,
)
from hsclab.errors import DomainError
from hsclab.grid import ComplexGrid, ScalarField, top_form_integral
from hsclab.hsc import kappa_field, synthetic_kappa_field
from hsclab.metrics import conformal_metric, flat_metric, volume_density


def step_kappa(grid, values_by_window):
    """Piecewise-constant profile on cell-aligned axis-0 windows (exact integrals)."""
    kv = np.zeros(grid.shape)
    frac = grid.coordinate_field(0) / grid.periods[0]
    for (lo, hi), val in values_by_window:
        kv[(frac >= lo - 1e-12) & (frac < hi - 1e-12)] = val
    return synthetic_kappa_field(grid, kv)


@pytest.fixture(scope="module")
def grid32():
    return ComplexGrid(1, 32)


@pytest.fixture(scope="module")
def flat32(grid32):
    return flat_metric(grid32)


def test_density_trivial_cases(grid32, flat32):
    zero = synthetic_kappa_field(grid32, np.zeros(grid32.shape))
    assert np.max(np.abs(density_neg_kappa(flat32, zero).values)) == 0.0
    const = synthetic_kappa_field(grid32, np.full(grid32.shape, -1.0))
    dens = density_neg_kappa(flat32, const)
    np.testing.assert_array_equal(dens.values, 2.0)  # (-kappa)^n * 2^n n! * det = 2


def test_density_refinement_oracle():
    coarse = ComplexGrid(1, 16)
    fine = ComplexGrid(1, 64)
    out = []
    for grid in (coarse, fine):
        x = grid.coordinate_field(0)
        m = conformal_metric(grid, ScalarField(grid, 0.1 * np.cos(2 * np.pi * x)))
        kv = -1.0 - 0.5 * np.cos(2 * np.pi * x)
        kf = synthetic_kappa_field(grid, kv)
        out.append(top_form_integral(density_neg_kappa(m, kf), grid))
    assert abs(out[0] - out[1]) <= 1e-9


def test_regions_forced_cases(grid32, flat32):
    kf = step_kappa(grid32, [((0.0, 0.5), -1.0)])
    U, V = regions(flat32, kf, 100.0, flat32)  # lambda above every ratio
    assert np.array_equal(U, kf.negative_mask) and not V.any()
    U, V = regions(flat32, kf, 1e-9, flat32)  # lambda below every ratio
    assert np.array_equal(V, kf.negative_mask) and not U.any()
    with pytest.raises(DomainError):
        regions(flat32, kf, 0.0, flat32)


def test_regions_two_bump_hand_classification(grid32, flat32):
    # ratios 0.5 and 3.0 on disjoint quarter windows
    kf = step_kappa(grid32, [((0.0, 0.25), -0.5), ((0.5, 0.75), -3.0)])
    U, V = regions(flat32, kf, 1.0, flat32)
    frac = grid32.coordinate_field(0)
    in_first = (frac >= 0.0) & (frac < 0.25)
    in_second = (frac >= 0.5) & (frac < 0.75)
    assert np.array_equal(U, in_first)
    assert np.array_equal(V, in_second)
    assert stabilization_threshold(flat32, kf, flat32) == pytest.approx(3.0)


def test_boundary_ties_go_to_bounded_region(grid32, flat32):
    kf = step_kappa(grid32, [((0.0, 0.5), -1.0)])
    U, V = regions(flat32, kf, 1.0, flat32)  # ratio == lambda exactly
    assert np.array_equal(U, kf.negative_mask) and not V.any()


def test_capacity_hand_example(grid32, flat32):
    """kappa = -1 on a window of reference measure m, unit density ratio, lambda 1."""
    kf = step_kappa(grid32, [((0.0, 0.25), -1.0)])
    m = top_form_integral(ScalarField(grid32, np.where(kf.negative_mask, 2.0, 0.0)), grid32)
    rep = capacity(flat32, kf, 1.0, flat32)
    assert rep.H_value == pytest.approx(m, rel=1e-14)
    assert rep.mass_V == 0.0  # ties in U by convention
    assert rep.neg_locus_measure == pytest.approx(m, rel=1e-14)


def test_capacity_empty_negative_locus(grid32, flat32):
    kf = synthetic_kappa_field(grid32, np.full(grid32.shape, 0.5))
    rep = capacity(flat32, kf, 1.0, flat32)
    assert rep.H_value == 0.0
    assert stabilization_threshold(flat32, kf, flat32) is None
    assert all(r.H_value == 0.0 for r in capacity_profile(flat32, kf, flat32, [0.5, 1.0, 2.0]))


def test_profile_monotone_and_stabilizes(quasi_metric, quasi_kappa, flat64):
    Lambda = stabilization_threshold(quasi_metric, quasi_kappa, flat64)
    lams = list(np.geomspace(0.05 * Lambda, 2.0 * Lambda, 20))
    reports = capacity_profile(quasi_metric, quasi_kappa, flat64, lams)
    H = [r.H_value for r in reports]
    assert all(h > 0 for h in H)
    assert all(b >= a - 1e-14 for a, b in zip(H, H[1:]))
    v_meas = [r.mass_V / r.lam for r in reports]
    assert all(b <= a + 1e-14 for a, b in zip(v_meas, v_meas[1:]))
    full = negative_mass(quasi_metric, quasi_kappa)
    for r in reports:
        if r.lam >= Lambda:
            assert r.H_value == pytest.approx(full, rel=1e-10)
    rep10 = capacity(quasi_metric, quasi_kappa, 10 * Lambda, flat64)
    repL = capacity(quasi_metric, quasi_kappa, Lambda, flat64)
    assert rep10.H_value == pytest.approx(repL.H_value, rel=1e-12)


def test_min_form_agreement(quasi_metric, quasi_kappa, flat64):
    Lambda = stabilization_threshold(quasi_metric, quasi_kappa, flat64)
    for lam in np.geomspace(0.1 * Lambda, 3 * Lambda, 7):
        rep = capacity(quasi_metric, quasi_kappa, lam, flat64)
        assert rep.min_form_value == pytest.approx(rep.H_value, rel=1e-10)
        assert rep.H_value == rep.mass_U + rep.mass_V


def test_profile_requires_sorted_lambdas(quasi_metric, quasi_kappa, flat64):
    with pytest.raises(DomainError):
        capacity_profile(quasi_metric, quasi_kappa, flat64, [1.0, 0.5])
    with pytest.raises(DomainError):
        capacity_profile(quasi_metric, quasi_kappa, flat64, [-1.0, 0.5])


@settings(max_examples=25, deadline=None)
@given(
    lam1=st.floats(0.01, 10.0),
    factor=st.floats(1.1, 10.0),
    amp=st.floats(0.1, 5.0),
    width=st.sampled_from([0.25, 0.5, 0.75]),
)
def test_capacity_monotone_property(lam1, factor, amp, width):
    """Monotonicity in lambda over synthetic profiles (property-based)."""
    grid = ComplexGrid(1, 16)
    flat = flat_metric(grid)
    kv = np.zeros(grid.shape)
    frac = grid.coordinate_field(0)
    kv[frac < width] = -amp
    kv[frac >= 0.875] = 0.125
    kf = synthetic_kappa_field(grid, kv)
    r1 = capacity(flat, kf, lam1, flat)
    r2 = capacity(flat, kf, lam1 * factor, flat)
    assert r2.H_value >= r1.H_value - 1e-13
    assert r1.min_form_value == pytest.approx(r1.H_value, rel=1e-10)
    assert r1.H_value > 0


def test_reference_comparability_bound(quasi_metric, quasi_kappa, grid64, flat64):
    """Two-sided capacity comparison for equivalent reference metrics."""
    x = grid64.coordinate_field(0)
    omega1 = conformal_metric(grid64, ScalarField(grid64, 0.4 * np.sin(2 * np.pi * x)))
    d0 = volume_density(flat64).values
    d1 = volume_density(omega1).values
    C = float(max(np.max(d1 / d0), np.max(d0 / d1))) * (1 + 1e-12)
    for lam in (0.05, 0.1, 0.2):
        mid = capacity(quasi_metric, quasi_kappa, lam, omega1).H_value
        lo = capacity(quasi_metric, quasi_kappa, lam / C, flat64).H_value / C
        hi = C * capacity(quasi_metric, quasi_kappa, C * lam, flat64).H_value
        assert lo <= mid + 1e-12
        assert mid <= hi + 1e-12


def test_c1n_integral_torus(flat64, quasi_metric, product12):
    assert c1n_integral(flat64) == 0.0
    assert abs(c1n_integral(quasi_metric)) <= 1e-8
    assert abs(c1n_integral(product12)) <= 1e-7


def test_negative_ricci_mass(grid64, flat64):
    assert negative_ricci_mass(flat64) == 0.0
    # injected Ric = -identity: mass equals the chart volume in top-form units
    ric = np.broadcast_to(-np.eye(1, dtype=complex), grid64.shape + (1, 1)).copy()
    assert negative_ricci_mass_from_ricci(ric, grid64) == pytest.approx(2.0)  # 2^n n! vol


def test_negative_ricci_mass_refinement():
    vals = []
    for size in (16, 64):
        grid = ComplexGrid(1, size)
        x = grid.coordinate_field(0)
        ric = np.zeros(grid.shape + (1, 1), dtype=complex)
        ric[..., 0, 0] = 0.3 - np.exp(0.4 * np.cos(2 * np.pi * x))
        vals.append(negative_ricci_mass_from_ricci(ric, grid))
    # smooth-but-masked integrand: coarse already close, not spectrally exact
    assert abs(vals[0] - vals[1]) <= 1e-2
    fine = []
    for size in (64, 128):
        grid = ComplexGrid(1, size)
        x = grid.coordinate_field(0)
        ric = np.zeros(grid.shape + (1, 1), dtype=complex)
        ric[..., 0, 0] = -1.0 - 0.3 * np.cos(2 * np.pi * x)  # strictly negative: no mask edge
        fine.append(negative_ricci_mass_from_ricci(ric, grid))
    assert abs(fine[0] - fine[1]) <= 1e-8


def test_capacity_csv_layout(quasi_metric, quasi_kappa, flat64):
    reports = capacity_profile(quasi_metric, quasi_kappa, flat64, [0.05, 0.1])
    text = capacity_csv(reports)
    lines = text.strip().splitlines()
    assert lines[0] == "lambda,H,massU,massV,negMeasure"
    assert len(lines) == 3
    assert float(lines[1].split(",")[0]) == 0.05


def test_stabilization_threshold_unit_ratio(grid32, flat32):
    kf = step_kappa(grid32, [((0.0, 0.5), -1.0)])  # density ratio exactly 1 on the locus
    assert stabilization_threshold(flat32, kf, flat32) == pytest.approx(1.0)


@pytest.mark.parametrize("c", [0.5, 2.0, 4.0])
def test_capacity_scale_invariance_of_weighted_negative_part(c, quasi_metric, flat64):
    """The negative-part top form is built from kappa * omega, which is invariant
    under omega -> c * omega; the capacity must not move at all."""
    base = capacity(quasi_metric, kappa_field(quasi_metric), 0.1, flat64)
    scaled = quasi_metric.scaled(c)
    rep = capacity(scaled, kappa_field(scaled), 0.1, flat64)
    assert rep.H_value == base.H_value
    assert rep.mass_U == base.mass_U
    assert rep.mass_V == base.mass_V
