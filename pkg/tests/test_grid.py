import numpy as np
import pytest

from hsclab.errors import DomainError
from hsclab.grid import (
    ComplexGrid,
    ScalarField,
    constant_field,
    d_z,
    d_zbar,
    grid_mean,
    product_grid,
    random_bandlimited_field,
    spectral_tail_fraction,
    top_form_integral,
)


def test_grid_validation():
    with pytest.raises(DomainError):
        ComplexGrid(1, 7)  # odd
    with pytest.raises(DomainError):
        ComplexGrid(1, 6)  # below minimum
    with pytest.raises(DomainError):
        ComplexGrid(0, 16)
    with pytest.raises(DomainError):
        ComplexGrid(1, 16, periods=-1.0)
    g = ComplexGrid(2, (16, 8), periods=(1.0, 1.0, 2.0, 2.0))
    assert g.shape == (16, 16, 8, 8)
    assert g.point_count == 16 * 16 * 8 * 8
    assert g.volume == pytest.approx(4.0)


def test_d_z_of_constant_is_zero(grid64):
    df = d_z(constant_field(grid64, 3.5), 0)
    assert np.max(np.abs(df.values)) < 1e-14


def test_d_z_closed_form(grid64):
    x = grid64.coordinate_field(0)
    f = ScalarField(grid64, np.exp(2j * np.pi * x))
    df = d_z(f, 0)
    oracle = np.pi * 1j * np.exp(2j * np.pi * x)
    assert np.max(np.abs(df.values - oracle)) < 1e-12


def test_d_zbar_closed_form(grid64):
    # Fourier mode e^{i(ax+by)}: d_z multiplies by (ia+b)/2, d_zbar by (ia-b)/2.
    # Only constants are annihilated by d_zbar on a periodic chart, so the
    # closed-form-derivative oracle is the checkable version of this example.
    x = grid64.coordinate_field(0)
    y = grid64.coordinate_field(1)
    a, b = 2 * np.pi, -4 * np.pi
    f = ScalarField(grid64, np.exp(1j * (a * x + b * y)))
    np.testing.assert_allclose(d_z(f, 0).values, (1j * a + b) / 2 * f.values, atol=1e-10)
    np.testing.assert_allclose(d_zbar(f, 0).values, (1j * a - b) / 2 * f.values, atol=1e-10)
    assert np.max(np.abs(d_zbar(constant_field(grid64, 2.0), 0).values)) == 0.0


def test_d_zbar_conjugation_symmetry(grid64):
    rng = np.random.default_rng(1)
    f = random_bandlimited_field(grid64, rng, max_mode=4)
    lhs = d_zbar(ScalarField(grid64, np.conj(f.values.astype(complex))), 0).values
    rhs = np.conj(d_z(f, 0).values)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_mixed_partials_commute(grid64):
    rng = np.random.default_rng(2)
    f = random_bandlimited_field(grid64, rng, max_mode=5)
    a = d_zbar(d_z(f, 0), 0).values
    b = d_z(d_zbar(f, 0), 0).values
    assert np.max(np.abs(a - b)) <= 1e-10


def test_derivative_axis_out_of_range(grid64):
    with pytest.raises(DomainError):
        d_z(constant_field(grid64), 1)
    with pytest.raises(DomainError):
        d_zbar(constant_field(grid64), -1)


def test_top_form_integral_trivial(grid64):
    assert top_form_integral(constant_field(grid64, 1.0), grid64) == pytest.approx(1.0)
    x = grid64.coordinate_field(0)
    assert abs(top_form_integral(ScalarField(grid64, np.cos(2 * np.pi * x)), grid64)) < 1e-12


def test_top_form_integral_grid_mismatch(grid64):
    other = ComplexGrid(1, 32)
    with pytest.raises(DomainError):
        top_form_integral(constant_field(other, 1.0), grid64)


def test_top_form_integral_refinement_oracle():
    """Band-limited integrands integrate identically on a 4x finer grid."""
    coarse = ComplexGrid(1, 16)
    fine = ComplexGrid(1, 64)
    rng = np.random.default_rng(3)
    f_coarse = random_bandlimited_field(coarse, rng, max_mode=3)
    rng = np.random.default_rng(3)
    f_fine = random_bandlimited_field(fine, rng, max_mode=3)
    a = top_form_integral(f_coarse, coarse)
    b = top_form_integral(f_fine, fine)
    assert abs(a - b) <= 1e-10


def test_top_form_integral_linear_monotone(grid64):
    rng = np.random.default_rng(4)
    f = random_bandlimited_field(grid64, rng, max_mode=3)
    g = ScalarField(grid64, np.abs(f.values) + 0.5)
    int_f = top_form_integral(f, grid64)
    int_g = top_form_integral(g, grid64)
    both = top_form_integral(ScalarField(grid64, f.values + 2.0 * g.values), grid64)
    assert both == pytest.approx(int_f + 2.0 * int_g, rel=1e-12)
    assert int_g >= int_f  # g >= f pointwise


def test_real_field_roundtrip_through_spectral_space(grid64):
    rng = np.random.default_rng(5)
    f = random_bandlimited_field(grid64, rng, max_mode=6)
    back = np.fft.ifftn(np.fft.fftn(f.values))
    assert np.max(np.abs(back.imag)) < 1e-12


def test_spectral_tail_diagnostic(grid64):
    x = grid64.coordinate_field(0)
    smooth = ScalarField(grid64, np.exp(0.1 * np.cos(2 * np.pi * x)))
    assert spectral_tail_fraction(smooth.values, grid64) < 1e-8
    rough = np.zeros(grid64.shape)
    rough[::2, :] = 1.0  # Nyquist-heavy profile
    assert spectral_tail_fraction(rough, grid64) > 1e-2


def test_product_grid():
    g = product_grid(ComplexGrid(1, 16), ComplexGrid(1, 8, periods=2.0))
    assert g.n == 2
    assert g.sizes == (16, 16, 8, 8)
    assert g.periods == (1.0, 1.0, 2.0, 2.0)


def test_grid_mean(grid64):
    assert grid_mean(constant_field(grid64, 2.5)) == pytest.approx(2.5)
