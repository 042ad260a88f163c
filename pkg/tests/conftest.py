import numpy as np
import pytest

from hsclab.grid import ComplexGrid, ScalarField
from hsclab.hsc import kappa_field
from hsclab.masolver import make_t_schedule, solve_path
from hsclab.metrics import conformal_metric, flat_metric, product_metric


@pytest.fixture(scope="session")
def grid64():
    return ComplexGrid(1, 64)


@pytest.fixture(scope="session")
def flat64(grid64):
    return flat_metric(grid64)


@pytest.fixture(scope="session")
def quasi_metric(grid64):
    """Conformal n=1 metric with a genuinely mixed-sign curvature profile."""
    x = grid64.coordinate_field(0)
    u = ScalarField(grid64, -0.02 * np.cos(2 * np.pi * x))
    return conformal_metric(grid64, u, normalize_mean=1.0)


@pytest.fixture(scope="session")
def quasi_kappa(quasi_metric):
    return kappa_field(quasi_metric)


@pytest.fixture(scope="session")
def quasi_path(quasi_metric, flat64, quasi_kappa):
    mu = quasi_kappa.mu
    schedule = make_t_schedule(10.0 * (mu + 1.0), 1.02 * mu, 20, 1, mu)
    return solve_path(quasi_metric, flat64, schedule, mu_hat=mu)


@pytest.fixture(scope="session")
def product12():
    """n=2 product of two curve metrics with negative curvature wells."""
    g1 = ComplexGrid(1, 12)
    x = g1.coordinate_field(0)
    m1 = conformal_metric(g1, ScalarField(g1, -0.3 * np.cos(2 * np.pi * x)), normalize_mean=1.0)
    g2 = ComplexGrid(1, 12)
    y = g2.coordinate_field(0)
    m2 = conformal_metric(g2, ScalarField(g2, -0.5 * np.cos(2 * np.pi * y)), normalize_mean=1.0)
    return product_metric(m1, m2)
