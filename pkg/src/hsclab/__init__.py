"""Numerical laboratory for sectional-curvature capacity and continuation audits."""

__version__ = "0.1.0"

from .grid import ComplexGrid, ScalarField, d_z, d_zbar, top_form_integral  # noqa: F401
from .metrics import HermitianMetricField, make_metric  # noqa: F401
