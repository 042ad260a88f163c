"""Checks on designed metric sequences: trend reports and the heavy-negativity gate.

Sequence entries pair a metric with its kappa data. Entries may be synthetic
(kappa injected rather than computed from the metric); they are labeled so in
every report, since the capacity-level integrals take kappa as data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .audit import ConstantsLedger, InequalityCertificate, SLACK_QUAD, certify, not_applicable, slack_model_string, _rel_slack
from .capacity import capacity, density_neg_kappa, regions
from .errors import DomainError
from .grid import ScalarField, top_form_integral
from .hsc import KappaField
from .metrics import HermitianMetricField, volume_density


@dataclass(frozen=True, eq=False)
class SequenceEntry:
    omega_hat: HermitianMetricField
    kappa: KappaField
    label: str = ""
    synthetic: bool = True


@dataclass(eq=False)
class AlmostQuasiNegativeReport:
    """Per-entry trend data for the two defining conditions plus the capacity split."""

    mus: list[float]
    neg_nonempty: list[bool]
    H_values: list[float]
    mass_components: list[float]
    measure_components: list[float]
    mu_nonincreasing: bool
    mu_trend_to_zero: bool
    H_limsup: float
    mass_limsup: float
    measure_limsup: float
    limsup_carrier: str
    lambda0: float
    synthetic: bool
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "mus": self.mus,
            "neg_nonempty": self.neg_nonempty,
            "H_values": self.H_values,
            "mass_components": self.mass_components,
            "measure_components": self.measure_components,
            "mu_nonincreasing": self.mu_nonincreasing,
            "mu_trend_to_zero": self.mu_trend_to_zero,
            "H_limsup": self.H_limsup,
            "mass_limsup": self.mass_limsup,
            "measure_limsup": self.measure_limsup,
            "limsup_carrier": self.limsup_carrier,
            "lambda0": self.lambda0,
            "synthetic": self.synthetic,
            "flags": self.flags,
        }


def _tail(values: list[float]) -> list[float]:
    k = max(1, len(values) // 2)
    return values[-k:]


def almost_quasi_negative_check(
    sequence: list[SequenceEntry],
    omega0: HermitianMetricField,
    lambda0: float,
) -> AlmostQuasiNegativeReport:
    """Report the defining trends of the sequence and which component carries the limsup."""
    if not sequence:
        raise DomainError("sequence is empty")
    if not lambda0 > 0:
        raise DomainError(f"lambda0 must be positive, got {lambda0}")
    mus, neg_ok, Hs, masses, measures, flags = [], [], [], [], [], []
    for i, entry in enumerate(sequence):
        mus.append(entry.kappa.mu)
        neg_ok.append(bool(np.any(entry.kappa.negative_mask)))
        if entry.kappa.mu <= 0:
            flags.append(f"entry {i}: mu <= 0 (standing-assumption flag, not a failure)")
        report = capacity(entry.omega_hat, entry.kappa, lambda0, omega0)
        Hs.append(report.H_value)
        masses.append(report.mass_U)
        measures.append(report.mass_V / lambda0)
    mu_noninc = all(b <= a + 1e-15 for a, b in zip(mus, mus[1:]))
    mu_zero = mu_noninc and mus[-1] <= max(0.25 * mus[0], 1e-12)
    pos_tol = 1e-12
    mass_limsup = max(_tail(masses))
    measure_limsup = max(_tail(measures))
    if mass_limsup > pos_tol and measure_limsup > pos_tol:
        carrier = "both"
    elif mass_limsup > pos_tol:
        carrier = "mass"
    elif measure_limsup > pos_tol:
        carrier = "measure"
    else:
        carrier = "none"
    return AlmostQuasiNegativeReport(
        mus=mus,
        neg_nonempty=neg_ok,
        H_values=Hs,
        mass_components=masses,
        measure_components=measures,
        mu_nonincreasing=mu_noninc,
        mu_trend_to_zero=mu_zero,
        H_limsup=max(_tail(Hs)),
        mass_limsup=mass_limsup,
        measure_limsup=measure_limsup,
        limsup_carrier=carrier,
        lambda0=float(lambda0),
        synthetic=any(e.synthetic for e in sequence),
        flags=flags,
    )


def implied_measure_lower_bound(a: float, n: int, B: float) -> float:
    """Smallest m > 0 with n * m * exp(a/m) <= B, for a > 0.

    The map decreases then increases with minimum n*a*e at m=a; no admissible
    m exists when that minimum already exceeds B (returns +inf).
    """
    if a <= 0:
        raise DomainError("implied bound needs a positive exponent gap")
    if n * a * math.e > B:
        return math.inf
    f = lambda m: n * m * math.exp(a / m) - B
    lo = a
    while f(lo) < 0:
        lo *= 0.5
        if lo < 1e-300:
            return 0.0
    if f(lo) == 0.0:
        return lo
    return float(brentq(f, lo, a, xtol=1e-15, rtol=1e-14))


def heavy_negativity_check(
    sequence: list[SequenceEntry],
    omega0: HermitianMetricField,
    lam: float,
    ledger: ConstantsLedger,
) -> InequalityCertificate:
    """Gate check: a large excess-region log integral forces the excess measure up.

    Evaluates L_i = int_{V_i} log(ratio) vol_0 and m_i = int_{V_i} vol_0 per
    entry; when the tail of L exceeds K0 the measure tail must clear the bound
    implied by the sup-potential chain.
    """
    if lam < 1:
        raise DomainError(f"lambda must be at least 1, got {lam}")
    if not sequence:
        raise DomainError("sequence is empty")
    grid = omega0.grid
    n = grid.n
    dens0 = volume_density(omega0).values
    Ls, ms = [], []
    for entry in sequence:
        U, V = regions(entry.omega_hat, entry.kappa, lam, omega0)
        if not np.any(V):
            Ls.append(0.0)
            ms.append(0.0)
            continue
        dk = density_neg_kappa(entry.omega_hat, entry.kappa).values
        log_ratio = np.where(V, np.log(np.where(V, dk / dens0, 1.0)), 0.0)
        Ls.append(top_form_integral(ScalarField(grid, log_ratio * dens0), grid))
        ms.append(top_form_integral(ScalarField(grid, np.where(V, dens0, 0.0)), grid))

    data = {
        "log_integrals": Ls,
        "measures": ms,
        "K0": ledger.K0,
        "lambda": lam,
        "synthetic": any(e.synthetic for e in sequence),
    }
    if all(m == 0.0 for m in ms):
        from dataclasses import replace

        cert = not_applicable(
            "heavy-negativity-measure-bound",
            "every excess region is empty; the gate is vacuous",
        )
        return replace(cert, data=data)

    c6 = min(_tail(Ls))
    m_tail = min(_tail(ms))
    premise = c6 > ledger.K0
    data["c6"] = c6
    data["measure_tail"] = m_tail
    data["premise"] = premise

    if not premise:
        return InequalityCertificate(
            name="heavy-negativity-measure-bound",
            lhs=m_tail,
            rhs=0.0,
            margin=0.0,
            passed=True,
            slack=0.0,
            slack_model="n/a",
            note=f"premise not met: log-integral tail {c6:g} <= K0 {ledger.K0:g}; gate vacuous",
            data=data,
        )

    a = math.log(c6) / n - ledger.c1  # positive exactly when c6 > K0
    B = (ledger.b0 + ledger.c0) * ledger.c0 ** (-n) * ledger.C_alpha
    m_lower = implied_measure_lower_bound(a, n, B)
    data["implied_lower_bound"] = m_lower
    note = "premise holds: measure tail must clear the implied bound"
    if math.isinf(m_lower):
        note = "premise holds but the chain admits no measure at all (infeasible constants)"
    return certify(
        "heavy-negativity-measure-bound",
        m_tail,
        m_lower,
        "ge",
        slack=_rel_slack(m_tail, 0.0 if math.isinf(m_lower) else m_lower, SLACK_QUAD),
        slack_model=slack_model_string(0),
        note=note,
        refs=("ledger.K0", "ledger.c1", "ledger.C_alpha"),
        data=data,
    )
