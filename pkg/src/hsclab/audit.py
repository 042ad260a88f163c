"""Numerical audits: named constants and inequality certificates with margins.

Every certificate evaluates both sides of its inequality independently and
records value, bound, margin and the discretization slack in force. The
empirical constants (integrability proxy, uniform potential-integral bound)
are family-relative: they are taken over a documented finite trial-potential
library and labeled as such, with per-state coverage certificates guarding the
places where a chain relies on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .capacity import capacity, c1n_integral, density_neg_kappa
from .curvature import ricci
from .errors import ConstructionError, DomainError, TrialPotentialError
from .grid import ComplexGrid, ScalarField, top_form_integral
from .hsc import KappaField
from .masolver import ContinuityState, PathResult, PotentialPair
from .metrics import (
    HermitianMetricField,
    complex_hessian,
    min_eigenvalue,
    mixed_form_density,
    volume_density,
)

# slack model: one spectral-derivative level costs 1e-8 relative,
# each additional level multiplies by 1e2
SLACK_QUAD = 1e-8
SLACK_LEVELS = {0: 1e-8, 1: 1e-8, 2: 1e-6, 3: 1e-4}


def slack_model_string(levels: int) -> str:
    return f"relative {SLACK_LEVELS[levels]:.0e} ({levels} spectral-derivative level(s))"


@dataclass(frozen=True, eq=False)
class InequalityCertificate:
    """Uniform container for one audited inequality."""

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    slack: float
    slack_model: str
    applicable: bool = True
    informational: bool = False
    note: str = ""
    refs: tuple[str, ...] = ()
    children: tuple["InequalityCertificate", ...] = ()
    data: dict = field(default_factory=dict)

    def flatten(self) -> list["InequalityCertificate"]:
        out = [self]
        for child in self.children:
            out.extend(child.flatten())
        return out

    def to_json(self) -> dict:
        doc = {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "passed": self.passed,
            "slack": self.slack,
            "slack_model": self.slack_model,
            "applicable": self.applicable,
            "informational": self.informational,
            "refs": list(self.refs),
        }
        if self.note:
            doc["note"] = self.note
        if self.data:
            doc["data"] = _jsonable(self.data)
        return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def certify(
    name: str,
    value: float,
    bound: float,
    direction: str,
    *,
    slack: float,
    slack_model: str,
    note: str = "",
    refs: tuple[str, ...] = (),
    children: tuple = (),
    data: dict | None = None,
) -> InequalityCertificate:
    """Build a certificate; margin is oriented so favorable means margin >= 0."""
    if direction == "ge":
        margin = value - bound
    elif direction == "le":
        margin = bound - value
    else:
        raise DomainError(f"direction must be 'ge' or 'le', got {direction!r}")
    return InequalityCertificate(
        name=name,
        lhs=float(value),
        rhs=float(bound),
        margin=float(margin),
        passed=bool(margin >= -slack),
        slack=float(slack),
        slack_model=slack_model,
        note=note or f"value {direction} bound",
        refs=refs,
        children=tuple(children),
        data=data or {},
    )


def certify_equal(
    name: str,
    a: float,
    b: float,
    *,
    slack: float,
    slack_model: str,
    note: str = "",
    refs: tuple[str, ...] = (),
    data: dict | None = None,
) -> InequalityCertificate:
    """Two independent evaluations of the same quantity; margin = -|a - b|."""
    gap = abs(a - b)
    return InequalityCertificate(
        name=name,
        lhs=float(a),
        rhs=float(b),
        margin=-gap,
        passed=gap <= slack,
        slack=float(slack),
        slack_model=slack_model,
        note=note or "equality within slack",
        refs=refs,
        data=data or {},
    )


def not_applicable(name: str, note: str, refs: tuple[str, ...] = ()) -> InequalityCertificate:
    return InequalityCertificate(
        name=name,
        lhs=0.0,
        rhs=0.0,
        margin=0.0,
        passed=True,
        slack=0.0,
        slack_model="n/a",
        applicable=False,
        note=note,
        refs=refs,
    )


def _rel_slack(a: float, b: float, rel: float, floor: float = 1e-30) -> float:
    return rel * max(abs(a), abs(b), floor)


@dataclass(frozen=True)
class ConstantsLedger:
    """All named constants entering the audited inequality chains."""

    n: int
    delta1: float
    delta2: float
    vol0: float
    b0: float
    alpha_proxy: float
    c0: float
    C_alpha: float
    c1: float
    c2: float
    c2p: float
    c3: float
    c4: float
    c5: float
    K0: float
    epsilon_hat: float
    e_min_family: float
    family_size: int
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        doc = {k: _jsonable(getattr(self, k)) for k in (
            "n", "delta1", "delta2", "vol0", "b0", "alpha_proxy", "c0", "C_alpha",
            "c1", "c2", "c2p", "c3", "c4", "c5", "K0", "epsilon_hat",
            "e_min_family", "family_size",
        )}
        doc["notes"] = list(self.notes)
        doc["family_relative"] = True
        return doc


# ---------------------------------------------------------------------------
# trial-potential library


def _periodic_r2(grid: ComplexGrid, center) -> np.ndarray:
    """Smooth periodic squared-distance surrogate sum_a sin^2(pi (x_a - c_a)/L_a)."""
    if center is None:
        center = [0.5 * p for p in grid.periods]
    r2 = np.zeros(grid.shape)
    for a in range(2 * grid.n):
        x = grid.coordinate_field(a)
        r2 += np.sin(np.pi * (x - center[a]) / grid.periods[a]) ** 2
    return r2


def bump_potential(grid: ComplexGrid, depth: float, width: float, center=None) -> ScalarField:
    """Smooth well of the given depth, sup-normalized to 0."""
    r2 = _periodic_r2(grid, center)
    u = -depth * np.exp(-r2 / width**2)
    return ScalarField(grid, u - u.max())


def multibump_potential(grid: ComplexGrid, depths, widths, centers) -> ScalarField:
    u = np.zeros(grid.shape)
    for depth, width, center in zip(depths, widths, centers):
        u -= depth * np.exp(-_periodic_r2(grid, center) / width**2)
    return ScalarField(grid, u - u.max())


def spike_potential(grid: ComplexGrid, weight: float, eta: float, center=None) -> ScalarField:
    """Log-smoothed spike, the model unbounded-from-below profile family."""
    r2 = _periodic_r2(grid, center)
    u = weight * np.log((r2 + eta**2) / (float(r2.max()) + eta**2))
    return ScalarField(grid, u - u.max())


def default_trial_potentials(grid: ComplexGrid) -> list[ScalarField]:
    """Documented deterministic catalog: bumps, a multibump, log-smoothed spikes.

    Entries span admissibility: the shallow ones fit every class scale >= 1,
    the deep ones only enter the families taken at larger scales.
    """
    c1 = [0.25 * p for p in grid.periods]
    c2 = [0.75 * p for p in grid.periods]
    pots = [bump_potential(grid, depth, 0.8) for depth in (0.05, 0.15, 0.4)]
    pots.append(bump_potential(grid, 0.25, 0.5))
    pots.append(bump_potential(grid, 1.2, 0.8))
    pots.append(multibump_potential(grid, (0.2, 0.3), (0.5, 0.45), (c1, c2)))
    pots.extend(spike_potential(grid, w, eta) for w in (0.08, 0.2) for eta in (0.25, 0.08))
    pots.append(spike_potential(grid, 0.3, 0.05))
    return pots


def psh_margin(omega0: HermitianMetricField, u: ScalarField, scale: float = 1.0) -> float:
    """Min eigenvalue of scale*g0 + Hess(u); positive means admissible."""
    h = scale * omega0.g + complex_hessian(u)
    return float(np.min(min_eigenvalue(h)))


def normalize_sup(u: ScalarField) -> ScalarField:
    vals = u.real_values()
    return ScalarField(u.grid, vals - float(np.max(vals)))


def admissible_for(potentials, omega0: HermitianMetricField, scale: float) -> list[ScalarField]:
    """Sup-normalized subset of the catalog admissible at the given class scale."""
    out = []
    for u in potentials:
        un = normalize_sup(u)
        if psh_margin(omega0, un, scale) > 0:
            out.append(un)
    return out


def _check_family(potentials, omega0: HermitianMetricField, scale: float) -> list[ScalarField]:
    fam = []
    for idx, u in enumerate(potentials):
        un = normalize_sup(u)
        if psh_margin(omega0, un, scale) <= 0:
            raise TrialPotentialError(
                f"trial potential {idx} is not admissible at class scale {scale:g}", index=idx
            )
        fam.append(un)
    return fam


# ---------------------------------------------------------------------------
# empirical constants


def ric_lower_constant(
    omega0: HermitianMetricField, ric0: np.ndarray | None = None
) -> tuple[float, InequalityCertificate]:
    """Smallest b0 >= 0 with Ric + b0*g0 >= 0 pointwise, plus its re-check certificate."""
    if ric0 is None:
        ric0 = ricci(omega0)
    L = np.linalg.cholesky(omega0.g)
    Linv = np.linalg.inv(L)
    A = Linv @ ric0 @ np.conj(np.swapaxes(Linv, -1, -2))
    lam = np.linalg.eigvalsh(0.5 * (A + np.conj(np.swapaxes(A, -1, -2))))[..., 0]
    b0 = max(0.0, -float(np.min(lam)))
    check = float(np.min(min_eigenvalue(ric0 + b0 * omega0.g)))
    scale = max(1.0, float(np.max(np.abs(ric0))))
    cert = certify(
        "ricci-lower-bound",
        check,
        0.0,
        "ge",
        slack=SLACK_LEVELS[2] * scale,
        slack_model=slack_model_string(2),
        note=f"min eigenvalue of Ric + b0*g0 with b0={b0!r}",
        refs=("ledger.b0",),
    )
    return b0, cert


@dataclass(frozen=True, eq=False)
class AlphaProxyResult:
    """Family-relative integrability exponent estimate (not a certified invariant)."""

    value: float
    beta_grid: tuple[float, ...]
    cap: float
    worst_integrals: tuple[float, ...]
    family_size: int


def default_beta_grid() -> tuple[float, ...]:
    return tuple(2.0**k for k in range(-4, 7))


def alpha_invariant_proxy(
    omega0: HermitianMetricField,
    trial_potentials,
    beta_grid=None,
    cap_factor: float = 100.0,
) -> AlphaProxyResult:
    """Largest tested beta with sup-family integral of e^{-beta u} under the cap.

    Upper-bound estimate of integrability behavior over the trial family only;
    rejects potentials that are not admissible for the reference class.
    """
    fam = _check_family(trial_potentials, omega0, 1.0)
    betas = tuple(sorted(beta_grid or default_beta_grid()))
    dens0 = volume_density(omega0)
    vol = top_form_integral(dens0, omega0.grid)
    cap = cap_factor * vol
    worst = []
    value = 0.0
    for beta in betas:
        integrals = [
            top_form_integral(ScalarField(omega0.grid, np.exp(-beta * u.values) * dens0.values), omega0.grid)
            for u in fam
        ]
        w = max(integrals) if integrals else vol
        worst.append(w)
        if w <= cap:
            value = beta
    return AlphaProxyResult(value, betas, cap, tuple(worst), len(fam))


def measured_alpha_cap(
    omega0: HermitianMetricField, scale: float, trial_potentials, extra_potentials=()
) -> float:
    """Max over the family of int e^{-v} (scale*omega0)^n for class-admissible v."""
    fam = admissible_for(trial_potentials, omega0, scale)
    fam.extend(admissible_for(extra_potentials, omega0, scale))
    if not fam:
        raise ConstructionError(f"no admissible trial potential at class scale {scale:g}")
    dens0 = volume_density(omega0).values
    grid = omega0.grid
    return (scale ** grid.n) * max(
        top_form_integral(ScalarField(grid, np.exp(-u.values) * dens0), grid) for u in fam
    )


def hartogs_constant(
    omega0: HermitianMetricField,
    trial_potentials,
    c0: float,
    b0: float,
    floor: float = 1e-6,
) -> float:
    """Family max of -int u ((c0+b0) omega0)^n over sup-normalized admissible u, floored."""
    fam = _check_family(trial_potentials, omega0, c0 + b0)
    dens0 = volume_density(omega0).values
    grid = omega0.grid
    worst = max(
        -top_form_integral(ScalarField(grid, u.values * dens0), grid) for u in fam
    )
    return max(floor, ((c0 + b0) ** grid.n) * worst)


def _increasing_inf(prefactor: float, a: float, lo: float, hi: float) -> float:
    """inf over [lo, hi] of prefactor * s * exp(-a/s); the map is increasing in s."""
    if lo > hi:
        return math.inf
    return prefactor * lo * math.exp(-a / lo)


def build_ledger(
    omega_hat_or_none,
    omega0: HermitianMetricField,
    delta1: float,
    delta2: float,
    *,
    trial_potentials=None,
    beta_grid=None,
    cap_factor: float = 100.0,
    c1_floor: float = 1e-6,
    epsilon_hat: float | None = None,
    ric0: np.ndarray | None = None,
) -> tuple[ConstantsLedger, list[InequalityCertificate]]:
    """Assemble every chain constant from the reference metric and the trial family.

    The first argument is accepted for signature symmetry with the audits and
    only used for its grid check when present.
    """
    if omega_hat_or_none is not None and omega_hat_or_none.grid != omega0.grid:
        raise DomainError("metrics live on different grids")
    if not (delta1 > 0 and delta2 > 0):
        raise DomainError("delta1 and delta2 must be positive")
    grid = omega0.grid
    n = grid.n
    notes: list[str] = []
    certs: list[InequalityCertificate] = []
    if ric0 is None:
        ric0 = ricci(omega0)

    catalog = list(trial_potentials) if trial_potentials is not None else default_trial_potentials(grid)
    b0, b0_cert = ric_lower_constant(omega0, ric0)
    certs.append(b0_cert)

    fam0 = admissible_for(catalog, omega0, 1.0)
    if not fam0:
        raise ConstructionError("no trial potential is admissible for the reference class")
    proxy = alpha_invariant_proxy(omega0, fam0, beta_grid=beta_grid, cap_factor=cap_factor)
    if proxy.value <= 0:
        raise ConstructionError("integrability proxy vanished on the trial family; lower the cap factor")
    c0 = proxy.value / 2.0

    C_alpha = measured_alpha_cap(omega0, c0, catalog)
    fam_cb = admissible_for(catalog, omega0, c0 + b0)
    if not fam_cb:
        raise ConstructionError(f"no admissible trial potential at class scale {c0 + b0:g}")
    c1 = hartogs_constant(omega0, fam_cb, c0, b0, floor=c1_floor)

    dens0 = volume_density(omega0)
    vol0 = top_form_integral(dens0, grid)

    c2 = _increasing_inf(delta1 ** (1.0 / n - 1.0), delta1 * c1, delta2 / 2.0, delta1 * vol0)
    if math.isinf(c2):
        notes.append("case (mass >= delta2/2) infeasible: delta2/2 exceeds delta1 * vol0")
    c2p = _increasing_inf(delta1 ** (1.0 / n), c1, delta2 / (2.0 * delta1), vol0)
    if math.isinf(c2p):
        notes.append("case (measure >= delta2/(2 delta1)) infeasible: lower end exceeds vol0")
    c3 = min(c2, c2p) / (c0 ** (-n) * C_alpha)
    if math.isinf(c3):
        raise ConstructionError("both capacity cases are infeasible for the given delta1, delta2")

    e_min = min(
        top_form_integral(ScalarField(grid, np.exp(u.values) * dens0.values), grid) for u in fam_cb
    )
    if n * math.log(n * c3) > n * math.log(c0 + b0):
        notes.append("potential family for the infimum constant is empty: n log(n c3) > n log(c0+b0)")
    c4 = (n * c3) ** n * e_min

    I_s = []
    for s in range(1, n + 1):
        dens = mixed_form_density([omega0.g] * s + [-ric0] * (n - s), grid)
        I_s.append(top_form_integral(dens, grid))
    c5 = sum(math.comb(n, s) * (2 * n) ** s * abs(I) for s, I in zip(range(1, n + 1), I_s))

    K0 = math.exp(n * c1)
    eps = epsilon_hat if epsilon_hat is not None else min(c4 / (2.0 * c5), c0 / (2.0 * n))
    notes.append(f"mixed reference integrals I_s (s=1..n): {[float(v) for v in I_s]!r}")
    notes.append("alpha proxy, C_alpha, c1, e_min are family-relative empirical values")

    ledger = ConstantsLedger(
        n=n,
        delta1=float(delta1),
        delta2=float(delta2),
        vol0=vol0,
        b0=b0,
        alpha_proxy=proxy.value,
        c0=c0,
        C_alpha=C_alpha,
        c1=c1,
        c2=c2,
        c2p=c2p,
        c3=c3,
        c4=c4,
        c5=c5,
        K0=K0,
        epsilon_hat=float(eps),
        e_min_family=e_min,
        family_size=len(fam_cb),
        notes=tuple(notes),
    )
    return ledger, certs


# ---------------------------------------------------------------------------
# state audits


def _state_window_check(state: ContinuityState, mu: float, n: int) -> None:
    if not state.accepted:
        raise DomainError("audit requires an accepted continuation state")
    if not (n * mu < state.t <= 2 * n * mu * (1 + 1e-12)):
        raise DomainError(
            f"state parameter t={state.t:g} outside the audit window ({n * mu:g}, {2 * n * mu:g}]"
        )


def schwarz_audit(
    state: ContinuityState,
    omega_hat: HermitianMetricField,
    kappa_hat: KappaField,
) -> InequalityCertificate:
    """Pointwise second-order comparison for the trace of the audited metric pair.

    Checks Lap_{omega(t)} log tr >= (-kappa + t/n) tr - 1 at every grid point.
    """
    if not state.accepted:
        raise DomainError("audit requires an accepted continuation state")
    grid = state.omega_t.grid
    n = grid.n
    Minv = np.linalg.inv(state.omega_t.g)
    tr = np.einsum("...ji,...ij->...", Minv, omega_hat.g, optimize=True).real
    if np.min(tr) <= 0:
        return InequalityCertificate(
            name="schwarz-trace-comparison",
            lhs=float(np.min(tr)),
            rhs=0.0,
            margin=-math.inf,
            passed=False,
            slack=0.0,
            slack_model="n/a",
            note="trace of the metric pair is nonpositive somewhere: state is not a valid metric pair",
            refs=("ma-state",),
        )
    log_tr = ScalarField(grid, np.log(tr))
    hess = complex_hessian(log_tr)
    lhs = np.einsum("...ji,...ij->...", Minv, hess, optimize=True).real
    rhs = (-kappa_hat.kappa.real_values() + state.t / n) * tr - 1.0
    gap = lhs - rhs
    worst = np.unravel_index(int(np.argmin(gap)), gap.shape)
    margin = float(gap[worst])
    scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    slack = SLACK_LEVELS[3] * scale
    return InequalityCertificate(
        name="schwarz-trace-comparison",
        lhs=float(lhs[worst]),
        rhs=float(rhs[worst]),
        margin=margin,
        passed=margin >= -slack,
        slack=slack,
        slack_model=slack_model_string(3),
        note=f"pointwise min of (lhs - rhs) at t={state.t:g}, worst point {tuple(int(i) for i in worst)}",
        refs=("ma-state",),
        data={"t": state.t, "min_trace": float(np.min(tr)), "max_trace": float(np.max(tr))},
    )


def quotient_bound(
    state: ContinuityState,
    omega_hat: HermitianMetricField,
    kappa_hat: KappaField,
    omega0: HermitianMetricField,
    psi: PotentialPair,
    ledger: ConstantsLedger,
) -> InequalityCertificate:
    """Lower bound for the weighted negative-curvature quotient at one state.

    Computes Q = [int_{kappa<0} (-kappa) e^{t psi / n} (vol_hat/vol_0)^{1/n} vol_t]
    / int vol_t by direct quadrature and certifies Q >= c3, with the per-step
    chain inequalities attached as child certificates. Both sides of every step
    are computed independently.
    """
    grid = omega0.grid
    n = grid.n
    t = state.t
    _state_window_check(state, kappa_hat.mu, n)

    neg = kappa_hat.negative_mask
    if not np.any(neg):
        return not_applicable(
            "quotient-lower-bound", "negative locus is empty; quotient bound does not apply"
        )

    kv = kappa_hat.kappa.real_values()
    psiv = psi.psi.real_values()
    Phiv = state.Phi.real_values()
    Phistar = Phiv - float(np.max(Phiv))
    dens_t = volume_density(state.omega_t).values
    dens0 = volume_density(omega0).values
    dens_hat = volume_density(omega_hat).values
    ratio_hat = (dens_hat / dens0) ** (1.0 / n)

    num = top_form_integral(
        ScalarField(grid, np.where(neg, -kv * np.exp(t * psiv / n) * ratio_hat * dens_t, 0.0)), grid
    )
    den = top_form_integral(ScalarField(grid, dens_t), grid)
    Q = num / den

    d1 = ledger.delta1
    dk = density_neg_kappa(omega_hat, kappa_hat).values
    U = neg & (dk <= d1 * dens0)
    V = neg & (dk > d1 * dens0)
    w = np.exp(Phistar) * np.exp(-(1.0 - 1.0 / n) * t * psiv) * ratio_hat
    I = top_form_integral(ScalarField(grid, np.where(U, -kv * w * dens0, 0.0)), grid)
    II = top_form_integral(ScalarField(grid, np.where(V, -kv * w * dens0, 0.0)), grid)
    mass_U = top_form_integral(ScalarField(grid, np.where(U, dk, 0.0)), grid)
    meas_V = top_form_integral(ScalarField(grid, np.where(V, dens0, 0.0)), grid)

    children: list[InequalityCertificate] = []

    # exactness of the quotient rewriting through the solved equation
    D_int = top_form_integral(ScalarField(grid, np.exp(Phistar) * np.exp(-t * psiv) * dens0), grid)
    children.append(
        certify_equal(
            "quotient-rewriting-identity",
            Q,
            (I + II) / D_int,
            slack=_rel_slack(Q, (I + II) / D_int, 10 * SLACK_QUAD) + 10 * state.ma_residual * max(abs(Q), 1.0),
            slack_model="equation residual + quadrature",
            note="two evaluations of the same quotient (through the solved equation)",
        )
    )

    # denominator upper bound through the integrability constant
    children.append(
        certify(
            "psh-integrability-upper",
            D_int,
            ledger.c0 ** (-n) * ledger.C_alpha,
            "le",
            slack=_rel_slack(D_int, ledger.c0 ** (-n) * ledger.C_alpha, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="int e^{Phi*} e^{-t psi} vol_0 <= c0^{-n} C_alpha",
        )
    )
    alpha_lhs = (ledger.c0**n) * top_form_integral(ScalarField(grid, np.exp(-t * psiv) * dens0), grid)
    children.append(
        certify(
            "alpha-covers-state",
            alpha_lhs,
            ledger.C_alpha,
            "le",
            slack=_rel_slack(alpha_lhs, ledger.C_alpha, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="the state's t*psi integral is inside the family envelope (family-relative)",
        )
    )
    hartogs_lhs = top_form_integral(ScalarField(grid, Phistar * dens0), grid)
    children.append(
        certify(
            "hartogs-covers-state",
            hartogs_lhs,
            -ledger.c1,
            "ge",
            slack=_rel_slack(hartogs_lhs, ledger.c1, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="int Phi* vol_0 >= -c1 for the audited state (family-relative)",
        )
    )

    if mass_U > 0:
        jensen_U_mid = top_form_integral(ScalarField(grid, np.where(U, np.exp(Phistar) * dk, 0.0)), grid)
        mean_U = top_form_integral(ScalarField(grid, np.where(U, Phistar * dk, 0.0)), grid)
        stepA = certify(
            "massbound-step-weights",
            I,
            d1 ** (1.0 / n - 1.0) * jensen_U_mid,
            "ge",
            slack=_rel_slack(I, d1 ** (1.0 / n - 1.0) * jensen_U_mid, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="drop the nonnegative potential weights and bound the density ratio on U",
        )
        stepB = certify(
            "massbound-step-jensen",
            jensen_U_mid,
            mass_U * math.exp(mean_U / mass_U),
            "ge",
            slack=_rel_slack(jensen_U_mid, mass_U * math.exp(mean_U / mass_U), SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="convexity of exp against the normalized negative-mass measure",
        )
        stepC = certify(
            "massbound-step-extend",
            mean_U,
            d1 * hartogs_lhs,
            "ge",
            slack=_rel_slack(mean_U, d1 * hartogs_lhs, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="nonpositive integrand against a dominated measure, extended to the whole chart",
        )
        stepD = certify(
            "massbound-step-uniform",
            d1 * hartogs_lhs,
            -d1 * ledger.c1,
            "ge",
            slack=_rel_slack(d1 * hartogs_lhs, d1 * ledger.c1, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="uniform potential-integral lower bound (family-relative)",
        )
        children.append(
            certify(
                "jensen-mass-lower-bound",
                I,
                d1 ** (1.0 / n - 1.0) * mass_U * math.exp(-d1 * ledger.c1 / mass_U),
                "ge",
                slack=_rel_slack(I, d1 ** (1.0 / n - 1.0) * mass_U * math.exp(-d1 * ledger.c1 / mass_U), SLACK_QUAD),
                slack_model=slack_model_string(0),
                note="composed chain for the bounded region",
                children=(stepA, stepB, stepC, stepD),
                data={"mass_U": mass_U},
            )
        )
    else:
        children.append(not_applicable("jensen-mass-lower-bound", "bounded region U is empty"))

    if meas_V > 0:
        L_V = top_form_integral(
            ScalarField(grid, np.where(V, np.log(np.where(V, dk / dens0, 1.0)) * dens0, 0.0)), grid
        )
        phi_V = top_form_integral(ScalarField(grid, np.where(V, Phistar * dens0, 0.0)), grid)
        stepB2 = certify(
            "measbound-step-jensen",
            II,
            meas_V * math.exp(L_V / (n * meas_V) + phi_V / meas_V),
            "ge",
            slack=_rel_slack(II, meas_V * math.exp(L_V / (n * meas_V) + phi_V / meas_V), SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="convexity of exp against the normalized reference measure on V",
        )
        stepC2 = certify(
            "measbound-step-extend",
            phi_V,
            hartogs_lhs,
            "ge",
            slack=_rel_slack(phi_V, hartogs_lhs, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="nonpositive integrand extended to the whole chart",
        )
        stepD2 = certify(
            "measbound-step-logratio",
            L_V,
            math.log(d1) * meas_V,
            "ge",
            slack=_rel_slack(L_V, math.log(d1) * meas_V, SLACK_QUAD),
            slack_model=slack_model_string(0),
            note="log density ratio exceeds log(delta1) on V",
        )
        children.append(
            certify(
                "jensen-measure-lower-bound",
                II,
                d1 ** (1.0 / n) * meas_V * math.exp(-ledger.c1 / meas_V),
                "ge",
                slack=_rel_slack(II, d1 ** (1.0 / n) * meas_V * math.exp(-ledger.c1 / meas_V), SLACK_QUAD),
                slack_model=slack_model_string(0),
                note="composed chain for the excess region",
                children=(stepB2, stepC2, stepD2),
                data={"measure_V": meas_V},
            )
        )
    else:
        children.append(not_applicable("jensen-measure-lower-bound", "excess region V is empty"))

    case = "mass" if mass_U >= ledger.delta2 / 2.0 else ("measure" if d1 * meas_V >= ledger.delta2 / 2.0 else "neither")
    main = certify(
        "quotient-lower-bound",
        Q,
        ledger.c3,
        "ge",
        slack=_rel_slack(Q, ledger.c3, SLACK_QUAD),
        slack_model=slack_model_string(0),
        note=f"capacity case in force: {case}",
        refs=("ledger.c3",),
        children=tuple(children),
        data={"Q": Q, "I": I, "II": II, "mass_U": mass_U, "measure_V": meas_V, "t": t},
    )
    return main


def sup_phi_bounds(
    state: ContinuityState,
    kappa_hat: KappaField,
    ledger: ConstantsLedger,
) -> tuple[InequalityCertificate, InequalityCertificate]:
    """Upper bound for sup Phi and lower bound for sup of Phi over the negative locus."""
    grid = state.Phi.grid
    n = grid.n
    mu = kappa_hat.mu
    _state_window_check(state, mu, n)
    Phiv = state.Phi.real_values()
    sup_phi = float(np.max(Phiv))
    delta_disc = SLACK_LEVELS[2]

    window_cert = certify(
        "max-principle-window-upper",
        sup_phi,
        n * math.log(2 * n * mu + ledger.b0),
        "le",
        slack=delta_disc * max(1.0, abs(n * math.log(2 * n * mu + ledger.b0))),
        slack_model=slack_model_string(2),
        note="maximum-principle bound at the top of the audit window",
    )
    c0_applicable = 2 * n * mu <= ledger.c0 * (1 + 1e-12)
    if c0_applicable:
        upper = certify(
            "sup-phi-upper",
            sup_phi,
            n * math.log(ledger.c0 + ledger.b0),
            "le",
            slack=delta_disc * max(1.0, abs(n * math.log(ledger.c0 + ledger.b0))),
            slack_model=slack_model_string(2),
            children=(window_cert,),
            refs=("ledger.c0", "ledger.b0"),
        )
    else:
        upper = InequalityCertificate(
            name="sup-phi-upper",
            lhs=sup_phi,
            rhs=n * math.log(ledger.c0 + ledger.b0),
            margin=0.0,
            passed=True,
            slack=0.0,
            slack_model="n/a",
            applicable=False,
            note=f"window top 2n*mu={2 * n * mu:g} exceeds c0={ledger.c0:g}; scale condition not met",
            children=(window_cert,),
        )

    neg = kappa_hat.negative_mask
    if not np.any(neg):
        lower = not_applicable("sup-phi-neg-lower", "negative locus is empty")
    else:
        sup_neg = float(np.max(Phiv[neg]))
        bound = n * math.log(n * ledger.c3)
        lower = certify(
            "sup-phi-neg-lower",
            sup_neg,
            bound,
            "ge",
            slack=delta_disc * max(1.0, abs(bound)),
            slack_model=slack_model_string(2),
            refs=("ledger.c3",),
            data={"t": state.t},
        )
    return upper, lower


def _binomial_epsilon_bound(omega0: HermitianMetricField, ric0: np.ndarray, eps: float, c5: float) -> tuple[float, float]:
    """Integral of (2n eps g0 - Ric)^n and its affine bound int(-Ric)^n + c5*eps."""
    grid = omega0.grid
    n = grid.n
    M = 2 * n * eps * omega0.g - ric0
    val = top_form_integral(mixed_form_density([M] * n, grid), grid)
    base = top_form_integral(mixed_form_density([-ric0] * n, grid), grid)
    return val, base + c5 * eps


def gap_certificate(
    omega_hat: HermitianMetricField,
    omega0: HermitianMetricField,
    delta1: float,
    delta2: float,
    path: PathResult | list[ContinuityState],
    ledger: ConstantsLedger,
    kappa_hat: KappaField,
) -> InequalityCertificate:
    """Hypotheses, constant chain and conclusion of the gap bound as one auditable tree.

    Main certificate is the implication: if both hypotheses pass, the
    independently computed top-intersection integral must clear c4 - c5*eps.
    """
    states = path.states if isinstance(path, PathResult) else list(path)
    if not states:
        raise DomainError("continuation path is empty")
    grid = omega0.grid
    n = grid.n
    mu = kappa_hat.mu
    reached = states[-1].t
    if mu > 0 and reached > 1.05 * n * mu:
        raise DomainError(
            f"path too short: reached t={reached:g}, need t within 5% above n*mu={n * mu:g}"
        )
    if abs(delta1 - ledger.delta1) > 1e-12 or abs(delta2 - ledger.delta2) > 1e-12:
        raise DomainError("delta parameters disagree with the ledger they were built into")

    ric0 = ricci(omega0)
    eps = ledger.epsilon_hat
    cap_report = capacity(omega_hat, kappa_hat, delta1, omega0)
    c1n = c1n_integral(omega0, ric0)

    hyp_a = certify(
        "hypothesis-mu-small",
        mu,
        eps,
        "le",
        slack=1e-12 * max(1.0, eps),
        slack_model="exact comparison",
        refs=("ledger.epsilon_hat",),
    )
    hyp_b = certify(
        "hypothesis-capacity",
        cap_report.H_value,
        delta2,
        "ge",
        slack=_rel_slack(cap_report.H_value, delta2, SLACK_QUAD),
        slack_model=slack_model_string(0),
        refs=("capacity",),
    )

    # chain cross-checks at the last node
    last = states[-1]
    psiv = last.Phi.real_values() - last.phi.real_values()  # t * psi
    dens0 = volume_density(omega0).values
    lhs_form = top_form_integral(
        mixed_form_density(
            [last.t * omega0.g - ric0 + complex_hessian(last.Phi)] * n, grid
        ),
        grid,
    )
    rhs_form = top_form_integral(
        ScalarField(grid, np.exp(last.Phi.real_values() - psiv) * dens0), grid
    )
    ident = certify_equal(
        "reference-form-volume-identity",
        lhs_form,
        rhs_form,
        slack=_rel_slack(lhs_form, rhs_form, SLACK_LEVELS[2]),
        slack_model=slack_model_string(2),
        note="equation identity at the last node, evaluated through both formulations",
    )

    exp_phi = top_form_integral(ScalarField(grid, np.exp(last.Phi.real_values()) * dens0), grid)
    covers = certify(
        "infimum-covers-state",
        exp_phi,
        ledger.c4,
        "ge",
        slack=_rel_slack(exp_phi, ledger.c4, SLACK_QUAD),
        slack_model=slack_model_string(0),
        note="int e^Phi vol_0 at the last node clears the family infimum (family-relative)",
    )

    binom_val, binom_bound = _binomial_epsilon_bound(omega0, ric0, eps, ledger.c5)
    binom = certify(
        "binomial-epsilon-bound",
        binom_val,
        binom_bound,
        "le",
        slack=_rel_slack(binom_val, binom_bound, SLACK_QUAD),
        slack_model=slack_model_string(0),
        note="expansion of the shifted reference form against its affine envelope",
    )

    certified_bound = ledger.c4 - ledger.c5 * eps
    conclusion = certify(
        "c1n-lower-bound",
        c1n,
        certified_bound,
        "ge",
        slack=1e-7 + _rel_slack(c1n, certified_bound, SLACK_QUAD),
        slack_model="absolute 1e-7 quadrature + " + slack_model_string(0),
        refs=("ledger.c4", "ledger.c5", "ledger.epsilon_hat"),
        data={"c1n_integral": c1n},
    )

    hyp_a = replace(hyp_a, informational=True)
    hyp_b = replace(hyp_b, informational=True)
    conclusion = replace(conclusion, informational=True)
    hyps = hyp_a.passed and hyp_b.passed
    implication_ok = (not hyps) or conclusion.passed
    failed = []
    if not hyp_a.passed:
        failed.append("mu-small")
    if not hyp_b.passed:
        failed.append("capacity")
    note = (
        "hypotheses hold; conclusion checked against the measured integral"
        if hyps
        else f"vacuous: hypothesis set fails ({', '.join(failed)})"
    )
    return InequalityCertificate(
        name="gap-implication",
        lhs=c1n,
        rhs=certified_bound if hyps else 0.0,
        margin=conclusion.margin if hyps else 0.0,
        passed=implication_ok,
        slack=conclusion.slack,
        slack_model=conclusion.slack_model,
        note=note,
        refs=("ledger",),
        children=(hyp_a, hyp_b, conclusion, ident, covers, binom),
        data={
            "certified_lower_bound": certified_bound if hyps else None,
            "hypotheses_hold": hyps,
            "mu": mu,
            "capacity": cap_report.H_value,
            "reached_t": reached,
        },
    )


def gap_certificate_synthetic(
    c1n_value: float,
    mu: float,
    capacity_value: float,
    ledger: ConstantsLedger,
) -> InequalityCertificate:
    """Gap arithmetic on injected scalar data (no geometry behind the fields)."""
    eps = ledger.epsilon_hat
    hyp_a = certify(
        "hypothesis-mu-small", mu, eps, "le", slack=1e-12 * max(1.0, eps), slack_model="exact comparison"
    )
    hyp_b = certify(
        "hypothesis-capacity",
        capacity_value,
        ledger.delta2,
        "ge",
        slack=_rel_slack(capacity_value, ledger.delta2, SLACK_QUAD),
        slack_model=slack_model_string(0),
    )
    certified_bound = ledger.c4 - ledger.c5 * eps
    conclusion = certify(
        "c1n-lower-bound",
        c1n_value,
        certified_bound,
        "ge",
        slack=_rel_slack(c1n_value, certified_bound, SLACK_QUAD),
        slack_model=slack_model_string(0),
    )
    hyp_a = replace(hyp_a, informational=True)
    hyp_b = replace(hyp_b, informational=True)
    conclusion = replace(conclusion, informational=True)
    hyps = hyp_a.passed and hyp_b.passed
    return InequalityCertificate(
        name="gap-implication",
        lhs=float(c1n_value),
        rhs=certified_bound if hyps else 0.0,
        margin=conclusion.margin if hyps else 0.0,
        passed=(not hyps) or conclusion.passed,
        slack=conclusion.slack,
        slack_model=conclusion.slack_model,
        note="synthetic data mode: fields are non-geometric",
        children=(hyp_a, hyp_b, conclusion),
        data={
            "certified_lower_bound": certified_bound if hyps else None,
            "hypotheses_hold": hyps,
            "synthetic": True,
        },
    )
