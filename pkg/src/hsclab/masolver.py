"""Damped-Newton continuation for the parametrized complex Monge-Ampere equation.

At parameter t the solved state has coefficient matrix
M(phi) = t*ghat - Ric(g0) + Hess(phi) and satisfies det M = e^phi det g0,
equivalently F(phi) := log det M - log det g0 - phi = 0. The Newton
linearization of F is the M-Laplacian minus the identity, solved matrix-free by
preconditioned Krylov iteration with the constant-coefficient symbol inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, bicgstab, cg, lgmres

from .curvature import ricci
from .errors import (
    CohomologyError,
    ConfigurationError,
    DomainError,
    NonConvergenceError,
    UnsupportedInputError,
)
from .grid import ComplexGrid, ScalarField, _axis_wavenumbers, constant_field, top_form_integral
from .metrics import (
    HermitianMetricField,
    complex_hessian,
    hermitize,
    log_det,
    min_eigenvalue,
    volume_density,
)

DEFAULT_ACCEPT_TOL = 1e-9
DEFAULT_TARGET_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Potential psi with ghat = g0 + Hess(psi) and sup psi = 0, plus how it was obtained."""

    psi: ScalarField
    provenance: str


@dataclass(frozen=True, eq=False)
class ContinuityState:
    """One solved continuation node."""

    t: float
    phi: ScalarField
    Phi: ScalarField
    omega_t: HermitianMetricField
    ma_residual: float
    positivity_margin: float
    newton_steps: int = 0
    accepted: bool = True

    def volume(self) -> float:
        """Integral of the state's top form."""
        return top_form_integral(volume_density(self.omega_t), self.omega_t.grid)


@dataclass(eq=False)
class PathResult:
    """Accepted states along a descending schedule plus truncation diagnostics."""

    states: list[ContinuityState]
    psi: PotentialPair
    diagnostics: list[str] = field(default_factory=list)
    truncated: bool = False

    @property
    def reached_t(self) -> float | None:
        return self.states[-1].t if self.states else None


def recover_potential(omega_hat: HermitianMetricField, omega0: HermitianMetricField) -> PotentialPair:
    """Invert the Hessian relation ghat = g0 + Hess(psi), sup-normalized.

    n=1 solves the Poisson problem spectrally; for n >= 2 the input must carry
    potential provenance (constructed from a known psi).
    """
    if omega_hat.grid != omega0.grid:
        raise DomainError("metrics live on different grids")
    grid = omega_hat.grid
    n = grid.n
    diff = omega_hat.g - omega0.g
    scale = max(float(np.max(np.abs(omega0.g))), 1e-30)

    if float(np.max(np.abs(diff))) <= 1e-14 * scale:
        return PotentialPair(constant_field(grid, 0.0), "identical")

    if n == 1:
        d = diff[..., 0, 0]
        mean = complex(d.mean())
        if abs(mean) > 1e-10 * scale:
            raise CohomologyError(
                f"metrics are not in the same class: mean coefficient mismatch {abs(mean):.3e}"
            )
        a = _axis_wavenumbers(grid.sizes[0], grid.periods[0]).reshape(-1, 1)
        b = _axis_wavenumbers(grid.sizes[1], grid.periods[1]).reshape(1, -1)
        mult = -(a**2 + b**2) / 4.0
        spec = np.fft.fft2(d)
        with np.errstate(divide="ignore", invalid="ignore"):
            spec = np.where(mult != 0, spec / mult, 0.0)
        psi_vals = np.fft.ifft2(spec).real
        psi_vals -= psi_vals.max()
        pair = PotentialPair(ScalarField(grid, psi_vals), "poisson")
    else:
        prov = omega_hat.provenance
        if prov is None or prov.kind != "potential" or prov.psi is None or prov.base is None:
            raise UnsupportedInputError(
                "n >= 2 potential recovery requires construction provenance (metric built from a potential)"
            )
        if float(np.max(np.abs(prov.base.g - omega0.g))) > 1e-10 * scale:
            raise UnsupportedInputError("provenance base metric does not match the supplied reference")
        vals = prov.psi.real_values()
        pair = PotentialPair(ScalarField(grid, vals - float(np.max(vals))), "provenance")

    resid = float(np.max(np.abs(complex_hessian(pair.psi) - diff)))
    if resid > 1e-8 * scale:
        raise CohomologyError(f"recovered potential does not reproduce the difference (residual {resid:.3e})")
    return pair


def _wirtinger_symbols(grid: ComplexGrid) -> list[np.ndarray]:
    """Fourier multipliers of d/dz^i, broadcastable over the grid shape."""
    syms = []
    for i in range(grid.n):
        a = _axis_wavenumbers(grid.sizes[2 * i], grid.periods[2 * i])
        b = _axis_wavenumbers(grid.sizes[2 * i + 1], grid.periods[2 * i + 1])
        shape_a = [1] * (2 * grid.n)
        shape_a[2 * i] = len(a)
        shape_b = [1] * (2 * grid.n)
        shape_b[2 * i + 1] = len(b)
        syms.append((1j * a.reshape(shape_a) + b.reshape(shape_b)) / 2.0)
    return syms


def _precond_symbol(grid: ComplexGrid, A0: np.ndarray) -> np.ndarray:
    """Symbol of minus the constant-coefficient Newton operator (>= 1 everywhere)."""
    w = _wirtinger_symbols(grid)
    sym = np.ones(grid.shape)
    for i in range(grid.n):
        for j in range(grid.n):
            sym = sym + (A0[j, i] * w[i] * np.conj(w[j])).real
    return sym


def _newton_direction(grid: ComplexGrid, Minv: np.ndarray, rhs: np.ndarray, rtol: float) -> np.ndarray:
    """Solve (identity - Laplacian_M) h = rhs matrix-free."""
    npts = grid.point_count
    A0 = Minv.reshape(-1, grid.n, grid.n).mean(axis=0)
    sym = _precond_symbol(grid, A0)

    def apply_neg_L(v: np.ndarray) -> np.ndarray:
        h = v.reshape(grid.shape)
        hess = complex_hessian(ScalarField(grid, h))
        lap = np.einsum("...ji,...ij->...", Minv, hess, optimize=True).real
        return (h - lap).ravel()

    def apply_precond(v: np.ndarray) -> np.ndarray:
        spec = np.fft.fftn(v.reshape(grid.shape))
        return np.fft.ifftn(spec / sym).real.ravel()

    A = LinearOperator((npts, npts), matvec=apply_neg_L, dtype=np.float64)
    P = LinearOperator((npts, npts), matvec=apply_precond, dtype=np.float64)
    for solver in (cg, bicgstab, lgmres):
        sol, info = solver(A, rhs.ravel(), rtol=rtol, atol=0.0, M=P, maxiter=400)
        if info == 0:
            return sol.reshape(grid.shape)
    raise NonConvergenceError("Newton linear solve did not converge with any Krylov method")


def solve_ma_at(
    t: float,
    omega_hat: HermitianMetricField,
    omega0: HermitianMetricField,
    phi_init: ScalarField,
    *,
    psi: PotentialPair | None = None,
    ric0: np.ndarray | None = None,
    accept_tol: float = DEFAULT_ACCEPT_TOL,
    target_tol: float = DEFAULT_TARGET_TOL,
    max_newton: int = 50,
    cg_rtol: float = 1e-12,
) -> ContinuityState:
    """Damped Newton solve at one parameter value; raises with the best state on failure."""
    if omega_hat.grid != omega0.grid or phi_init.grid != omega0.grid:
        raise DomainError("inputs live on different grids")
    grid = omega0.grid
    if ric0 is None:
        ric0 = ricci(omega0)
    logdet0 = log_det(omega0)
    base = t * omega_hat.g - ric0

    def assemble(phi_vals: np.ndarray):
        M = hermitize(base + complex_hessian(ScalarField(grid, phi_vals)))
        lam_min = float(np.min(min_eigenvalue(M)))
        return M, lam_min

    phi = phi_init.real_values().copy()
    M, lam_min = assemble(phi)
    if lam_min <= 0:
        raise NonConvergenceError(
            f"initial iterate leaves the positive cone (min eigenvalue {lam_min:.3e})",
            best_state=None,
        )
    res_field = log_det(M) - logdet0 - phi
    res = float(np.max(np.abs(res_field)))
    steps = 0
    while res > target_tol and steps < max_newton:
        Minv = np.linalg.inv(M)
        # Newton step solves (Laplacian_M - 1) h = -F, i.e. (1 - Laplacian_M) h = F
        h = _newton_direction(grid, Minv, res_field, cg_rtol)
        s = 1.0
        advanced = False
        while s >= 2.0**-30:
            cand = phi + s * h
            Mc, lamc = assemble(cand)
            if lamc > 0:
                resc_field = log_det(Mc) - logdet0 - cand
                resc = float(np.max(np.abs(resc_field)))
                if resc < res or resc <= target_tol:
                    phi, M, lam_min = cand, Mc, lamc
                    res_field, res = resc_field, resc
                    advanced = True
                    break
            s *= 0.5
        steps += 1
        if not advanced:
            break

    phi_field = ScalarField(grid, phi)
    psi_vals = psi.psi.real_values() if psi is not None else np.zeros(grid.shape)
    state = ContinuityState(
        t=float(t),
        phi=phi_field,
        Phi=ScalarField(grid, phi + t * psi_vals),
        omega_t=HermitianMetricField(grid, M),
        ma_residual=res,
        positivity_margin=lam_min,
        newton_steps=steps,
        accepted=res <= accept_tol and lam_min > 0,
    )
    if not state.accepted:
        raise NonConvergenceError(
            f"Newton did not reach tolerance at t={t:g} (residual {res:.3e} after {steps} steps)",
            best_state=state,
        )
    return state


def make_t_schedule(t_max: float, t_min: float, nodes: int, n: int, mu: float) -> list[float]:
    """Geometric descent toward 2*n*mu, then linear refinement down to t_min."""
    if not (t_max > t_min > 0):
        raise DomainError(f"need t_max > t_min > 0, got {t_max}, {t_min}")
    if nodes < 2:
        raise DomainError("schedule needs at least 2 nodes")
    knee = 2 * n * mu
    if mu > 0 and t_min < knee < t_max:
        n_geo = max(2, nodes // 2)
        n_lin = nodes - n_geo + 1
        geo = list(np.geomspace(t_max, knee, n_geo))
        lin = list(np.linspace(knee, t_min, n_lin))[1:]
        sched = geo + lin
    else:
        sched = list(np.geomspace(t_max, t_min, nodes))
    out = []
    for t in sched:
        if not out or t < out[-1] * (1 - 1e-12):
            out.append(float(t))
    return out


def solve_path(
    omega_hat: HermitianMetricField,
    omega0: HermitianMetricField,
    t_schedule,
    *,
    mu_hat: float | None = None,
    clip_margin: float = 0.0,
    psi: PotentialPair | None = None,
    accept_tol: float = DEFAULT_ACCEPT_TOL,
    max_newton: int = 50,
) -> PathResult:
    """Warm-started continuation along a strictly decreasing schedule.

    Nodes at or below n*mu_hat*(1+clip_margin) are refused with a truncation
    diagnostic (the parameter region the estimates do not cover); genuine Newton
    failures truncate with a non-convergence diagnostic and the path so far.
    """
    schedule = [float(t) for t in t_schedule]
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError("t schedule must be strictly decreasing")
    if not schedule:
        raise DomainError("t schedule is empty")
    grid = omega0.grid
    n = grid.n
    if psi is None:
        psi = recover_potential(omega_hat, omega0)
    ric0 = ricci(omega0)
    result = PathResult(states=[], psi=psi)
    threshold = n * mu_hat * (1.0 + clip_margin) if mu_hat is not None and mu_hat > 0 else None

    phi_prev = constant_field(grid, n * math.log(schedule[0]) if schedule[0] > 0 else 0.0)
    for k, t in enumerate(schedule):
        if threshold is not None and t <= threshold:
            result.diagnostics.append(
                f"schedule clipped at t={t:g}: at or below the continuation threshold "
                f"n*mu*(1+{clip_margin:g}) = {threshold:g}; remaining nodes skipped"
            )
            result.truncated = True
            break
        try:
            state = solve_ma_at(
                t,
                omega_hat,
                omega0,
                phi_prev,
                psi=psi,
                ric0=ric0,
                accept_tol=accept_tol,
                max_newton=max_newton,
            )
        except NonConvergenceError as exc:
            if k == 0:
                raise ConfigurationError(
                    f"first continuation node t={t:g} failed to solve; start the schedule higher"
                ) from exc
            result.diagnostics.append(f"non-convergence at t={t:g}: {exc}; path truncated")
            result.truncated = True
            break
        if result.states and not state.volume() < result.states[-1].volume():
            result.diagnostics.append(
                f"volume did not decrease from t={result.states[-1].t:g} to t={t:g}"
            )
        result.states.append(state)
        phi_prev = state.phi
    return result
