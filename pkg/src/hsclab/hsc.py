"""Holomorphic sectional curvature: directional values, pointwise suprema, kappa.

The pointwise supremum maximizes the quartic form W -> R(W, Wbar, W, Wbar) over
the metric's unit sphere of directions. Values are invariant under W -> c W, so
the search space is the direction space modulo phase; seeding uses deterministic
low-discrepancy sets and refinement uses projected gradient ascent with
backtracking. A pure sampling oracle certifies results independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from .curvature import CurvatureField, curvature_tensor
from .errors import DomainError, OptimizerError
from .grid import ComplexGrid, ScalarField, spectral_tail_fraction
from .metrics import HermitianMetricField

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def rho_factor(n: int) -> float:
    """Rescaling applied to the nonpositive branch of the pointwise supremum."""
    return (n + 1) / (2 * n)


def rescale_sup(H: np.ndarray, n: int) -> np.ndarray:
    """kappa values from supremum values: identity on the positive branch,
    rho-scaled on the nonpositive one (both branches vanish at 0)."""
    return np.where(H > 0, H, rho_factor(n) * H)


@dataclass(frozen=True, eq=False)
class HscPointResult:
    """Pointwise supremum with the direction achieving it and an optimizer certificate."""

    value: float
    argmax_direction: np.ndarray
    certificate: float
    iterations: int = 0
    converged: bool = True


@dataclass(frozen=True, eq=False)
class KappaField:
    """Rescaled sectional-curvature supremum field and its global maximum."""

    kappa: ScalarField
    H_sup: ScalarField
    mu: float
    standing_assumption_ok: bool
    spectral_tail: float

    @property
    def grid(self) -> ComplexGrid:
        return self.kappa.grid

    @property
    def negative_mask(self) -> np.ndarray:
        return self.kappa.values < 0


@lru_cache(maxsize=16)
def direction_set(n: int, count: int) -> np.ndarray:
    """Deterministic low-discrepancy unit directions in C^n (Euclidean norm one).

    n=2 uses a Fibonacci lattice on the direction space modulo phase; higher n
    uses a Kronecker sequence pushed through the Gaussian map.
    """
    if count < 1:
        raise DomainError(f"direction count must be positive, got {count}")
    if n == 1:
        dirs = np.ones((1, 1), dtype=np.complex128)
    elif n == 2:
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        theta = np.arccos(np.clip(z, -1.0, 1.0))
        phi = 2.0 * np.pi * i / GOLDEN
        dirs = np.stack(
            [np.cos(theta / 2.0).astype(np.complex128), np.sin(theta / 2.0) * np.exp(1j * phi)],
            axis=-1,
        )
    else:
        d = 2 * n
        phi_d = 2.0
        for _ in range(40):
            phi_d = (1.0 + phi_d) ** (1.0 / (d + 1))
        alpha = np.array([(1.0 / phi_d) ** (j + 1) % 1.0 for j in range(d)])
        i = np.arange(1, count + 1)[:, None]
        t = (0.5 + i * alpha[None, :]) % 1.0
        gauss = ndtri(np.clip(t, 1e-12, 1 - 1e-12))
        vecs = gauss[:, :n] + 1j * gauss[:, n:]
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        dirs = vecs / norms
    dirs.setflags(write=False)
    return dirs


def hsc_direction(curv: CurvatureField, metric: HermitianMetricField, x: tuple, W: np.ndarray) -> float:
    """H(W) = R(W, Wbar, W, Wbar) / |W|_g^4 at grid point x; invariant under W -> c W."""
    W = np.asarray(W, dtype=np.complex128)
    if W.shape != (metric.n,):
        raise DomainError(f"direction must have {metric.n} components, got shape {W.shape}")
    if not np.any(W):
        raise DomainError("direction must be nonzero")
    R_x = curv.R[tuple(x)]
    g_x = metric.g[tuple(x)]
    num = np.einsum("ijkl,i,j,k,l->", R_x, W, np.conj(W), W, np.conj(W), optimize=True).real
    norm2 = np.einsum("ij,i,j->", g_x, W, np.conj(W), optimize=True).real
    return float(num / norm2**2)


def _pair_matrix(R_x: np.ndarray) -> np.ndarray:
    """Reshape R[i,j,k,l] to the (i,k) x (j,l) pair matrix of the quartic form."""
    n = R_x.shape[-1]
    return np.ascontiguousarray(R_x.transpose(0, 2, 1, 3).reshape(n * n, n * n))


def _quartic_batch(R_x: np.ndarray, g_x: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """H over a batch of directions at one point (BLAS-backed)."""
    n = g_x.shape[-1]
    R2 = _pair_matrix(R_x)
    P = (dirs[:, :, None] * dirs[:, None, :]).reshape(dirs.shape[0], n * n)
    num = np.sum((P @ R2) * np.conj(P), axis=1).real
    norm2 = np.sum((dirs @ g_x) * np.conj(dirs), axis=1).real
    return num / norm2**2


def _g_normalize(W: np.ndarray, g_x: np.ndarray) -> np.ndarray:
    norm2 = float(np.sum(W * (g_x @ np.conj(W))).real)
    return W / math.sqrt(norm2)


def _quartic_value(R2: np.ndarray, W: np.ndarray) -> float:
    n = W.shape[-1]
    PW = (W[:, None] * W[None, :]).reshape(n * n)
    return float(np.sum(PW * (R2 @ np.conj(PW))).real)


def _quartic_cograd(R2: np.ndarray, W: np.ndarray) -> np.ndarray:
    """d q / d Wbar = 2 sum_{ikl} R[i,m,k,l] W_i W_k conj(W_l)."""
    n = W.shape[-1]
    PW = (W[:, None] * W[None, :]).reshape(n * n)
    T = (R2.T @ PW).reshape(n, n)
    return 2.0 * (T @ np.conj(W))


def _refine_point(R_x, g_x, W0, max_iter: int, gtol: float):
    """Projected gradient ascent with backtracking on f = q / |W|_g^4 from seed W0."""
    scale = max(float(np.max(np.abs(R_x))), 1e-30)
    R2 = _pair_matrix(R_x)
    W = _g_normalize(np.asarray(W0, dtype=np.complex128), g_x)
    q = _quartic_value(R2, W)
    step = 0.25 / scale
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        # cogradient of f at a g-normalized point; d|W|^2/dWbar = (W^T g)
        grad = _quartic_cograd(R2, W) - 2.0 * q * (W @ g_x)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= gtol * scale:
            converged = True
            break
        improved = False
        s = step
        for _ in range(60):
            Wc = _g_normalize(W + s * grad, g_x)
            qc = _quartic_value(R2, Wc)
            if qc > q:
                W, q = Wc, qc
                step = s * 1.3
                improved = True
                break
            s *= 0.5
        if not improved:
            converged = True  # ascent direction exhausted at float resolution
            break
    return float(q), W, iterations, converged


def hsc_point_sup(
    curv: CurvatureField,
    metric: HermitianMetricField,
    x: tuple,
    *,
    coarse_count: int | None = None,
    seeds: int = 6,
    max_iter: int = 400,
    gtol: float = 1e-12,
) -> HscPointResult:
    """Pointwise supremum of H over directions at grid point x.

    Coarse low-discrepancy sampling followed by projected gradient ascent from
    the best seeds; certificate = refined value - best coarse value >= 0.
    """
    n = metric.n
    R_x = curv.R[tuple(x)]
    g_x = metric.g[tuple(x)]
    if n == 1:
        g = g_x[0, 0].real
        value = float(R_x[0, 0, 0, 0].real / g**2)
        return HscPointResult(value, np.array([1.0 / math.sqrt(g)], dtype=np.complex128), 0.0)
    count = coarse_count if coarse_count is not None else 200 * n * n
    dirs = direction_set(n, count)
    H = _quartic_batch(R_x, g_x, dirs)
    order = np.argsort(H)[::-1][:seeds]
    best_coarse = float(H[order[0]])
    best_val, best_W, best_iters, all_converged = -np.inf, None, 0, True
    for idx in order:
        val, W, iters, conv = _refine_point(R_x, g_x, dirs[idx], max_iter, gtol)
        all_converged &= conv
        best_iters = max(best_iters, iters)
        if val > best_val:
            best_val, best_W = val, W
    result = HscPointResult(
        value=best_val,
        argmax_direction=best_W,
        certificate=max(best_val - best_coarse, 0.0),
        iterations=best_iters,
        converged=all_converged,
    )
    if not all_converged:
        raise OptimizerError(
            f"direction ascent did not converge within {max_iter} iterations", best=result
        )
    return result


def hsc_sup_bruteforce_oracle(
    curv: CurvatureField, metric: HermitianMetricField, x: tuple, samples: int
) -> float:
    """Independent check: max of H over a low-discrepancy direction set."""
    if samples < 1000:
        raise DomainError(f"oracle needs at least 1000 samples, got {samples}")
    n = metric.n
    R_x = curv.R[tuple(x)]
    g_x = metric.g[tuple(x)]
    if n == 1:
        return float(R_x[0, 0, 0, 0].real / g_x[0, 0].real ** 2)
    best = -np.inf
    chunk = 200_000
    for start in range(0, samples, chunk):
        dirs = direction_set(n, samples)[start : start + chunk]
        best = max(best, float(np.max(_quartic_batch(R_x, g_x, dirs))))
    return best


def hsc_sup_field(
    curv: CurvatureField,
    metric: HermitianMetricField,
    *,
    coarse_count: int | None = None,
    refine_iters: int = 80,
    dir_chunk: int = 128,
) -> np.ndarray:
    """H_sup at every grid point, vectorized over the grid."""
    n = metric.n
    R, g = curv.R, metric.g
    if n == 1:
        return np.ascontiguousarray(R[..., 0, 0, 0, 0].real / g[..., 0, 0].real ** 2)

    count = coarse_count if coarse_count is not None else 200 * n * n
    dirs = direction_set(n, count)
    R2 = np.ascontiguousarray(
        np.swapaxes(R, -3, -2).reshape(R.shape[:-4] + (n * n, n * n))
    )

    def batch_value(W):
        PW = (W[..., :, None] * W[..., None, :]).reshape(W.shape[:-1] + (n * n,))
        v = (R2 @ np.conj(PW)[..., None])[..., 0]
        return np.sum(PW * v, axis=-1).real

    def batch_normalize(W):
        nrm2 = np.sum(W * (g @ np.conj(W)[..., None])[..., 0], axis=-1).real
        return W / np.sqrt(nrm2)[..., None]

    # coarse scan ranks seeds only, so single precision suffices here
    best = np.full(metric.grid.shape, -np.inf, dtype=np.float32)
    bestW = np.zeros(metric.grid.shape + (n,), dtype=np.complex128)
    R2c = R2.astype(np.complex64)
    gc = g.astype(np.complex64)
    for start in range(0, count, dir_chunk):
        D = dirs[start : start + dir_chunk].astype(np.complex64)
        P = (D[:, :, None] * D[:, None, :]).reshape(D.shape[0], n * n)
        T = R2c @ np.conj(P).T  # (*shape, n^2, m)
        num = np.einsum("ma,...am->...m", P, T, optimize=True).real
        gD = np.matmul(gc[..., None, :, :], np.conj(D)[:, :, None])[..., 0]
        nrm = np.sum(D * gD, axis=-1).real
        H = num / nrm**2
        arg = np.argmax(H, axis=-1)
        val = np.take_along_axis(H, arg[..., None], axis=-1)[..., 0]
        better = val > best
        best = np.where(better, val, best)
        bestW[better] = dirs[start : start + dir_chunk][arg[better]]

    # batched projected gradient ascent with per-point adaptive steps
    scale = np.maximum(np.max(np.abs(R), axis=(-4, -3, -2, -1)), 1e-30)
    W = batch_normalize(bestW)
    q = batch_value(W)
    step = 0.25 / scale
    R2T = np.swapaxes(R2, -1, -2)
    for _ in range(refine_iters):
        PW = (W[..., :, None] * W[..., None, :]).reshape(W.shape[:-1] + (n * n,))
        T = (R2T @ PW[..., None])[..., 0].reshape(W.shape[:-1] + (n, n))
        Gq = 2.0 * (T @ np.conj(W)[..., None])[..., 0]
        gw = (np.swapaxes(g, -1, -2) @ W[..., None])[..., 0]  # (W^T g)_m
        grad = Gq - 2.0 * q[..., None] * gw
        Wc = batch_normalize(W + step[..., None] * grad)
        qc = batch_value(Wc)
        accept = qc > q
        W = np.where(accept[..., None], Wc, W)
        q = np.where(accept, qc, q)
        step = np.where(accept, step * 1.25, step * 0.5)
    return q


def kappa_field(
    omega: HermitianMetricField,
    curv: CurvatureField | None = None,
    *,
    coarse_count: int | None = None,
    refine_iters: int = 80,
) -> KappaField:
    """Rescaled supremum field: kappa = H_sup on {H_sup > 0}, rho * H_sup elsewhere.

    Metrics whose maximum stays <= 0 are accepted but flagged via
    standing_assumption_ok = False.
    """
    if curv is None:
        curv = curvature_tensor(omega)
    n = omega.n
    H = hsc_sup_field(curv, omega, coarse_count=coarse_count, refine_iters=refine_iters)
    kappa = rescale_sup(H, n)
    mu = float(np.max(H))
    return KappaField(
        kappa=ScalarField(omega.grid, kappa),
        H_sup=ScalarField(omega.grid, H),
        mu=mu,
        standing_assumption_ok=mu > 0,
        spectral_tail=spectral_tail_fraction(omega.g, omega.grid),
    )


def synthetic_kappa_field(grid: ComplexGrid, kappa_values: np.ndarray, n: int | None = None) -> KappaField:
    """KappaField from injected data (no metric behind it); labeled by construction.

    H_sup is reconstructed so that the rescaling identity holds exactly:
    H = kappa / rho on the nonpositive branch, H = kappa on the positive one.
    """
    n = n if n is not None else grid.n
    kv = np.asarray(kappa_values, dtype=np.float64)
    rho = rho_factor(n)
    H = np.where(kv > 0, kv, kv / rho)
    mu = float(np.max(H))
    return KappaField(
        kappa=ScalarField(grid, kv),
        H_sup=ScalarField(grid, H),
        mu=mu,
        standing_assumption_ok=mu > 0,
        spectral_tail=0.0,
    )
