"""FastAPI service wrapping the core package; the CLI is a thin client of this app."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .. import __version__, io
from ..curvature import curvature_tensor, curvature_symmetry_residuals, ricci_from_trace
from ..errors import HsclabError
from ..grid import spectral_tail_fraction
from ..hsc import hsc_point_sup, hsc_sup_bruteforce_oracle, kappa_field
from ..capacity import capacity_csv, capacity_profile, stabilization_threshold
from ..masolver import make_t_schedule, solve_path
from ..metrics import HermitianMetricField, validate_metric
from ..recipes import grid_from_spec, metric_from_recipe
from ..scenarios import (
    load_builtin_scenario,
    run as run_scenario,
    validate as validate_scenario,
)
from .models import (
    ArgmaxCertificate,
    AuditRequest,
    AuditResponse,
    CapacityRequest,
    CapacityResponse,
    CurvatureRequest,
    CurvatureResponse,
    FieldPayload,
    HealthResponse,
    HistogramModel,
    HscRequest,
    HscResponse,
    MakeMetricRequest,
    MakeMetricResponse,
    MetricInput,
    RunRequest,
    RunResponse,
    SolvePathRequest,
    SolvePathResponse,
    ValidateRequest,
    ValidateResponse,
)

app = FastAPI(title="hsclab", version=__version__)


@app.exception_handler(HsclabError)
async def _domain_error_handler(request: Request, exc: HsclabError):
    return JSONResponse(status_code=422, content={"detail": f"{type(exc).__name__}: {exc}"})


def _resolve_metric(spec: MetricInput) -> HermitianMetricField:
    if spec.payload is not None:
        grid, arr, rank = io.decode_array(io.from_base64(spec.payload.data))
        if rank != io.RANK_METRIC:
            raise HTTPException(422, f"payload is not a metric dump (rank {rank})")
        return HermitianMetricField(grid, arr)
    if spec.recipe is None or spec.grid is None:
        raise HTTPException(422, "metric input needs either a payload or a grid + recipe")
    grid = grid_from_spec(spec.grid)
    return metric_from_recipe(grid, spec.recipe, np.random.default_rng(spec.seed))


def _metric_payload(metric: HermitianMetricField) -> FieldPayload:
    return FieldPayload(data=io.to_base64(io.encode_array(metric.grid, metric.g, io.RANK_METRIC)))


def _histogram(values: np.ndarray, bins: int) -> HistogramModel:
    counts, edges = np.histogram(values, bins=bins)
    return HistogramModel(edges=[float(e) for e in edges], counts=[int(c) for c in counts])


@app.get("/api/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/api/validate", response_model=ValidateResponse)
def validate_endpoint(req: ValidateRequest) -> ValidateResponse:
    diags = validate_scenario(req.config)
    return ValidateResponse(valid=not diags, diagnostics=[d.to_json() for d in diags])


def _resolve_config(config: dict | None, builtin: str | None) -> dict:
    if builtin is not None:
        return load_builtin_scenario(builtin)
    if config is None:
        raise HTTPException(422, "request needs a config or a builtin scenario name")
    return config


@app.post("/api/run", response_model=RunResponse)
def run_endpoint(req: RunRequest) -> RunResponse:
    doc = _resolve_config(req.config, req.builtin)
    result = run_scenario(doc)
    return RunResponse(
        status=result.status,
        summary=result.summary,
        audit=result.audit,
        capacity_csv=result.capacity_csv_text,
        path=result.path_doc,
        warnings=result.warnings,
    )


@app.post("/api/audit", response_model=AuditResponse)
def audit_endpoint(req: AuditRequest) -> AuditResponse:
    doc = _resolve_config(req.scenario, req.builtin)
    result = run_scenario(doc)
    return AuditResponse(
        status=result.status, audit=result.audit, summary=result.summary, warnings=result.warnings
    )


@app.post("/api/curvature", response_model=CurvatureResponse)
def curvature_endpoint(req: CurvatureRequest) -> CurvatureResponse:
    metric = _resolve_metric(req.metric)
    curv = curvature_tensor(metric)
    residuals = curvature_symmetry_residuals(curv)
    trace = ricci_from_trace(curv, metric)
    consistency = float(np.max(np.abs(trace - curv.ric))) / max(1.0, float(np.max(np.abs(curv.ric))))
    resp = CurvatureResponse(
        symmetry_residuals=residuals,
        ricci_trace_consistency=consistency,
        spectral_tail=spectral_tail_fraction(metric.g, metric.grid),
    )
    if req.include_tensor:
        resp.curvature = FieldPayload(
            data=io.to_base64(io.encode_array(metric.grid, curv.R, io.RANK_CURVATURE))
        )
        resp.ricci = FieldPayload(data=io.to_base64(io.encode_array(metric.grid, curv.ric, io.RANK_METRIC)))
    return resp


@app.post("/api/hsc", response_model=HscResponse)
def hsc_endpoint(req: HscRequest) -> HscResponse:
    metric = _resolve_metric(req.metric)
    curv = curvature_tensor(metric)
    kf = kappa_field(metric, curv, refine_iters=req.refine_iters)
    rng = np.random.default_rng(req.metric.seed)
    certs = []
    for _ in range(max(0, req.certificate_points)):
        pt = tuple(int(v) for v in rng.integers(0, np.array(metric.grid.shape)))
        res = hsc_point_sup(curv, metric, pt)
        oracle = None
        if req.oracle_samples >= 1000:
            oracle = hsc_sup_bruteforce_oracle(curv, metric, pt, req.oracle_samples)
        certs.append(
            ArgmaxCertificate(point=list(pt), value=res.value, certificate=res.certificate, oracle=oracle)
        )
    return HscResponse(
        mu=kf.mu,
        standing_assumption_ok=kf.standing_assumption_ok,
        spectral_tail=kf.spectral_tail,
        negative_fraction=float(np.mean(kf.negative_mask)),
        H_sup_histogram=_histogram(kf.H_sup.real_values(), req.histogram_bins),
        kappa_histogram=_histogram(kf.kappa.real_values(), req.histogram_bins),
        argmax_certificates=certs,
    )


@app.post("/api/capacity", response_model=CapacityResponse)
def capacity_endpoint(req: CapacityRequest) -> CapacityResponse:
    metric = _resolve_metric(req.metric)
    reference = _resolve_metric(req.reference)
    kf = kappa_field(metric, refine_iters=req.refine_iters)
    reports = capacity_profile(metric, kf, reference, req.lambdas)
    return CapacityResponse(
        reports=[r.to_json() for r in reports],
        csv=capacity_csv(reports),
        stabilization_threshold=stabilization_threshold(metric, kf, reference),
        mu=kf.mu,
    )


@app.post("/api/solve-path", response_model=SolvePathResponse)
def solve_path_endpoint(req: SolvePathRequest) -> SolvePathResponse:
    omega_hat = _resolve_metric(req.metric_hat)
    omega0 = _resolve_metric(req.metric_ref)
    kf = kappa_field(omega_hat)
    mu = kf.mu
    schedule = make_t_schedule(req.t_max, req.t_min, req.nodes, omega0.grid.n, max(mu, 0.0))
    path = solve_path(
        omega_hat,
        omega0,
        schedule,
        mu_hat=mu if mu > 0 else None,
        clip_margin=req.clip_margin,
        accept_tol=req.accept_tol,
        max_newton=req.max_newton,
    )
    doc = {
        "nodes": [
            {
                "t": s.t,
                "sup_Phi": float(np.max(s.Phi.real_values())),
                "inf_Phi": float(np.min(s.Phi.real_values())),
                "ma_residual": s.ma_residual,
                "positivity_margin": s.positivity_margin,
                "newton_steps": s.newton_steps,
            }
            for s in path.states
        ],
        "truncated": path.truncated,
        "diagnostics": path.diagnostics,
        "psi_provenance": path.psi.provenance,
    }
    dumps = None
    if req.dump_phi:
        dumps = [
            FieldPayload(data=io.to_base64(io.encode_array(omega0.grid, s.phi.values, io.RANK_SCALAR)))
            for s in path.states
        ]
    return SolvePathResponse(path=doc, mu=mu, phi_dumps=dumps)


@app.post("/api/make-metric", response_model=MakeMetricResponse)
def make_metric_endpoint(req: MakeMetricRequest) -> MakeMetricResponse:
    grid = grid_from_spec(req.grid)
    metric = metric_from_recipe(grid, req.recipe, np.random.default_rng(req.seed))
    return MakeMetricResponse(metric=_metric_payload(metric), diagnostics=validate_metric(metric))
