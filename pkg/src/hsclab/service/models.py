"""Pydantic request/response models for the service API."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class FieldPayload(BaseModel):
    """A field dump in the binary format, base64-encoded for transport."""

    model_config = ConfigDict(extra="forbid")
    format: Literal["hsclab01-b64"] = "hsclab01-b64"
    data: str


class MetricInput(BaseModel):
    """A metric, either as an uploaded dump or as a recipe on a grid."""

    model_config = ConfigDict(extra="forbid")
    payload: FieldPayload | None = None
    grid: dict | None = None
    recipe: dict | None = None
    seed: int = 0


class HealthResponse(BaseModel):
    status: str
    version: str


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict


class DiagnosticModel(BaseModel):
    field: str
    message: str


class ValidateResponse(BaseModel):
    valid: bool
    diagnostics: list[DiagnosticModel]


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict | None = None
    builtin: str | None = None


class RunResponse(BaseModel):
    status: int
    summary: dict
    audit: dict
    capacity_csv: str | None = None
    path: dict | None = None
    warnings: list[str] = Field(default_factory=list)


class CurvatureRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    metric: MetricInput
    include_tensor: bool = False


class CurvatureResponse(BaseModel):
    symmetry_residuals: dict
    ricci_trace_consistency: float
    spectral_tail: float
    curvature: FieldPayload | None = None
    ricci: FieldPayload | None = None


class HscRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    metric: MetricInput
    oracle_samples: int = 0
    refine_iters: int = 80
    histogram_bins: int = 32
    certificate_points: int = 3


class HistogramModel(BaseModel):
    edges: list[float]
    counts: list[int]


class ArgmaxCertificate(BaseModel):
    point: list[int]
    value: float
    certificate: float
    oracle: float | None = None


class HscResponse(BaseModel):
    mu: float
    standing_assumption_ok: bool
    spectral_tail: float
    negative_fraction: float
    H_sup_histogram: HistogramModel
    kappa_histogram: HistogramModel
    argmax_certificates: list[ArgmaxCertificate]


class CapacityRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    metric: MetricInput
    reference: MetricInput
    lambdas: list[float]
    refine_iters: int = 80


class CapacityResponse(BaseModel):
    reports: list[dict]
    csv: str
    stabilization_threshold: float | None
    mu: float


class SolvePathRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    metric_hat: MetricInput
    metric_ref: MetricInput
    t_max: float
    t_min: float
    nodes: int = 20
    accept_tol: float = 1e-9
    max_newton: int = 50
    clip_margin: float = 0.0
    dump_phi: bool = False


class SolvePathResponse(BaseModel):
    path: dict
    mu: float
    phi_dumps: list[FieldPayload] | None = None


class AuditRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: dict | None = None
    builtin: str | None = None


class AuditResponse(BaseModel):
    status: int
    audit: dict
    summary: dict
    warnings: list[str] = Field(default_factory=list)


class MakeMetricRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    grid: dict
    recipe: dict
    seed: int = 0


class MakeMetricResponse(BaseModel):
    metric: FieldPayload
    diagnostics: dict
