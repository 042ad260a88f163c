"""Scenario configuration, validation, and the full pipeline runner.

A scenario resolves to: build metrics -> curvature -> sectional-curvature
rescaling -> capacity profile -> continuation path -> inequality audits ->
reports. Runs are deterministic for a fixed seed; reports embed the config
hash and artifact version and never a timestamp.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .audit import (
    InequalityCertificate,
    build_ledger,
    gap_certificate,
    quotient_bound,
    schwarz_audit,
    sup_phi_bounds,
)
from .capacity import (
    capacity,
    capacity_csv,
    capacity_profile,
    c1n_integral,
    stabilization_threshold,
)
from .curvature import curvature_symmetry_residuals, curvature_tensor
from .errors import ConfigurationError, DomainError, HsclabError
from .hsc import hsc_point_sup, hsc_sup_bruteforce_oracle, kappa_field
from .masolver import make_t_schedule, solve_path
from .metrics import validate_metric
from .recipes import grid_from_spec, metric_from_recipe, sequence_from_recipe
from .sequences import almost_quasi_negative_check, heavy_negativity_check

ALL_AUDITS = ("curvature", "capacity", "solve-path", "schwarz", "quotient", "sup-phi", "gap", "sequence", "heavy")


class GridSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n: int
    sizes: list[int] | int
    periods: list[float] | float | None = None


class LambdaGrid(BaseModel):
    model_config = ConfigDict(extra="forbid")
    start: float
    stop: float
    count: int = 20
    scale: Literal["linear", "log"] = "log"

    def values(self) -> list[float]:
        if self.scale == "log":
            return [float(v) for v in np.geomspace(self.start, self.stop, self.count)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.count)]


class SolverSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    t_max: float | None = None
    t_min: float | None = None
    nodes: int = 20
    accept_tol: float = 1e-9
    max_newton: int = 50
    clip_margin: float = 0.0


class ParamsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)
    delta1: float | None = None
    delta2: float | None = None
    lambda0: float | None = None
    lam: float | None = Field(default=None, alias="lambda")
    epsilon_hat: float | None = None
    cap_factor: float = 100.0
    c1_floor: float = 1e-6


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dump_fields: bool = False


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    seed: int = 0
    grid: GridSpec
    reference_metric: dict
    metric: dict | None = None
    metric_sequence: dict | None = None
    params: ParamsSpec = ParamsSpec()
    lambdas: LambdaGrid | list[float] | None = None
    solver: SolverSpec | None = None
    audits: list[str] = Field(default_factory=lambda: list(ALL_AUDITS))
    oracle_samples: int = 0
    hsc_refine_iters: int = 80
    outputs: OutputSpec = OutputSpec()


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str

    def to_json(self) -> dict:
        return {"field": self.field, "message": self.message}


def config_hash(config: ScenarioConfig) -> str:
    doc = config.model_dump(by_alias=True)
    return hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def validate(config_doc: dict | ScenarioConfig) -> list[Diagnostic]:
    """Pure validation; empty result means the scenario is runnable."""
    diags: list[Diagnostic] = []
    if isinstance(config_doc, ScenarioConfig):
        config = config_doc
    else:
        if not isinstance(config_doc, dict):
            return [Diagnostic("", "config must be a JSON object")]
        try:
            config = ScenarioConfig.model_validate(config_doc)
        except ValidationError as exc:
            return [
                Diagnostic(".".join(str(p) for p in err["loc"]), err["msg"]) for err in exc.errors()
            ]
    try:
        grid = grid_from_spec(config.grid.model_dump())
    except DomainError as exc:
        diags.append(Diagnostic("grid", str(exc)))
        grid = None
    for name in config.audits:
        if name not in ALL_AUDITS:
            diags.append(Diagnostic("audits", f"unknown audit {name!r}; expected subset of {ALL_AUDITS}"))
    if isinstance(config.lambdas, list):
        lams = config.lambdas
        if any(b <= a for a, b in zip(lams, lams[1:])) or any(l <= 0 for l in lams):
            diags.append(Diagnostic("lambdas", "explicit lambda grid must be positive and strictly increasing"))
    elif isinstance(config.lambdas, LambdaGrid):
        if config.lambdas.start <= 0 or config.lambdas.stop <= config.lambdas.start or config.lambdas.count < 2:
            diags.append(Diagnostic("lambdas", "lambda grid needs 0 < start < stop and count >= 2"))
    if config.solver is not None:
        s = config.solver
        if s.t_max is not None and s.t_min is not None and not (s.t_max > s.t_min > 0):
            diags.append(Diagnostic("solver", "need t_max > t_min > 0 (descending schedule)"))
        if s.accept_tol <= 0:
            diags.append(Diagnostic("solver.accept_tol", "tolerance must be positive"))
        if s.nodes < 2:
            diags.append(Diagnostic("solver.nodes", "schedule needs at least 2 nodes"))
    for par in ("delta1", "delta2", "lambda0", "lam", "epsilon_hat"):
        val = getattr(config.params, par)
        if val is not None and val <= 0:
            diags.append(Diagnostic(f"params.{par}", "must be positive when given"))
    if "heavy" in config.audits and config.params.lam is not None and config.params.lam < 1:
        diags.append(Diagnostic("params.lambda", "the heavy-negativity gate needs lambda >= 1"))
    if config.metric is None and config.metric_sequence is None:
        diags.append(Diagnostic("metric", "scenario needs a metric or a metric_sequence"))
    if grid is not None:
        rng = np.random.default_rng(config.seed)
        try:
            metric_from_recipe(grid, config.reference_metric, rng)
        except HsclabError as exc:
            diags.append(Diagnostic("reference_metric", str(exc)))
        if config.metric is not None:
            try:
                metric_from_recipe(grid, config.metric, np.random.default_rng(config.seed))
            except HsclabError as exc:
                diags.append(Diagnostic("metric", str(exc)))
    return diags


@dataclass(eq=False)
class RunResult:
    status: int
    summary: dict
    audit: dict
    capacity_csv_text: str | None = None
    path_doc: dict | None = None
    warnings: list[str] = field(default_factory=list)
    written: dict = field(default_factory=dict)


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _cert_line(cert: InequalityCertificate) -> str:
    status = "PASS" if cert.passed else "FAIL"
    if not cert.applicable:
        status = "N/A "
    elif cert.informational:
        status = "pass" if cert.passed else "info"
    return f"[{status}] {cert.name}: margin={cert.margin:.6g} slack={cert.slack:.3g}"


def run(config_doc: dict | ScenarioConfig, out_dir: str | Path | None = None) -> RunResult:
    """Run the full scenario pipeline; deterministic for a fixed seed."""
    diags = validate(config_doc)
    config = (
        config_doc
        if isinstance(config_doc, ScenarioConfig)
        else ScenarioConfig.model_validate(config_doc)
        if not diags
        else None
    )
    if diags:
        summary = {
            "status": "validation-failed",
            "diagnostics": [d.to_json() for d in diags],
            "version": __version__,
        }
        return RunResult(status=1, summary=summary, audit={}, warnings=[d.message for d in diags])

    warnings: list[str] = []
    certificates: list[InequalityCertificate] = []
    reports: dict = {}
    ledger = None
    path_doc = None
    csv_text = None

    rng = np.random.default_rng(config.seed)
    grid = grid_from_spec(config.grid.model_dump())
    omega0 = metric_from_recipe(grid, config.reference_metric, rng)
    reports["reference_metric"] = validate_metric(omega0)
    n = grid.n

    omega_hat = None
    kf = None
    if config.metric is not None:
        omega_hat = metric_from_recipe(grid, config.metric, rng)
        curv = curvature_tensor(omega_hat)
        if "curvature" in config.audits:
            reports["curvature_symmetry"] = curvature_symmetry_residuals(curv)
        kf = kappa_field(omega_hat, curv, refine_iters=config.hsc_refine_iters)
        reports["hsc"] = {
            "mu": kf.mu,
            "standing_assumption_ok": kf.standing_assumption_ok,
            "spectral_tail": kf.spectral_tail,
            "negative_fraction": float(np.mean(kf.negative_mask)),
        }
        if not kf.standing_assumption_ok:
            warnings.append("metric has mu <= 0: standing assumption flagged (not an error)")
        if config.oracle_samples >= 1000:
            pt = tuple(int(v) for v in rng.integers(0, np.array(grid.shape)))
            res = hsc_point_sup(curv, omega_hat, pt)
            orc = hsc_sup_bruteforce_oracle(curv, omega_hat, pt, config.oracle_samples)
            reports["hsc"]["oracle_spot_check"] = {
                "point": list(pt),
                "refined": res.value,
                "oracle": orc,
                "certificate": res.certificate,
            }

    # capacity parameters (derived when not pinned by the scenario)
    params = config.params
    delta1 = params.delta1
    delta2 = params.delta2
    lambda0 = params.lambda0
    derived = {}
    if omega_hat is not None and kf is not None:
        Lambda = stabilization_threshold(omega_hat, kf, omega0)
        reports["stabilization_threshold"] = Lambda
        if "capacity" in config.audits and Lambda is not None:
            if isinstance(config.lambdas, LambdaGrid):
                lams = config.lambdas.values()
            elif isinstance(config.lambdas, list):
                lams = config.lambdas
            else:
                lams = [float(v) for v in np.geomspace(0.05 * Lambda, 2.0 * Lambda, 20)]
                derived["lambdas"] = lams
            profile = capacity_profile(omega_hat, kf, omega0, lams)
            csv_text = capacity_csv(profile)
            reports["capacity_profile"] = [r.to_json() for r in profile]
        elif "capacity" in config.audits:
            warnings.append("negative locus empty: capacity profile skipped")
        if delta1 is None:
            delta1 = 0.5 * Lambda if Lambda is not None else 1.0
            derived["delta1"] = delta1
        if delta2 is None and Lambda is not None:
            delta2 = 0.8 * capacity(omega_hat, kf, delta1, omega0).H_value
            if delta2 <= 0:
                delta2 = None
            else:
                derived["delta2"] = delta2

    needs_ledger = bool(
        {"quotient", "sup-phi", "gap", "heavy"} & set(config.audits)
    ) and (omega_hat is not None or config.metric_sequence is not None)
    if needs_ledger:
        d1 = delta1 if delta1 is not None else 1.0
        d2 = delta2 if delta2 is not None else 1.0
        ledger, ledger_certs = build_ledger(
            omega_hat,
            omega0,
            d1,
            d2,
            cap_factor=params.cap_factor,
            c1_floor=params.c1_floor,
            epsilon_hat=params.epsilon_hat,
        )
        certificates.extend(ledger_certs)

    path = None
    if omega_hat is not None and kf is not None and "solve-path" in config.audits:
        solver = config.solver or SolverSpec()
        mu = kf.mu
        t_max = solver.t_max if solver.t_max is not None else 10.0 * (n * max(mu, 0.0) + (ledger.b0 if ledger else 0.0) + 1.0)
        t_min = solver.t_min if solver.t_min is not None else (1.02 * n * mu if mu > 0 else 0.5)
        schedule = make_t_schedule(t_max, t_min, solver.nodes, n, max(mu, 0.0))
        try:
            path = solve_path(
                omega_hat,
                omega0,
                schedule,
                mu_hat=mu if mu > 0 else None,
                clip_margin=solver.clip_margin,
                accept_tol=solver.accept_tol,
                max_newton=solver.max_newton,
            )
        except ConfigurationError as exc:
            return _pipeline_error(config, f"continuation failed at the first node: {exc}")
        warnings.extend(path.diagnostics)
        path_doc = {
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

        if "schwarz" in config.audits:
            for s in path.states:
                certificates.append(schwarz_audit(s, omega_hat, kf))
        window = [s for s in path.states if n * mu < s.t <= 2 * n * mu * (1 + 1e-12)]
        if not window and {"quotient", "sup-phi"} & set(config.audits):
            warnings.append("no accepted state landed in the audit window (n*mu, 2n*mu]")
        if ledger is not None:
            for s in window:
                if "quotient" in config.audits:
                    certificates.append(quotient_bound(s, omega_hat, kf, omega0, path.psi, ledger))
                if "sup-phi" in config.audits:
                    up, lo = sup_phi_bounds(s, kf, ledger)
                    certificates.extend([up, lo])
            if "gap" in config.audits and delta2 is not None:
                reached = path.reached_t
                if reached is not None and mu > 0 and reached <= 1.05 * n * mu:
                    certificates.append(
                        gap_certificate(omega_hat, omega0, ledger.delta1, ledger.delta2, path, ledger, kf)
                    )
                else:
                    warnings.append("gap audit skipped: path did not reach within 5% above n*mu")

    if config.metric_sequence is not None:
        entries = sequence_from_recipe(grid, config.metric_sequence, rng)
        lam0 = lambda0 if lambda0 is not None else 1.0
        if "sequence" in config.audits:
            reports["almost_quasi_negative"] = almost_quasi_negative_check(entries, omega0, lam0).to_json()
        if "heavy" in config.audits and ledger is not None:
            lam = params.lam if params.lam is not None else max(1.0, lam0)
            certificates.append(heavy_negativity_check(entries, omega0, lam, ledger))

    reports["c1n_integral"] = c1n_integral(omega0)
    flat_certs = [c for cert in certificates for c in cert.flatten()]
    stamp = {"config_hash": config_hash(config), "version": __version__}
    audit_doc = {
        "ledger": ledger.to_json() if ledger is not None else None,
        "certificates": [c.to_json() for c in flat_certs],
        "reports": reports,
        **stamp,
    }
    if path_doc is not None:
        path_doc.update(stamp)
    all_pass = all(c.passed for c in flat_certs if not c.informational)
    summary = {
        "name": config.name,
        "version": __version__,
        "config_hash": config_hash(config),
        "status": "ok" if all_pass else "certificate-failures",
        "warnings": warnings,
        "derived_parameters": derived,
        "certificate_lines": [_cert_line(c) for c in flat_certs],
        "certificates_passed": sum(1 for c in flat_certs if c.passed and not c.informational),
        "certificates_total": sum(1 for c in flat_certs if not c.informational),
    }

    result = RunResult(
        status=0,
        summary=summary,
        audit=audit_doc,
        capacity_csv_text=csv_text,
        path_doc=path_doc,
        warnings=warnings,
    )
    if out_dir is not None:
        result.written = write_reports(result, out_dir)
    return result


def _pipeline_error(config: ScenarioConfig, message: str) -> RunResult:
    summary = {
        "name": config.name,
        "version": __version__,
        "config_hash": config_hash(config),
        "status": "pipeline-error",
        "error": message,
    }
    return RunResult(status=2, summary=summary, audit={}, warnings=[message])


def write_reports(result: RunResult, out_dir: str | Path) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    (out / "summary.json").write_text(_dump_json(result.summary))
    written["summary"] = str(out / "summary.json")
    (out / "audit.json").write_text(_dump_json(result.audit))
    written["audit"] = str(out / "audit.json")
    lines = [f"scenario: {result.summary.get('name', '?')}", f"status: {result.summary.get('status')}"]
    lines += [f"warning: {w}" for w in result.warnings]
    lines += result.summary.get("certificate_lines", [])
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    written["summary_txt"] = str(out / "summary.txt")
    if result.capacity_csv_text is not None:
        (out / "capacity.csv").write_text(result.capacity_csv_text)
        written["capacity_csv"] = str(out / "capacity.csv")
    if result.path_doc is not None:
        (out / "path.json").write_text(_dump_json(result.path_doc))
        written["path"] = str(out / "path.json")
    return written


def run_many(config_docs: list[dict], out_root: str | Path | None = None) -> list[RunResult]:
    """Run independent scenarios concurrently; HSCLAB_THREADS caps the workers."""
    workers = int(os.environ.get("HSCLAB_THREADS", "0")) or min(4, os.cpu_count() or 1)

    def one(idx_doc):
        idx, doc = idx_doc
        out = None
        if out_root is not None:
            name = doc.get("name", f"scenario-{idx}") if isinstance(doc, dict) else f"scenario-{idx}"
            out = Path(out_root) / name
        return run(doc, out)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, enumerate(config_docs)))


def builtin_scenario_names() -> list[str]:
    root = resources.files("hsclab.data").joinpath("scenarios")
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_builtin_scenario(name: str) -> dict:
    path = resources.files("hsclab.data").joinpath("scenarios").joinpath(f"{name}.json")
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise DomainError(f"unknown builtin scenario {name!r}; available: {builtin_scenario_names()}")
    return json.loads(text)


def load_config_file(path: str | Path) -> tuple[dict | None, list[Diagnostic]]:
    """Read a scenario JSON file, mapping parse failures to diagnostics."""
    p = Path(path)
    if not p.exists():
        return None, [Diagnostic("", f"no such file: {p}")]
    text = p.read_text()
    if not text.strip():
        return None, [Diagnostic("", "config file is empty")]
    try:
        return json.loads(text), []
    except json.JSONDecodeError as exc:
        return None, [Diagnostic("", f"invalid JSON: {exc}")]
