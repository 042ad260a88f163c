"""Command-line interface: a thin client of the service API.

Every compute subcommand builds a request, sends it through the client (an
in-process app unless --server is given), and writes any returned documents to
local files. Exit codes: 0 success, 1 validation failure, 2 pipeline error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import io
from .client import ServiceClient, ServiceError
from .errors import HsclabError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PIPELINE = 2


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _metric_input_from_file(path: str) -> dict:
    blob = Path(path).read_bytes()
    return {"payload": {"format": "hsclab01-b64", "data": io.to_base64(blob)}}


def _load_scenario(spec: str) -> tuple[dict | None, str | None]:
    """A path to a JSON file, inline JSON, or a builtin scenario name."""
    p = Path(spec)
    if p.exists():
        text = p.read_text()
        if not text.strip():
            raise click.ClickException("config file is empty")
        try:
            return json.loads(text), None
        except json.JSONDecodeError as exc:
            raise click.ClickException(f"invalid JSON in {spec}: {exc}")
    if spec.lstrip().startswith("{"):
        return json.loads(spec), None
    return None, spec


def _write_run_reports(out: Path, resp: dict) -> None:
    summary = resp["summary"]
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(_dump_json(summary))
    (out / "audit.json").write_text(_dump_json(resp["audit"]))
    lines = [f"scenario: {summary.get('name', '?')}", f"status: {summary.get('status')}"]
    lines += [f"warning: {w}" for w in resp.get("warnings", [])]
    lines += summary.get("certificate_lines", [])
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    if resp.get("capacity_csv"):
        (out / "capacity.csv").write_text(resp["capacity_csv"])
    if resp.get("path"):
        (out / "path.json").write_text(_dump_json(resp["path"]))


def _write(path: str | None, text: str, label: str) -> None:
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
        click.echo(f"wrote {label} to {path}")


@click.group()
@click.option("--server", envvar="HSCLAB_SERVER", default=None, help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Curvature, capacity and continuation audits on periodic complex grids."""
    ctx.obj = server


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj)


def _run_guarded(fn):
    try:
        return fn()
    except ServiceError as exc:
        click.echo(f"error: {exc.detail}", err=True)
        sys.exit(EXIT_PIPELINE)
    except HsclabError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE)


@main.command()
@click.argument("config")
@click.pass_context
def validate(ctx: click.Context, config: str) -> None:
    """Check a scenario file; empty output means runnable."""
    doc, builtin = _load_scenario(config)
    if builtin is not None:
        from .scenarios import load_builtin_scenario

        doc = _run_guarded(lambda: load_builtin_scenario(builtin))
    resp = _run_guarded(lambda: _client(ctx).validate(doc))
    for d in resp["diagnostics"]:
        click.echo(f"{d['field'] or '<config>'}: {d['message']}")
    sys.exit(EXIT_OK if resp["valid"] else EXIT_VALIDATION)


@main.command()
@click.option("--scenario", "--config", "scenarios", required=True, multiple=True,
              help="Scenario file, inline JSON, or builtin name (repeatable).")
@click.option("--out-dir", type=click.Path(), default=None, help="Directory for report files.")
@click.pass_context
def run(ctx: click.Context, scenarios: tuple[str, ...], out_dir: str | None) -> None:
    """Run the full pipeline and emit audit.json, capacity.csv, path.json, summary.

    Several scenarios run concurrently; HSCLAB_THREADS caps the worker count.
    """
    if len(scenarios) > 1:
        import os
        from concurrent.futures import ThreadPoolExecutor

        workers = int(os.environ.get("HSCLAB_THREADS", "0")) or min(4, os.cpu_count() or 1)

        def one(spec: str) -> int:
            doc, builtin = _load_scenario(spec)
            resp = _run_guarded(lambda: _client(ctx).run(config=doc, builtin=builtin))
            name = resp["summary"].get("name", spec)
            if out_dir is not None and resp["status"] == 0:
                _write_run_reports(Path(out_dir) / name, resp)
            click.echo(f"{name}: status={resp['summary'].get('status')} (exit {resp['status']})")
            return resp["status"]

        with ThreadPoolExecutor(max_workers=workers) as pool:
            statuses = list(pool.map(one, scenarios))
        sys.exit(max(statuses))

    doc, builtin = _load_scenario(scenarios[0])
    resp = _run_guarded(lambda: _client(ctx).run(config=doc, builtin=builtin))
    summary = resp["summary"]
    if resp["status"] == 1:
        for d in summary.get("diagnostics", []):
            click.echo(f"{d['field'] or '<config>'}: {d['message']}", err=True)
        sys.exit(EXIT_VALIDATION)
    if resp["status"] == 2:
        click.echo(f"pipeline error: {summary.get('error')}", err=True)
        sys.exit(EXIT_PIPELINE)
    if out_dir is not None:
        _write_run_reports(Path(out_dir), resp)
        click.echo(f"wrote reports to {out_dir}")
    click.echo(f"scenario: {summary.get('name')}")
    click.echo(f"status: {summary.get('status')}")
    for w in resp.get("warnings", []):
        click.echo(f"warning: {w}")
    for line in summary.get("certificate_lines", []):
        click.echo(line)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--scenario", required=True, help="Scenario file, inline JSON, or builtin name.")
@click.option("--out", type=click.Path(), default=None, help="Path for audit.json.")
@click.pass_context
def audit(ctx: click.Context, scenario: str, out: str | None) -> None:
    """Run the audits for a scenario and emit audit.json."""
    doc, builtin = _load_scenario(scenario)
    resp = _run_guarded(lambda: _client(ctx).audit(scenario=doc, builtin=builtin))
    if resp["status"] == 1:
        for d in resp["summary"].get("diagnostics", []):
            click.echo(f"{d['field'] or '<config>'}: {d['message']}", err=True)
        sys.exit(EXIT_VALIDATION)
    if resp["status"] == 2:
        click.echo(f"pipeline error: {resp['summary'].get('error')}", err=True)
        sys.exit(EXIT_PIPELINE)
    _write(out, _dump_json(resp["audit"]), "audit report")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--metric", "metric_path", required=True, type=click.Path(exists=True))
@click.option("--dump-curvature", "dump_path", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None, help="Path for the diagnostics JSON.")
@click.pass_context
def curvature(ctx: click.Context, metric_path: str, dump_path: str | None, out: str | None) -> None:
    """Curvature of a metric dump: symmetry diagnostics, optional tensor dump."""
    req = _metric_input_from_file(metric_path)
    resp = _run_guarded(lambda: _client(ctx).curvature(req, include_tensor=dump_path is not None))
    if dump_path is not None:
        Path(dump_path).write_bytes(io.from_base64(resp["curvature"]["data"]))
        grid, arr, rank = io.decode_array(io.from_base64(resp["curvature"]["data"]))
        Path(str(dump_path) + ".json").write_text(
            json.dumps(io.sidecar_header(grid, rank, True), sort_keys=True, indent=2) + "\n"
        )
        click.echo(f"wrote curvature dump to {dump_path}")
    doc = {k: resp[k] for k in ("symmetry_residuals", "ricci_trace_consistency", "spectral_tail")}
    _write(out, _dump_json(doc), "curvature diagnostics")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--metric", "metric_path", required=True, type=click.Path(exists=True))
@click.option("--oracle-samples", type=int, default=0)
@click.option("--out", type=click.Path(), default=None, help="Path for report.json.")
@click.pass_context
def hsc(ctx: click.Context, metric_path: str, oracle_samples: int, out: str | None) -> None:
    """Sectional-curvature report: mu, histograms, argmax certificates."""
    req = _metric_input_from_file(metric_path)
    resp = _run_guarded(lambda: _client(ctx).hsc(req, oracle_samples=oracle_samples))
    _write(out, _dump_json(resp), "hsc report")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--metric", "metric_path", required=True, type=click.Path(exists=True))
@click.option("--reference", "reference_path", required=True, type=click.Path(exists=True))
@click.option("--lambdas", required=True, help="Comma-separated ascending positive values.")
@click.option("--out", type=click.Path(), default=None, help="Path for report.json.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Path for the CSV profile.")
@click.pass_context
def capacity(ctx, metric_path: str, reference_path: str, lambdas: str, out: str | None, csv_path: str | None):
    """Capacity profile of a metric against a reference metric."""
    try:
        lams = [float(v) for v in lambdas.split(",") if v.strip()]
    except ValueError:
        click.echo("error: --lambdas must be comma-separated numbers", err=True)
        sys.exit(EXIT_VALIDATION)
    resp = _run_guarded(
        lambda: _client(ctx).capacity(
            _metric_input_from_file(metric_path), _metric_input_from_file(reference_path), lams
        )
    )
    if csv_path is not None:
        Path(csv_path).write_text(resp["csv"])
        click.echo(f"wrote CSV profile to {csv_path}")
    doc = {k: resp[k] for k in ("reports", "stabilization_threshold", "mu")}
    _write(out, _dump_json(doc), "capacity report")
    sys.exit(EXIT_OK)


@main.command("solve-path")
@click.option("--metric-hat", "hat_path", required=True, type=click.Path(exists=True))
@click.option("--metric-ref", "ref_path", required=True, type=click.Path(exists=True))
@click.option("--t-max", type=float, required=True)
@click.option("--t-min", type=float, required=True)
@click.option("--nodes", type=int, default=20)
@click.option("--out", type=click.Path(), default=None, help="Path for path.json.")
@click.option("--dump-phi-dir", type=click.Path(), default=None, help="Directory for per-node phi dumps.")
@click.pass_context
def solve_path_cmd(ctx, hat_path, ref_path, t_max, t_min, nodes, out, dump_phi_dir):
    """Continuation along a descending schedule; emits per-node diagnostics."""
    resp = _run_guarded(
        lambda: _client(ctx).solve_path(
            _metric_input_from_file(hat_path),
            _metric_input_from_file(ref_path),
            t_max,
            t_min,
            nodes=nodes,
            dump_phi=dump_phi_dir is not None,
        )
    )
    if dump_phi_dir is not None:
        d = Path(dump_phi_dir)
        d.mkdir(parents=True, exist_ok=True)
        for node, payload in zip(resp["path"]["nodes"], resp["phi_dumps"]):
            (d / f"phi_t{node['t']:.6f}.hsclab").write_bytes(io.from_base64(payload["data"]))
        click.echo(f"wrote {len(resp['phi_dumps'])} phi dumps to {dump_phi_dir}")
    _write(out, _dump_json({"path": resp["path"], "mu": resp["mu"]}), "path report")
    sys.exit(EXIT_OK)


@main.command("make-metric")
@click.option("--grid", "grid_json", required=True, help='Grid spec JSON, e.g. {"n":1,"sizes":[64]}.')
@click.option("--recipe", required=True, help="Metric recipe JSON or a path to one.")
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def make_metric_cmd(ctx, grid_json: str, recipe: str, seed: int, out: str) -> None:
    """Build a metric from a recipe and write it as a binary dump with sidecar."""
    grid_spec = json.loads(grid_json)
    recipe_doc = json.loads(Path(recipe).read_text()) if Path(recipe).exists() else json.loads(recipe)
    resp = _run_guarded(lambda: _client(ctx).make_metric(grid_spec, recipe_doc, seed))
    blob = io.from_base64(resp["metric"]["data"])
    Path(out).write_bytes(blob)
    grid, arr, rank = io.decode_array(blob)
    Path(str(out) + ".json").write_text(
        json.dumps(io.sidecar_header(grid, rank, True), sort_keys=True, indent=2) + "\n"
    )
    click.echo(f"wrote metric to {out} (diagnostics: {resp['diagnostics']})")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8723)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
