import numpy as np
import pytest
from fastapi.testclient import TestClient

from hsclab import io
from hsclab.metrics import flat_metric
from hsclab.service.app import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def metric_payload(metric):
    return {"payload": {"format": "hsclab01-b64", "data": io.to_base64(io.encode_array(metric.grid, metric.g, io.RANK_METRIC))}}


CONFORMAL = {
    "grid": {"n": 1, "sizes": [64]},
    "recipe": {"kind": "conformal", "u": {"type": "cos", "axis": 0, "amplitude": -0.02}, "normalize_mean": 1.0},
}


def test_health(client):
    doc = client.get("/api/health").json()
    assert doc["status"] == "ok"
    assert doc["version"]


def test_validate_endpoint(client):
    ok = client.post("/api/validate", json={"config": {
        "name": "x", "grid": {"n": 1, "sizes": [16]}, "reference_metric": {"kind": "flat"},
        "metric": {"kind": "flat"}, "audits": ["curvature"],
    }}).json()
    assert ok["valid"] and ok["diagnostics"] == []
    bad = client.post("/api/validate", json={"config": {"name": "x"}}).json()
    assert not bad["valid"]
    assert bad["diagnostics"]


def test_run_builtin(client):
    doc = client.post("/api/run", json={"builtin": "flat_flat_minimal"}).json()
    assert doc["status"] == 0
    assert doc["summary"]["status"] == "ok"
    assert doc["audit"]["certificates"]


def test_run_needs_config(client):
    resp = client.post("/api/run", json={})
    assert resp.status_code == 422


def test_unknown_builtin_is_client_error(client):
    resp = client.post("/api/run", json={"builtin": "no-such-scenario"})
    assert resp.status_code == 422


def test_curvature_endpoint_recipe(client):
    doc = client.post("/api/curvature", json={"metric": CONFORMAL, "include_tensor": True}).json()
    assert doc["symmetry_residuals"]["conjugation"] <= 1e-8
    assert doc["ricci_trace_consistency"] <= 1e-7
    grid, R, rank = io.decode_array(io.from_base64(doc["curvature"]["data"]))
    assert rank == io.RANK_CURVATURE
    assert R.shape == grid.shape + (1, 1, 1, 1)


def test_curvature_endpoint_payload(client):
    from hsclab.grid import ComplexGrid

    metric = flat_metric(ComplexGrid(1, 16))
    doc = client.post("/api/curvature", json={"metric": metric_payload(metric)}).json()
    assert doc["spectral_tail"] == 0.0


def test_hsc_endpoint(client):
    doc = client.post("/api/hsc", json={"metric": CONFORMAL, "oracle_samples": 1000}).json()
    assert doc["mu"] == pytest.approx(0.19350281162998165)
    assert doc["standing_assumption_ok"]
    assert 0 < doc["negative_fraction"] < 1
    assert len(doc["H_sup_histogram"]["counts"]) == 32
    assert doc["argmax_certificates"]
    for cert in doc["argmax_certificates"]:
        assert cert["oracle"] <= cert["value"] + 1e-9


def test_capacity_endpoint(client):
    doc = client.post(
        "/api/capacity",
        json={"metric": CONFORMAL, "reference": {"grid": CONFORMAL["grid"], "recipe": {"kind": "flat"}}, "lambdas": [0.05, 0.1, 0.2]},
    ).json()
    assert len(doc["reports"]) == 3
    H = [r["H"] for r in doc["reports"]]
    assert H == sorted(H)
    assert doc["csv"].splitlines()[0] == "lambda,H,massU,massV,negMeasure"
    assert doc["stabilization_threshold"] > 0


def test_capacity_endpoint_rejects_unsorted(client):
    resp = client.post(
        "/api/capacity",
        json={"metric": CONFORMAL, "reference": {"grid": CONFORMAL["grid"], "recipe": {"kind": "flat"}}, "lambdas": [0.2, 0.1]},
    )
    assert resp.status_code == 422
    assert "increasing" in resp.json()["detail"]


def test_solve_path_endpoint(client):
    doc = client.post(
        "/api/solve-path",
        json={
            "metric_hat": CONFORMAL,
            "metric_ref": {"grid": CONFORMAL["grid"], "recipe": {"kind": "flat"}},
            "t_max": 12.0,
            "t_min": 0.198,
            "nodes": 8,
            "dump_phi": True,
        },
    ).json()
    nodes = doc["path"]["nodes"]
    assert len(nodes) == len(doc["phi_dumps"])
    assert all(n["ma_residual"] <= 1e-9 for n in nodes)
    assert all(n["positivity_margin"] > 0 for n in nodes)
    ts = [n["t"] for n in nodes]
    assert ts == sorted(ts, reverse=True)
    grid, phi, rank = io.decode_array(io.from_base64(doc["phi_dumps"][0]["data"]))
    assert rank == io.RANK_SCALAR and phi.shape == grid.shape


def test_audit_endpoint(client):
    doc = client.post("/api/audit", json={"builtin": "heavy_bump_n1"}).json()
    assert doc["status"] == 0
    names = [c["name"] for c in doc["audit"]["certificates"]]
    assert "heavy-negativity-measure-bound" in names
    assert doc["audit"]["ledger"]["family_relative"] is True


def test_make_metric_endpoint(client):
    doc = client.post(
        "/api/make-metric",
        json={"grid": {"n": 1, "sizes": [16]}, "recipe": {"kind": "flat", "scale": 2.0}},
    ).json()
    grid, g, rank = io.decode_array(io.from_base64(doc["metric"]["data"]))
    assert rank == io.RANK_METRIC
    np.testing.assert_array_equal(g[..., 0, 0], 2.0)
    assert doc["diagnostics"]["min_eigenvalue"] == pytest.approx(2.0)


def test_domain_errors_map_to_422(client):
    resp = client.post("/api/make-metric", json={"grid": {"n": 1, "sizes": [15]}, "recipe": {"kind": "flat"}})
    assert resp.status_code == 422
    assert "even" in resp.json()["detail"]
