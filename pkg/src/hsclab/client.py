"""Thin client for the service API: in-process by default, remote with a base URL."""

from __future__ import annotations

from typing import Any

import httpx

from .errors import HsclabError


class ServiceError(HsclabError):
    def __init__(self, status_code: int, detail: Any):
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class ServiceClient:
    """Speaks the HTTP API; without a server URL it mounts the app in-process."""

    def __init__(self, server: str | None = None, timeout: float = 600.0):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=timeout)
        else:
            from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app)

    def close(self) -> None:
        self._client.close()

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        resp = self._client.request(method, path, json=payload)
        body: Any
        try:
            body = resp.json()
        except ValueError:
            body = resp.text
        if resp.status_code >= 400:
            detail = body.get("detail", body) if isinstance(body, dict) else body
            raise ServiceError(resp.status_code, detail)
        return body

    def health(self) -> dict:
        return self._request("GET", "/api/health")

    def validate(self, config: dict) -> dict:
        return self._request("POST", "/api/validate", {"config": config})

    def run(self, config: dict | None = None, builtin: str | None = None) -> dict:
        return self._request("POST", "/api/run", {"config": config, "builtin": builtin})

    def audit(self, scenario: dict | None = None, builtin: str | None = None) -> dict:
        return self._request("POST", "/api/audit", {"scenario": scenario, "builtin": builtin})

    def curvature(self, metric: dict, include_tensor: bool = False) -> dict:
        return self._request("POST", "/api/curvature", {"metric": metric, "include_tensor": include_tensor})

    def hsc(self, metric: dict, oracle_samples: int = 0, **kwargs) -> dict:
        return self._request("POST", "/api/hsc", {"metric": metric, "oracle_samples": oracle_samples, **kwargs})

    def capacity(self, metric: dict, reference: dict, lambdas: list[float], **kwargs) -> dict:
        return self._request(
            "POST", "/api/capacity", {"metric": metric, "reference": reference, "lambdas": lambdas, **kwargs}
        )

    def solve_path(self, metric_hat: dict, metric_ref: dict, t_max: float, t_min: float, **kwargs) -> dict:
        return self._request(
            "POST",
            "/api/solve-path",
            {"metric_hat": metric_hat, "metric_ref": metric_ref, "t_max": t_max, "t_min": t_min, **kwargs},
        )

    def make_metric(self, grid: dict, recipe: dict, seed: int = 0) -> dict:
        return self._request("POST", "/api/make-metric", {"grid": grid, "recipe": recipe, "seed": seed})
