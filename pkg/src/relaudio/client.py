"""Thin HTTP client over the analysis service endpoints."""

from __future__ import annotations

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code: int, error_code: str, detail: str):
        super().__init__(f"[{status_code}/{error_code}] {detail}")
        self.status_code = status_code
        self.error_code = error_code
        self.detail = detail


def _json(response: httpx.Response):
    if response.status_code >= 400:
        body = {}
        try:
            body = response.json()
        except ValueError:
            pass
        raise ServiceError(response.status_code,
                           body.get("error_code", "unknown"),
                           body.get("detail", response.text))
    return response.json()


def list_experts(client: httpx.Client) -> list[dict]:
    return _json(client.get("/api/experts"))


def list_clips(client: httpx.Client) -> list[dict]:
    return _json(client.get("/api/clips"))


def get_spectrogram(client: httpx.Client, clip_id: str) -> dict:
    return _json(client.get(f"/api/clips/{clip_id}/spectrogram"))


def compute_relevance(client: httpx.Client, clip_id: str, expert_ids: list[str]) -> dict:
    return _json(client.post("/api/relevance",
                             json={"clip_id": clip_id, "expert_ids": expert_ids}))


def classify(client: httpx.Client, clip_id: str, relnet_id: str | None = None,
             fusion_mode: str | None = None, expert_ids: list[str] | None = None) -> dict:
    body: dict = {"clip_id": clip_id}
    if relnet_id is not None:
        body["relnet_id"] = relnet_id
    if fusion_mode is not None:
        body["fusion"] = {"mode": fusion_mode, "expert_ids": expert_ids or []}
    return _json(client.post("/api/classify", json=body))
