"""HTTP client for the embedding-inference service.

Wire protocol: POST /embed with
``{"modality": "text"|"image"|"video", "is_goal": bool, "payload": ...}``
where payload is a string (text), a base64 PNG (image) or a list of base64
PNGs (video); response ``{"embedding": [...], "dim": int, "model": str}``.
GET /info lists available modalities and dims.
"""

from __future__ import annotations

import base64
import io
import os
import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import requests

from .embeddings import BackendDescriptor, GoalSpec, _require_modality
from .errors import AvailabilityError, InterfaceError, ProtocolError

ENDPOINT_ENV_VAR = "OPPODRIVE_EMBED_ENDPOINT"
MODALITIES = ("text", "image", "video")


def encode_frame(frame: np.ndarray) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.asarray(frame, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def encode_payload(modality: str, payload) -> object:
    if modality == "text":
        if not isinstance(payload, str):
            raise InterfaceError("text payload must be a string")
        return payload
    if modality == "image":
        return encode_frame(payload)
    if modality == "video":
        return [encode_frame(frame) for frame in payload]
    raise InterfaceError(f"unknown modality {modality!r}")


@dataclass
class RemoteEmbeddingClient:
    endpoint: str
    timeout: float = 30.0
    max_retries: int = 3
    backoff: float = 0.5

    @staticmethod
    def from_env(endpoint: Optional[str] = None, **kwargs) -> "RemoteEmbeddingClient":
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
        if not endpoint:
            raise AvailabilityError(
                f"no embedding endpoint configured (set {ENDPOINT_ENV_VAR})")
        return RemoteEmbeddingClient(endpoint=endpoint.rstrip("/"), **kwargs)

    def _request(self, method: str, path: str, **kwargs):
        last_exc = None
        for attempt in range(self.max_retries + 1):
            try:
                response = requests.request(
                    method, self.endpoint + path, timeout=self.timeout, **kwargs)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                if attempt < self.max_retries:
                    time.sleep(self.backoff * (2 ** attempt))
                continue
            if 500 <= response.status_code < 600:
                last_exc = AvailabilityError(
                    f"service error {response.status_code}: {response.text[:200]}")
                if attempt < self.max_retries:
                    time.sleep(self.backoff * (2 ** attempt))
                continue
            if response.status_code != 200:
                raise ProtocolError(
                    f"service rejected request ({response.status_code}): {response.text[:200]}")
            return response
        raise AvailabilityError(f"embedding service unreachable: {last_exc}")

    def info(self) -> dict:
        response = self._request("GET", "/info")
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON /info response: {exc}") from exc
        if "modalities" not in data:
            raise ProtocolError(f"malformed /info response: {data!r}")
        return data

    def embed(self, modality: str, payload, is_goal: bool = False) -> np.ndarray:
        if modality not in MODALITIES:
            raise ProtocolError(f"unknown modality {modality!r}")
        if is_goal and isinstance(payload, str):
            encoded = payload  # goal text rides as-is for every modality
        else:
            encoded = encode_payload(modality, payload)
        body = {"modality": modality, "is_goal": bool(is_goal), "payload": encoded}
        response = self._request("POST", "/embed", json=body)
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON /embed response: {exc}") from exc
        if "embedding" not in data or "dim" not in data:
            raise ProtocolError(f"malformed /embed response: {data!r}")
        vec = np.asarray(data["embedding"], dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != int(data["dim"]):
            raise ProtocolError(
                f"embedding length {vec.shape} does not match dim {data['dim']}")
        if not np.all(np.isfinite(vec)):
            raise ProtocolError("embedding contains non-finite entries")
        return vec

    def embed_batch(self, modality: str, payloads: List, is_goal: bool = False) -> List[np.ndarray]:
        # Sequential requests; order preserved by construction.
        return [self.embed(modality, payload, is_goal=is_goal) for payload in payloads]


class RemoteBackend:
    """Backend adapter for one modality of the remote service."""

    def __init__(self, client: RemoteEmbeddingClient, modality: str):
        info = client.info()
        dims = info.get("dims", {})
        if modality not in info["modalities"] or modality not in dims:
            raise InterfaceError(f"service does not offer modality {modality!r}")
        self.client = client
        self.descriptor = BackendDescriptor(
            name=f"remote-{modality}", modality=modality,
            dim=int(dims[modality]), kind="remote")

    def embed_observation(self, payload) -> np.ndarray:
        vec = self.client.embed(self.descriptor.modality, payload)
        self._check_dim(vec)
        return vec

    def embed_goal(self, goal: GoalSpec) -> np.ndarray:
        _require_modality(self.descriptor, goal)
        # Goals always travel as text; the service routes them to the
        # cross-modal text encoder for image/video modalities.
        vec = self.client.embed(self.descriptor.modality, goal.goal_text, is_goal=True)
        self._check_dim(vec)
        return vec

    def _check_dim(self, vec: np.ndarray) -> None:
        if vec.shape[0] != self.descriptor.dim:
            raise InterfaceError(
                f"service returned dim {vec.shape[0]}, descriptor says {self.descriptor.dim}")
