"""HTTP layer: request decoding, schema validation and error mapping."""

from __future__ import annotations

import base64
import binascii
import io
from typing import List, Optional, Union

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .config import MODALITIES, ServiceConfig
from .models import EncoderRegistry, PayloadError, build_registry


class EmbedRequest(BaseModel):
    modality: str
    is_goal: bool = False
    payload: Union[str, List[str]] = Field(...,
                                           description="sentence, base64 PNG, or list of base64 PNGs")


class EmbedResponse(BaseModel):
    embedding: List[float]
    dim: int
    model: str


def _decode_png(data: str) -> np.ndarray:
    from PIL import Image
    try:
        raw = base64.b64decode(data, validate=True)
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert("RGB"))
    except (binascii.Error, OSError) as exc:
        raise PayloadError(f"payload is not a base64 PNG: {exc}") from exc


def _decode_payload(request: EmbedRequest, max_batch: int):
    if request.is_goal:
        if not isinstance(request.payload, str):
            raise PayloadError("goal payload must be a sentence")
        return request.payload
    if request.modality == "text":
        if not isinstance(request.payload, str):
            raise PayloadError("text payload must be a string")
        return request.payload
    if request.modality == "image":
        if not isinstance(request.payload, str):
            raise PayloadError("image payload must be a single base64 PNG")
        return _decode_png(request.payload)
    if not isinstance(request.payload, list) or not request.payload:
        raise PayloadError("video payload must be a non-empty list of base64 PNGs")
    if len(request.payload) > max_batch:
        raise PayloadError(f"clip exceeds max batch size {max_batch}")
    return np.stack([_decode_png(f) for f in request.payload])


def create_app(config: Optional[ServiceConfig] = None,
               registry: Optional[EncoderRegistry] = None) -> FastAPI:
    config = config or ServiceConfig()
    registry = registry or build_registry(config)
    app = FastAPI(title="embed-service")

    @app.get("/info")
    def info() -> dict:
        return registry.info()

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest) -> EmbedResponse:
        if request.modality not in MODALITIES:
            raise HTTPException(status_code=400,
                                detail=f"unknown modality {request.modality!r}")
        encoder = registry[request.modality]
        try:
            payload = _decode_payload(request, config.max_batch)
            vector = encoder.embed(payload, is_goal=request.is_goal)
        except PayloadError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"encoder failure: {exc}")
        if not np.all(np.isfinite(vector)):
            raise HTTPException(status_code=500, detail="encoder produced non-finite values")
        return EmbedResponse(embedding=[float(v) for v in vector],
                             dim=len(vector), model=encoder.name)

    return app
