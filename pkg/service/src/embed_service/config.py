"""Service configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

MODALITIES = ("text", "image", "video")

# "reference" selects the built-in deterministic encoder; anything else is
# treated as a pretrained checkpoint identifier for that modality.
REFERENCE_MODEL = "reference"


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8750
    models: dict = field(default_factory=lambda: {m: REFERENCE_MODEL for m in MODALITIES})
    max_batch: int = 64
    request_timeout: float = 30.0

    def __post_init__(self) -> None:
        if not 0 < self.port < 65536:
            raise ValueError(f"port out of range: {self.port}")
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.request_timeout <= 0:
            raise ValueError(f"request_timeout must be positive, got {self.request_timeout}")
        unknown = set(self.models) - set(MODALITIES)
        if unknown:
            raise ValueError(f"unknown modalities in model map: {sorted(unknown)}")
        missing = set(MODALITIES) - set(self.models)
        if missing:
            raise ValueError(f"model map is missing modalities: {sorted(missing)}")

    @staticmethod
    def from_env() -> "ServiceConfig":
        """EMBED_SERVICE_HOST / _PORT / _MODEL_TEXT / _MODEL_IMAGE / _MODEL_VIDEO."""
        models = {
            m: os.environ.get(f"EMBED_SERVICE_MODEL_{m.upper()}", REFERENCE_MODEL)
            for m in MODALITIES
        }
        return ServiceConfig(
            host=os.environ.get("EMBED_SERVICE_HOST", "127.0.0.1"),
            port=int(os.environ.get("EMBED_SERVICE_PORT", "8750")),
            models=models,
        )
