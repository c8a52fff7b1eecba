"""Encoder registry: one encoder per modality.

Payloads reach encoders already decoded (str for text, uint8 arrays for
rasters).  Goal inputs are always sentences; the visual encoders route them
through their text branch (pretrained) or a goal exemplar raster (built-in).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import reference
from .config import MODALITIES, REFERENCE_MODEL, ServiceConfig


class ModelUnavailableError(RuntimeError):
    """A configured checkpoint could not be loaded."""


class PayloadError(ValueError):
    """The decoded payload does not fit the modality."""


@dataclass
class ReferenceTextEncoder:
    name: str = "reference-text-fnv"
    dim: int = reference.TEXT_DIM

    def embed(self, payload, is_goal: bool = False) -> np.ndarray:
        if not isinstance(payload, str):
            raise PayloadError("text payload must be a string")
        try:
            return reference.embed_text(payload)
        except ValueError as exc:
            raise PayloadError(str(exc)) from exc


@dataclass
class ReferenceImageEncoder:
    name: str = "reference-image-pool16"
    dim: int = reference.IMAGE_DIM

    def embed(self, payload, is_goal: bool = False) -> np.ndarray:
        if is_goal:
            if not isinstance(payload, str):
                raise PayloadError("goal payload must be a sentence")
            return reference.embed_image(reference.visual_goal_frame(payload))
        try:
            return reference.embed_image(payload)
        except ValueError as exc:
            raise PayloadError(str(exc)) from exc


@dataclass
class ReferenceVideoEncoder:
    name: str = "reference-video-pool16"
    dim: int = reference.IMAGE_DIM

    def embed(self, payload, is_goal: bool = False) -> np.ndarray:
        if is_goal:
            if not isinstance(payload, str):
                raise PayloadError("goal payload must be a sentence")
            return reference.embed_image(reference.visual_goal_frame(payload))
        try:
            return reference.embed_video(payload)
        except ValueError as exc:
            raise PayloadError(str(exc)) from exc


class SentenceEncoder:
    """Pretrained sentence-embedding model (sentence-transformers)."""

    def __init__(self, model_name: str):
        try:
            from sentence_transformers import SentenceTransformer
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_name!r}: {exc}") from exc
        self.name = model_name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def embed(self, payload, is_goal: bool = False) -> np.ndarray:
        if not isinstance(payload, str):
            raise PayloadError("text payload must be a string")
        return np.asarray(self._model.encode(payload, convert_to_numpy=True),
                          dtype=np.float64)


class ClipEncoder:
    """Pretrained image/text encoder pair (CLIP family via transformers).

    ``video=True`` serves clips by mean-pooling per-frame image embeddings;
    goal sentences go through the text branch either way.
    """

    def __init__(self, model_name: str, video: bool = False):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
            self._torch = torch
            self._model = CLIPModel.from_pretrained(model_name)
            self._model.eval()
            self._processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:
            raise ModelUnavailableError(f"cannot load {model_name!r}: {exc}") from exc
        self.name = model_name
        self.dim = int(self._model.config.projection_dim)
        self._video = video

    def _embed_text(self, sentence: str) -> np.ndarray:
        inputs = self._processor(text=[sentence], return_tensors="pt", padding=True)
        with self._torch.no_grad():
            features = self._model.get_text_features(**inputs)
        return features[0].numpy().astype(np.float64)

    def _embed_frames(self, frames) -> np.ndarray:
        from PIL import Image
        images = [Image.fromarray(np.asarray(f, dtype=np.uint8)) for f in frames]
        inputs = self._processor(images=images, return_tensors="pt")
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features.numpy().astype(np.float64).mean(axis=0)

    def embed(self, payload, is_goal: bool = False) -> np.ndarray:
        if is_goal:
            if not isinstance(payload, str):
                raise PayloadError("goal payload must be a sentence")
            return self._embed_text(payload)
        frames = np.asarray(payload)
        if self._video:
            if frames.ndim != 4:
                raise PayloadError(f"expected a (n, h, w, 3) clip, got {frames.shape}")
            return self._embed_frames(frames)
        if frames.ndim != 3:
            raise PayloadError(f"expected a (h, w, 3) frame, got {frames.shape}")
        return self._embed_frames(frames[None])


@dataclass
class EncoderRegistry:
    encoders: dict

    def __getitem__(self, modality: str):
        if modality not in self.encoders:
            raise KeyError(modality)
        return self.encoders[modality]

    def info(self) -> dict:
        return {
            "modalities": list(self.encoders),
            "dims": {m: e.dim for m, e in self.encoders.items()},
            "models": {m: e.name for m, e in self.encoders.items()},
        }


def build_encoder(modality: str, model_name: str):
    if model_name == REFERENCE_MODEL:
        return {"text": ReferenceTextEncoder,
                "image": ReferenceImageEncoder,
                "video": ReferenceVideoEncoder}[modality]()
    if modality == "text":
        return SentenceEncoder(model_name)
    return ClipEncoder(model_name, video=(modality == "video"))


def build_registry(config: ServiceConfig) -> EncoderRegistry:
    return EncoderRegistry(encoders={
        m: build_encoder(m, config.models[m]) for m in MODALITIES
    })
