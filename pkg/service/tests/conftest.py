import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient

from embed_service.app import create_app


def make_frame(collision: bool) -> np.ndarray:
    """Top-down scene: white ego centered, blue npc overlapping or ahead."""
    frame = np.empty((224, 224, 3), dtype=np.uint8)
    frame[:] = (15, 15, 15)
    center = 112

    def car(cx, cy, color):
        frame[cy - 10:cy + 10, cx - 25:cx + 25] = color

    if collision:
        car(center + 15, center + 4, (40, 70, 255))
        car(center, center, (255, 255, 255))
    else:
        car(center, center, (255, 255, 255))
        car(center + 80, center - 44, (40, 70, 255))
    return frame


def encode_frame(frame: np.ndarray) -> str:
    from PIL import Image
    buffer = io.BytesIO()
    Image.fromarray(frame).save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


@pytest.fixture(scope="session")
def client():
    return TestClient(create_app())
