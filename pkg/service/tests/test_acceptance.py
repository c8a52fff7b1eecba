"""Acceptance gate for the service, one PASS/FAIL line per criterion."""

import numpy as np

from conftest import encode_frame, make_frame


def _verdict(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def _embed(client, modality, payload, is_goal=False):
    response = client.post("/embed", json={"modality": modality,
                                           "is_goal": is_goal, "payload": payload})
    assert response.status_code == 200, response.text
    body = response.json()
    assert len(body["embedding"]) == body["dim"]
    return np.asarray(body["embedding"])


def test_criterion_protocol_conformance_and_determinism(client):
    info = client.get("/info").json()
    schema_ok = (set(info["modalities"]) == {"text", "image", "video"}
                 and all(info["dims"][m] > 0 for m in info["modalities"]))

    payloads = {
        "text": "A collision will be happening in 2.0s.",
        "image": encode_frame(make_frame(True)),
        "video": [encode_frame(make_frame(True))] * 4,
    }
    max_repeat_err = 0.0
    dims_ok = True
    for modality, payload in payloads.items():
        first = _embed(client, modality, payload)
        second = _embed(client, modality, payload)
        max_repeat_err = max(max_repeat_err, float(np.max(np.abs(first - second))))
        dims_ok = dims_ok and len(first) == info["dims"][modality]

    ok = schema_ok and dims_ok and max_repeat_err <= 1e-6
    _verdict("protocol conformance and determinism", ok,
             f"schema {schema_ok}, dims {dims_ok}, repeat err {max_repeat_err:.2e}")


def test_criterion_cross_modal_direction(client):
    goal = "White car collides with a blue car."

    goal_image = _embed(client, "image", goal, is_goal=True)
    sim_collision = float(_embed(client, "image", encode_frame(make_frame(True)))
                          @ goal_image) / np.linalg.norm(goal_image)
    sim_cruising = float(_embed(client, "image", encode_frame(make_frame(False)))
                         @ goal_image) / np.linalg.norm(goal_image)
    image_ok = sim_collision > sim_cruising

    goal_video = _embed(client, "video", goal, is_goal=True)
    collision_clip = [encode_frame(make_frame(True))] * 30
    cruising_clip = [encode_frame(make_frame(False))] * 30
    clip_collision = float(_embed(client, "video", collision_clip)
                           @ goal_video) / np.linalg.norm(goal_video)
    clip_cruising = float(_embed(client, "video", cruising_clip)
                          @ goal_video) / np.linalg.norm(goal_video)
    video_ok = clip_collision > clip_cruising

    ok = image_ok and video_ok
    _verdict("cross-modal direction (collision scores closer to collision goal)",
             ok,
             f"image {sim_collision:.4f} > {sim_cruising:.4f}: {image_ok}; "
             f"video {clip_collision:.4f} > {clip_cruising:.4f}: {video_ok}")
