import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from oppodrive.embeddings import GoalSpec
from oppodrive.errors import AvailabilityError, InterfaceError, ProtocolError
from oppodrive.remote import RemoteBackend, RemoteEmbeddingClient, encode_payload

DIMS = {"text": 16, "image": 8, "video": 8}


def fake_vector(modality, payload):
    rng = np.random.default_rng(abs(hash((modality, str(payload)))) % (2 ** 32))
    return rng.normal(size=DIMS[modality]).tolist()


class StubHandler(BaseHTTPRequestHandler):
    fail_next = 0          # number of 500s to serve before succeeding
    bad_dim = False
    non_json = False

    def log_message(self, *args):
        pass

    def _send(self, code, body):
        data = body if isinstance(body, bytes) else json.dumps(body).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/info":
            self._send(200, {"modalities": list(DIMS), "dims": DIMS, "model": "stub"})
        else:
            self._send(404, {"error": "not found"})

    def do_POST(self):
        if StubHandler.fail_next > 0:
            StubHandler.fail_next -= 1
            self._send(500, {"error": "transient"})
            return
        if self.path != "/embed":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers["Content-Length"])
        request = json.loads(self.rfile.read(length))
        modality = request.get("modality")
        if modality not in DIMS:
            self._send(400, {"error": f"unknown modality {modality}"})
            return
        if StubHandler.non_json:
            self._send(200, b"this is not json")
            return
        vec = fake_vector(modality, request["payload"])
        dim = DIMS[modality] + (1 if StubHandler.bad_dim else 0)
        self._send(200, {"embedding": vec, "dim": dim, "model": "stub"})


@pytest.fixture(scope="module")
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


@pytest.fixture(autouse=True)
def reset_stub_flags():
    StubHandler.fail_next = 0
    StubHandler.bad_dim = False
    StubHandler.non_json = False


@pytest.fixture
def client(stub_server):
    return RemoteEmbeddingClient(endpoint=stub_server, max_retries=2, backoff=0.01)


def test_info_lists_modalities(client):
    info = client.info()
    assert set(info["modalities"]) == {"text", "image", "video"}
    assert info["dims"]["text"] == 16


def test_same_payload_identical_vectors(client):
    a = client.embed("text", "hello world")
    b = client.embed("text", "hello world")
    assert np.array_equal(a, b)


def test_batch_preserves_order(client):
    payloads = [f"sentence {i}" for i in range(5)]
    vectors = client.embed_batch("text", payloads)
    for payload, vec in zip(payloads, vectors):
        assert np.array_equal(vec, client.embed("text", payload))


def test_unknown_modality_is_protocol_error(client):
    with pytest.raises(ProtocolError):
        client.embed("audio", "hello")


def test_transient_failures_retried(client):
    StubHandler.fail_next = 2
    vec = client.embed("text", "retry me")
    assert vec.shape == (16,)


def test_persistent_failure_is_availability_error(client):
    StubHandler.fail_next = 50
    with pytest.raises(AvailabilityError):
        client.embed("text", "doomed")


def test_unreachable_endpoint(monkeypatch):
    client = RemoteEmbeddingClient(endpoint="http://127.0.0.1:1", max_retries=0,
                                   backoff=0.0, timeout=0.5)
    with pytest.raises(AvailabilityError):
        client.info()


def test_dim_mismatch_is_protocol_error(client):
    StubHandler.bad_dim = True
    with pytest.raises(ProtocolError):
        client.embed("text", "wrong dim")


def test_malformed_body_is_protocol_error(client):
    StubHandler.non_json = True
    with pytest.raises(ProtocolError):
        client.embed("text", "garbled")


def test_backend_descriptor_and_goal(client):
    backend = RemoteBackend(client, "image")
    assert backend.descriptor.dim == 8
    goal_vec = backend.embed_goal(GoalSpec.default("image"))
    assert goal_vec.shape == (8,)


def test_backend_modality_mismatch(client):
    backend = RemoteBackend(client, "image")
    with pytest.raises(InterfaceError):
        backend.embed_goal(GoalSpec.default("text"))


def test_backend_unavailable_modality(client, monkeypatch):
    monkeypatch.setitem(DIMS, "text", DIMS["text"])  # no-op, keeps DIMS intact
    with pytest.raises(InterfaceError):
        RemoteBackend(client, "audio")


def test_image_payload_encoding_roundtrips():
    frame = np.arange(224 * 224 * 3, dtype=np.uint8).reshape(224, 224, 3) % 251
    encoded = encode_payload("image", frame)
    import base64
    import io

    from PIL import Image
    decoded = np.asarray(Image.open(io.BytesIO(base64.b64decode(encoded))))
    assert np.array_equal(decoded, frame)
