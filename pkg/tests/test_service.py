"""HTTP service: endpoints, error contract, parity with the CLI engine path."""

import base64
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from pixelnn import DescriptorConfig, png_bytes
from pixelnn.service import create_app

from conftest import make_db


@pytest.fixture(scope="module")
def db():
    rng = np.random.default_rng(77)
    return make_db(rng, 3, 12, DescriptorConfig(levels=2, patch_radius=1))


@pytest.fixture(scope="module")
def client(db):
    with TestClient(create_app(db)) as c:
        yield c


def poll_result(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        resp = client.get(f"/api/result/{job_id}")
        assert resp.status_code == 200
        body = resp.json()
        if body["status"] != "running":
            return body
        time.sleep(0.05)
    raise AssertionError("job did not finish in time")


def input_b64(db):
    return base64.b64encode(png_bytes(db.exemplars[0].regressed)).decode("ascii")


class TestEndpoints:
    def test_health(self, client, db):
        body = client.get("/api/health").json()
        assert body["status"] == "ok"
        assert body["exemplar_count"] == db.count

    def test_exemplars_listing(self, client, db):
        body = client.get("/api/exemplars").json()
        assert len(body) == 3
        assert {e["id"] for e in body} == {0, 1, 2}
        assert all(e["thumbnail_png_base64"] for e in body)
        assert body[0]["tags"] == ["tag0"]

    def test_synthesize_grid_contract(self, client, db):
        req = {
            "input_png_base64": input_b64(db),
            "stage1": "external",
            "ks": [1, 2],
            "ts": [1, 3],
            "seed": 0,
        }
        job_id = client.post("/api/synthesize", json=req).json()["job_id"]
        body = poll_result(client, job_id)
        assert body["status"] == "done"
        assert body["manifest"]["candidate_count"] == 4
        assert len(body["candidates"]) == 4
        labels = [(c["k"], c["t"]) for c in body["candidates"]]
        assert labels == [(1, 1), (1, 3), (2, 1), (2, 3)]
        first = body["candidates"][0]
        assert first["image_png_base64"] and first["id_map_png_base64"]
        assert all(v.startswith("#") for v in first["palette"].values())

    def test_empty_selection_is_400(self, client, db):
        req = {
            "input_png_base64": input_b64(db),
            "stage1": "external",
            "tags": ["no-such-tag"],
        }
        resp = client.post("/api/synthesize", json=req)
        assert resp.status_code == 400
        assert resp.json() == {"error": "empty exemplar selection"}

    def test_bad_kt_is_400(self, client, db):
        resp = client.post(
            "/api/synthesize",
            json={"input_png_base64": input_b64(db), "stage1": "external", "ks": []},
        )
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_unknown_job_is_404(self, client):
        resp = client.get("/api/result/deadbeef")
        assert resp.status_code == 404
        assert "error" in resp.json()

    def test_wrong_size_input_is_400(self, client, db):
        from pixelnn import ImageRGB

        bad = ImageRGB(np.zeros((5, 5, 3), dtype=np.float32))
        resp = client.post(
            "/api/synthesize",
            json={
                "input_png_base64": base64.b64encode(png_bytes(bad)).decode("ascii"),
                "stage1": "external",
            },
        )
        assert resp.status_code == 400

    def test_subset_request_restricts_exemplars(self, client, db):
        req = {
            "input_png_base64": input_b64(db),
            "stage1": "external",
            "ids": [1],
            "ks": [3],
            "ts": [1],
        }
        job_id = client.post("/api/synthesize", json=req).json()["job_id"]
        body = poll_result(client, job_id)
        assert body["manifest"]["exemplar_ids"] == [1]
        assert list(body["candidates"][0]["palette"].keys()) == ["1"]


class TestEngineParity:
    def test_service_png_matches_direct_engine(self, client, db):
        """The service must return byte-identical PNGs to the library path."""
        import io

        from pixelnn import compute_field, generate_candidates, load_png, stage1

        # the same bytes the service receives: the PNG-encoded input
        source = load_png(io.BytesIO(png_bytes(db.exemplars[0].regressed)))
        f_x = stage1(source, "external", db.image_size)
        field = compute_field(f_x, db.descriptor_config)
        direct = generate_candidates(f_x, field, db, [1, 2], [1, 3])
        expected = [base64.b64encode(png_bytes(c.image)).decode("ascii") for c in direct]

        req = {
            "input_png_base64": input_b64(db),
            "stage1": "external",
            "ks": [1, 2],
            "ts": [1, 3],
        }
        job_id = client.post("/api/synthesize", json=req).json()["job_id"]
        body = poll_result(client, job_id)
        got = [c["image_png_base64"] for c in body["candidates"]]
        assert got == expected
