"""Service endpoint tests over the in-process app."""

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from rawgesture.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def simulate_config(tmp: Path, out_name: str = "sim") -> dict:
    return {
        "seed": 3,
        "dataset": {
            "synthetic": {"classes": 2, "sequences_per_class": 4, "n_frames": 16, "frame_h": 16, "frame_w": 16},
            "scene_h": 16,
            "scene_w": 16,
        },
        "optics": {"psf_h": 5, "psf_w": 5},
        "output": {"dir": str(tmp / out_name)},
    }


class TestMeta:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["version"]

    def test_describe_resnet3d_default_shapes(self, client):
        response = client.get("/describe/resnet3d")
        assert response.status_code == 200
        outputs = [row["output"] for row in response.json()["rows"]]
        for expected in ("64×8×120×160", "64×4×60×80", "128×2×30×40", "256×1×15×20", "256", "9"):
            assert expected in outputs

    def test_describe_unknown_kind_404(self, client):
        assert client.get("/describe/transformer").status_code == 404

    def test_describe_desk_scale(self, client):
        response = client.get("/describe/sfe", params={"height": 24, "width": 32})
        rows = response.json()["rows"]
        assert rows[-1]["output"] == "1×24×32"


class TestValidate:
    def test_valid_config(self, client):
        response = client.post("/validate", json={"config": {"training": {"epochs": 2}}})
        assert response.status_code == 200
        assert response.json()["valid"] is True

    def test_schema_error_reported(self, client):
        response = client.post("/validate", json={"config": {"training": {"epochz": 2}}})
        body = response.json()
        assert body["valid"] is False
        assert body["errors"]

    def test_missing_path_reported(self, client, tmp_path):
        response = client.post(
            "/validate",
            json={"config": {"dataset": {"root": str(tmp_path / "missing")}}},
        )
        body = response.json()
        assert body["valid"] is False
        assert any("dataset.root" in e for e in body["errors"])

    def test_overrides_applied_before_validation(self, client):
        response = client.post(
            "/validate",
            json={"config": {}, "overrides": {"training.epochs": 7}},
        )
        assert response.json()["config"]["training"]["epochs"] == 7


class TestJobs:
    def test_simulate_writes_artifacts_and_manifest(self, client, tmp_path):
        response = client.post("/simulate", json={"config": simulate_config(tmp_path)})
        assert response.status_code == 200, response.text
        body = response.json()
        out = Path(body["out_dir"])
        assert (out / "raw" / "train" / "index.json").exists()
        assert (out / "scene" / "test" / "index.json").exists()
        assert (out / "psf.tif").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 3
        assert manifest["outputs"]
        for rel, digest in list(manifest["outputs"].items())[:3]:
            assert len(digest) == 64

    def test_refuses_dirty_output_without_force(self, client, tmp_path):
        cfg = simulate_config(tmp_path, "dirty")
        assert client.post("/simulate", json={"config": cfg}).status_code == 200
        second = client.post("/simulate", json={"config": cfg})
        assert second.status_code == 422
        assert "force" in second.json()["detail"]
        cfg["output"]["force"] = True
        assert client.post("/simulate", json={"config": cfg}).status_code == 200

    def test_invalid_config_rejected(self, client):
        response = client.post("/simulate", json={"config": {"nope": 1}})
        assert response.status_code == 422

    def test_job_error_maps_to_422(self, client, tmp_path):
        response = client.post(
            "/train",
            json={"config": {"output": {"dir": str(tmp_path / "t")}}},
        )
        assert response.status_code == 422
        assert "data_dir" in response.json()["detail"]

    def test_unknown_body_keys_rejected(self, client):
        response = client.post("/simulate", json={"config": {}, "unexpected": 1})
        assert response.status_code == 422
