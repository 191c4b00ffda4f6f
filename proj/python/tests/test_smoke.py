import json
import math

import numpy as np
import pytest

import elemgrasp as eg


def test_rectangle_and_metrics():
    a = eg.GraspRectangle(50, 50, 0, 20, 10)
    b = eg.GraspRectangle(55, 50, 0, 20, 10)
    assert eg.jaccard(a, a) == pytest.approx(1.0)
    assert eg.jaccard(a, b) == pytest.approx(150 / 250)
    assert eg.angle_diff(5, 175) == pytest.approx(10)
    assert eg.grasp_success(a, b)
    assert not eg.grasp_success(a, eg.GraspRectangle(50, 50, 30, 20, 10))
    assert len(a.corners()) == 4
    assert eg.GraspRectangle(0, 0, 200, 2, 2).theta_deg == pytest.approx(20)


def test_masks():
    r = eg.rasterize_rect(eg.GraspRectangle(2, 2, 0, 2, 2), 5, 5)
    assert r.shape == (5, 5) and r.dtype == np.bool_
    assert r.sum() == 4
    half = np.zeros((4, 4), bool)
    half[:, :2] = True
    full = np.ones((4, 4), bool)
    assert eg.dice(half, full) == pytest.approx(2 * 8 / (8 + 16))


def test_errors_carry_codes():
    with pytest.raises(eg.ElemGraspError) as info:
        eg.GraspRectangle(0, 0, 0, -1, 1)
    assert info.value.code == "SchemaViolation"
    with pytest.raises(eg.ElemGraspError) as info:
        eg.read_sample("/nonexistent/sample")
    assert info.value.code == "MissingFile"


def test_generate_read_and_oracle(tmp_path):
    root = tmp_path / "ds"
    counts = eg.generate_dataset({"dataset.count": 10, "dataset.seed": 1}, root)
    assert counts["train"] + counts["val"] == 10
    assert eg.validation_count(1180, 0.2) == 236
    assert eg.validate_dataset(root) == []
    first = eg.dataset_checksum(root)

    sample = eg.read_sample(eg.list_samples(root, "train")[0])
    assert sample["object_image"].shape == (224, 224, 3)
    assert sample["elements"][0]["mask"].shape == (224, 224)
    assert 0 <= sample["grasp"].theta_deg < 180

    report = eg.evaluate_oracle(root, ["train", "val"])
    assert report["splits"]["overall"]["attempts"] == 10
    assert all(math.isclose(r, 100.0) for r in report["splits"]["overall"]["sweep"])

    again = tmp_path / "ds2"
    eg.generate_dataset({"dataset.count": 10, "dataset.seed": 1}, again)
    assert eg.dataset_checksum(again) == first


def test_cli_in_process(tmp_path):
    ds = tmp_path / "ds"
    assert eg.run_cli(["generate", "--out", str(ds), "--count", "6", "--seed", "2"]) == 0
    out = tmp_path / "report"
    rc = eg.run_cli(["evaluate", "--dataset", str(ds), "--out", str(out), "--decomposer", "oracle",
                     "--graspnet", "oracle", "--splits", "train,val", "--no-plots"])
    assert rc == 0
    report = eg.read_report(out / "report.json")
    assert report["schema_version"] == 1
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == "evaluate" and manifest["exit_code"] == 0
    assert eg.run_cli(["evaluate", "--dataset", str(tmp_path / "missing"), "--out", str(out),
                       "--decomposer", "oracle", "--graspnet", "oracle"]) == 3
