import json

import numpy as np
from click.testing import CliRunner
from PIL import Image

from limetree.cli import main


def write_anchor(path, d=4):
    rng = np.random.default_rng(1)
    colors = rng.integers(40, 250, size=(d, 3), dtype=np.int64).astype(np.uint8)
    anchor = np.repeat(np.repeat(colors[None, :, :], 4, axis=0), 4, axis=1)
    Image.fromarray(anchor, mode="RGB").save(path)


class TestBenchCommands:
    def test_fidelity_csv_to_stdout(self):
        runner = CliRunner()
        result = runner.invoke(main, [
            "bench", "fidelity", "--trials", "2", "--d", "4", "--top", "2",
            "--class-count", "3", "--seed", "5"])
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        assert lines[0] == "method,metric,class_scope,mean,stderr,trials,d"
        assert any(line.startswith("limet_star,") for line in lines[1:])

    def test_fidelity_byte_identical_reruns(self, tmp_path):
        runner = CliRunner()
        args = ["bench", "fidelity", "--trials", "2", "--d", "4",
                "--top", "2", "--class-count", "3", "--seed", "42"]
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert runner.invoke(main, args + ["--out", str(out_a)]).exit_code == 0
        assert runner.invoke(main, args + ["--out", str(out_b)]).exit_code == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_depth_sweep_has_depth_column(self):
        runner = CliRunner()
        result = runner.invoke(main, [
            "bench", "depth-sweep", "--trials", "1", "--d", "3",
            "--top", "2", "--class-count", "3"])
        assert result.exit_code == 0, result.output
        header = result.output.splitlines()[0]
        assert "depth" in header.split(",")

    def test_xor_family_clamps_classes(self):
        runner = CliRunner()
        result = runner.invoke(main, [
            "bench", "fidelity", "--family", "xor-pair", "--trials", "1",
            "--d", "4", "--top", "4", "--class-count", "5"])
        assert result.exit_code == 0, result.output


class TestExplainCommand:
    def test_grid_bundle(self, tmp_path):
        img = tmp_path / "anchor.png"
        out = tmp_path / "bundle.json"
        write_anchor(img, d=4)
        runner = CliRunner()
        result = runner.invoke(main, [
            "explain", "--image", str(img), "--grid", "1x4",
            "--classes", "2", "--out", str(out)])
        assert result.exit_code == 0, result.output
        bundle = json.loads(out.read_text())
        assert bundle["d"] == 4
        assert bundle["fidelity"]["certified"] is True
        assert bundle["fidelity_complete"]["certified"] is True
        assert len(bundle["feature_importance"]) == 4
        assert len(bundle["classes"]) == 2

    def test_mask_bundle(self, tmp_path):
        img = tmp_path / "anchor.png"
        out = tmp_path / "bundle.json"
        write_anchor(img, d=4)
        labels = np.zeros((4, 16), dtype=np.uint8)
        for j in range(16):
            labels[:, j] = j // 4
        mask = tmp_path / "mask.png"
        Image.fromarray(labels, mode="L").save(mask)
        runner = CliRunner()
        result = runner.invoke(main, [
            "explain", "--image", str(img), "--mask", str(mask),
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text())["d"] == 4

    def test_missing_segmentation_errors(self, tmp_path):
        img = tmp_path / "anchor.png"
        write_anchor(img)
        runner = CliRunner()
        result = runner.invoke(main, [
            "explain", "--image", str(img), "--out", str(tmp_path / "o.json")])
        assert result.exit_code != 0

    def test_custom_blackbox_descriptor(self, tmp_path):
        img = tmp_path / "anchor.png"
        out = tmp_path / "bundle.json"
        write_anchor(img, d=2)
        desc = json.dumps({"type": "table",
                           "rows": [[1.0, 0.0], [1.0, 0.0],
                                    [1.0, 0.0], [0.0, 1.0]]})
        runner = CliRunner()
        result = runner.invoke(main, [
            "explain", "--image", str(img), "--grid", "1x2",
            "--classes", "2", "--blackbox", desc, "--out", str(out)])
        assert result.exit_code == 0, result.output
        bundle = json.loads(out.read_text())
        assert bundle["anchor_probabilities"] == [0.0, 1.0]
