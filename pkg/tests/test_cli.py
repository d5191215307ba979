import json
import re
import subprocess
import sys

import numpy as np
import pytest

from conftest import make_gaussian
from splattint import (
    Scene,
    depth_from_gaussians,
    generate_synthetic_scene,
    load_scene_ply,
    look_at,
    render,
)
from splattint.cli import main
from splattint.imageio import read_pfm, write_png
from splattint.scene import TrainingView
from splattint.scene_io import save_cameras, save_scene_ply
from splattint.session import EditSession, SessionConfig

METRICS_LINE = re.compile(r"\d+,\d+,\d+,\d+\.\d{8},-?\d+\.\d{8},\d+\.\d{8}")


@pytest.fixture(scope="module")
def blobs_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("blobs")
    assert main(["fixture", "--recipe", "two-blobs", "--out", str(out),
                 "--seed", "1", "--size", "32", "32", "--cameras", "2"]) == 0
    return out


@pytest.fixture(scope="module")
def frontal_plane_dir(tmp_path_factory):
    # plane scene observed head-on; the stereo pair sees real disparity here
    out = tmp_path_factory.mktemp("frontal")
    bundle = generate_synthetic_scene("plane", seed=0)
    intr = bundle.views[0].intrinsics
    pose = look_at(np.array([0.0, 0.0, -2.3]), np.zeros(3), np.array([0.0, 1.0, 0.0]))
    views = [TrainingView(view_id=0, intrinsics=intr, pose=pose,
                          image=render(bundle.scene, intr, pose))]
    save_scene_ply(bundle.scene, out / "scene.ply")
    save_cameras(views, out / "cameras.txt")
    return out


@pytest.fixture(scope="module")
def single_gaussian_dir(tmp_path_factory):
    from conftest import identity_camera

    out = tmp_path_factory.mktemp("single")
    scene = Scene.from_gaussians([make_gaussian((0.0, 0.0, 2.0), opacity=0.9, scale=0.2)])
    intr, pose = identity_camera(33, 33)
    views = [TrainingView(view_id=0, intrinsics=intr, pose=pose,
                          image=render(scene, intr, pose))]
    save_scene_ply(scene, out / "scene.ply")
    save_cameras(views, out / "cameras.txt")
    return out


def scene_args(directory):
    return ["--scene", str(directory / "scene.ply"), "--cameras", str(directory / "cameras.txt")]


class TestFixtureCommand:
    def test_writes_loadable_outputs(self, blobs_dir, capsys):
        scene = load_scene_ply(blobs_dir / "scene.ply")
        assert len(scene) == 20
        assert (blobs_dir / "cameras.txt").exists()

    def test_deterministic_across_runs(self, blobs_dir, tmp_path):
        assert main(["fixture", "--recipe", "two-blobs", "--out", str(tmp_path),
                     "--seed", "1", "--size", "32", "32", "--cameras", "2"]) == 0
        assert (tmp_path / "scene.ply").read_bytes() == (blobs_dir / "scene.ply").read_bytes()
        assert (tmp_path / "cameras.txt").read_text() == (blobs_dir / "cameras.txt").read_text()

    def test_unknown_recipe_exits_one(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["fixture", "--recipe", "torus", "--out", str(tmp_path)])
        assert exc.value.code == 1


class TestDepthCommand:
    def test_gaussians_depth_is_bit_exact(self, single_gaussian_dir, tmp_path):
        out = tmp_path / "depth.pfm"
        assert main(["depth", *scene_args(single_gaussian_dir), "--view-id", "0",
                     "--depth-method", "gaussians", "--out", str(out)]) == 0
        depth = read_pfm(out)
        assert depth[16, 16] == 2.0
        assert np.isinf(depth[0, 0])
        scene = load_scene_ply(single_gaussian_dir / "scene.ply")
        from conftest import identity_camera
        intr, pose = identity_camera(33, 33)
        expected = depth_from_gaussians(scene, intr, pose).astype(np.float32)
        np.testing.assert_array_equal(depth, expected)

    def test_stereo_depth_matches_plane(self, frontal_plane_dir, tmp_path):
        out = tmp_path / "depth.pfm"
        assert main(["depth", *scene_args(frontal_plane_dir), "--view-id", "0",
                     "--depth-method", "stereo-hv", "--out", str(out)]) == 0
        depth = read_pfm(out)
        finite = np.isfinite(depth)
        assert finite.mean() > 0.9
        rel = np.abs(depth[finite] - 2.3) / 2.3
        assert np.median(rel) <= 0.02

    def test_unknown_view_id(self, blobs_dir, tmp_path, capsys):
        code = main(["depth", *scene_args(blobs_dir), "--view-id", "9",
                     "--out", str(tmp_path / "d.pfm")])
        assert code == 1
        assert "view id 9" in capsys.readouterr().err

    def test_unwritable_out_path(self, blobs_dir, capsys):
        code = main(["depth", *scene_args(blobs_dir), "--view-id", "0",
                     "--out", "/nonexistent-dir/d.pfm"])
        assert code == 1

    def test_missing_scene_names_path(self, tmp_path, capsys):
        code = main(["depth", "--scene", str(tmp_path / "nope.ply"),
                     "--cameras", str(tmp_path / "nope.txt"),
                     "--view-id", "0", "--out", str(tmp_path / "d.pfm")])
        assert code == 1
        assert "nope.ply" in capsys.readouterr().err


class TestBenchCommand:
    def test_report_structure(self, blobs_dir, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["bench", *scene_args(blobs_dir), "--repetitions", "10",
                     "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["repetitions"] == 10
        assert report["pixels_identical"] is True
        assert [row["variant"] for row in report["rows"]] == ["hwc", "chw"]
        for row in report["rows"]:
            assert 0.0 < row["min_ms"] <= row["median_ms"] <= row["max_ms"]
        assert "pixels identical: True" in capsys.readouterr().err

    def test_too_few_repetitions(self, blobs_dir, tmp_path):
        assert main(["bench", *scene_args(blobs_dir), "--repetitions", "3"]) == 1


class TestEditCommand:
    def half_mask_png(self, path):
        bits = np.zeros((32, 32), dtype=bool)
        bits[:, :16] = True
        write_png(path, np.repeat(bits[:, :, None].astype(np.float64), 3, axis=2))
        return bits

    def test_edit_end_to_end(self, blobs_dir, tmp_path, capsys):
        mask = tmp_path / "mask.png"
        self.half_mask_png(mask)
        out = tmp_path / "edited.ply"
        metrics = tmp_path / "metrics.txt"
        code = main(["edit", *scene_args(blobs_dir), "--mask", str(mask),
                     "--view-id", "0", "--tint", "1,0.2,0.2", "--iters", "40",
                     "--seed", "0", "--out", str(out), "--metrics", str(metrics)])
        assert code == 0
        edited = load_scene_ply(out)
        original = load_scene_ply(blobs_dir / "scene.ply")
        assert not np.array_equal(edited.sh, original.sh)
        np.testing.assert_array_equal(edited.positions, original.positions)
        lines = metrics.read_text().splitlines()
        assert len(lines) == 40
        assert all(METRICS_LINE.fullmatch(line) for line in lines)
        assert capsys.readouterr().out.strip().splitlines()[-1] == lines[-1]

    def test_all_false_mask_exits_two(self, blobs_dir, tmp_path, capsys):
        mask = tmp_path / "empty.png"
        write_png(mask, np.zeros((32, 32, 3)))
        code = main(["edit", *scene_args(blobs_dir), "--mask", str(mask),
                     "--view-id", "0", "--tint", "1,0.2,0.2",
                     "--out", str(tmp_path / "out.ply")])
        assert code == 2
        assert "empty selection" in capsys.readouterr().err

    def test_bad_tint_exits_one(self, blobs_dir, tmp_path):
        mask = tmp_path / "mask.png"
        self.half_mask_png(mask)
        code = main(["edit", *scene_args(blobs_dir), "--mask", str(mask),
                     "--tint", "1,0.2", "--out", str(tmp_path / "out.ply")])
        assert code == 1

    def test_headless_matches_interactive_sequence(self, blobs_dir, tmp_path):
        mask = tmp_path / "mask.png"
        bits = self.half_mask_png(mask)
        cli_out = tmp_path / "cli.ply"
        code = main(["edit", *scene_args(blobs_dir), "--mask", str(mask),
                     "--view-id", "0", "--tint", "1,0.2,0.2", "--iters", "30",
                     "--seed", "0", "--depth-method", "gaussians",
                     "--out", str(cli_out)])
        assert code == 0

        scene = load_scene_ply(blobs_dir / "scene.ply")
        from splattint.scene_io import load_cameras
        views = load_cameras(blobs_dir / "cameras.txt")
        session = EditSession(scene, views, SessionConfig(
            depth_method="gaussians", deterministic=True, seed=0))
        session.set_viewer(views[0].intrinsics, views[0].pose)
        session.handle_message({"type": "enter_selection"})
        session.apply_mask(bits)
        session.handle_message({"type": "set_tint", "rgb": [1.0, 0.2, 0.2]})
        replies = session.handle_message({"type": "commit_selection"})
        assert replies[0]["type"] == "selection_info"
        session.run_iterations(30)
        api_out = tmp_path / "api.ply"
        session.handle_message({"type": "save", "path": str(api_out)})

        assert cli_out.read_bytes() == api_out.read_bytes()


class TestMainModule:
    def test_module_entrypoint_error_path(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "splattint", "depth",
             "--scene", str(tmp_path / "missing.ply"),
             "--cameras", str(tmp_path / "missing.txt"),
             "--view-id", "0", "--out", str(tmp_path / "d.pfm")],
            capture_output=True, text=True)
        assert proc.returncode == 1
        assert "missing.ply" in proc.stderr

    def test_unknown_subcommand_exits_one(self):
        proc = subprocess.run([sys.executable, "-m", "splattint", "explode"],
                              capture_output=True, text=True)
        assert proc.returncode == 1

    def test_view_missing_scene_exits_one(self, tmp_path, capsys):
        code = main(["view", "--scene", str(tmp_path / "gone.ply"),
                     "--cameras", str(tmp_path / "gone.txt"), "--port", "0"])
        assert code == 1
        assert "gone.ply" in capsys.readouterr().err
