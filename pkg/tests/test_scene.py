import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import dc_sh, make_gaussian
from oracles import quat_to_matrix
from splattint import (
    CameraIntrinsics,
    CameraPose,
    Scene,
    TrainingView,
    ValidationError,
    look_at,
    quaternion_to_rotation,
)


class TestCameraIntrinsics:
    def test_valid(self):
        intr = CameraIntrinsics(fx=100.0, fy=90.0, cx=31.5, cy=23.5, width=64, height=48)
        assert intr.fx == 100.0 and intr.height == 48

    @pytest.mark.parametrize("kwargs", [
        dict(fx=0.0, fy=1.0, cx=0.0, cy=0.0, width=4, height=4),
        dict(fx=1.0, fy=-2.0, cx=0.0, cy=0.0, width=4, height=4),
        dict(fx=1.0, fy=1.0, cx=4.0, cy=0.0, width=4, height=4),
        dict(fx=1.0, fy=1.0, cx=0.0, cy=-0.5, width=4, height=4),
        dict(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=0, height=4),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            CameraIntrinsics(**kwargs)


class TestCameraPose:
    def test_camera_center(self):
        pose = CameraPose(rotation=np.eye(3), translation=np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(pose.camera_center, [-1.0, -2.0, -3.0])

    def test_center_general(self):
        q = np.array([0.9, 0.1, -0.3, 0.2])
        rot = quaternion_to_rotation(q / np.linalg.norm(q))
        tr = np.array([0.4, -1.0, 2.0])
        pose = CameraPose(rotation=rot, translation=tr)
        # x_cam = R c + t must be the origin
        np.testing.assert_allclose(rot @ pose.camera_center + tr, 0.0, atol=1e-12)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValidationError):
            CameraPose(rotation=np.eye(3) * 1.1, translation=np.zeros(3))

    def test_rejects_reflection(self):
        with pytest.raises(ValidationError):
            CameraPose(rotation=np.diag([1.0, 1.0, -1.0]), translation=np.zeros(3))


class TestLookAt:
    def test_target_lands_on_optical_axis(self):
        pose = look_at((1.0, 2.0, -3.0), (0.5, -0.2, 1.0))
        cam = pose.rotation @ np.array([0.5, -0.2, 1.0]) + pose.translation
        assert cam[2] > 0
        np.testing.assert_allclose(cam[:2], 0.0, atol=1e-12)

    def test_eye_maps_to_origin(self):
        pose = look_at((1.0, 2.0, -3.0), (0.0, 0.0, 0.0))
        cam = pose.rotation @ np.array([1.0, 2.0, -3.0]) + pose.translation
        np.testing.assert_allclose(cam, 0.0, atol=1e-12)
        np.testing.assert_allclose(pose.camera_center, [1.0, 2.0, -3.0], atol=1e-12)

    def test_degenerate_inputs(self):
        with pytest.raises(ValidationError):
            look_at((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))
        with pytest.raises(ValidationError):
            look_at((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), up=(0.0, 1.0, 0.0))


class TestQuaternionToRotation:
    def test_identity(self):
        np.testing.assert_allclose(
            quaternion_to_rotation(np.array([1.0, 0.0, 0.0, 0.0])), np.eye(3))

    def test_quarter_turn_about_z(self):
        half = np.sqrt(0.5)
        rot = quaternion_to_rotation(np.array([half, 0.0, 0.0, half]))
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(rot, expected, atol=1e-12)

    @given(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4))
    def test_unit_quaternions_give_rotations(self, raw):
        q = np.asarray(raw)
        norm = np.linalg.norm(q)
        if norm < 1e-3:
            return
        q = q / norm
        rot = quaternion_to_rotation(q)
        np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rot, quat_to_matrix(q), atol=1e-12)


class TestScene:
    def test_from_gaussians_roundtrip(self):
        gaussians = [make_gaussian((0.0, 0.0, 2.0)),
                     make_gaussian((1.0, 0.0, 3.0), color=(0.0, 0.0, 1.0))]
        scene = Scene.from_gaussians(gaussians)
        assert len(scene) == 2
        got = scene[1]
        np.testing.assert_array_equal(got.position, [1.0, 0.0, 3.0])
        np.testing.assert_array_equal(got.sh, dc_sh((0.0, 0.0, 1.0)))

    def test_with_sh_replaces_only_sh(self):
        scene = Scene.from_gaussians([make_gaussian((0.0, 0.0, 2.0))])
        swapped = scene.with_sh(np.ones_like(scene.sh))
        assert swapped.sh[0, 5, 1] == 1.0
        np.testing.assert_array_equal(swapped.positions, scene.positions)
        np.testing.assert_array_equal(scene.sh[0, 1:], 0.0)

    @pytest.mark.parametrize("field,value", [
        ("scale", np.array([0.1, 0.0, 0.1])),
        ("scale", np.array([-0.1, 0.1, 0.1])),
        ("opacity", 0.0),
        ("opacity", 1.0),
    ])
    def test_rejects_out_of_range(self, field, value):
        kwargs = {field: value}
        with pytest.raises(ValidationError):
            Scene.from_gaussians([make_gaussian((0.0, 0.0, 2.0), **kwargs)])

    def test_rejects_non_unit_quaternion(self):
        with pytest.raises(ValidationError):
            Scene.from_gaussians([make_gaussian((0.0, 0.0, 2.0), quat=(1.0, 1.0, 0.0, 0.0))])

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            Scene.from_gaussians([make_gaussian((np.nan, 0.0, 2.0))])

    def test_rejects_bad_sh_degree(self):
        scene = Scene.from_gaussians([make_gaussian((0.0, 0.0, 2.0))])
        with pytest.raises(ValidationError):
            Scene(scene.positions, scene.rotations, scene.scales, scene.opacities,
                  scene.sh, sh_degree=4)


class TestTrainingView:
    def test_image_shape_checked(self):
        intr = CameraIntrinsics(fx=8.0, fy=8.0, cx=3.5, cy=3.5, width=8, height=8)
        pose = CameraPose(rotation=np.eye(3), translation=np.zeros(3))
        with pytest.raises(ValidationError):
            TrainingView(view_id=0, intrinsics=intr, pose=pose,
                         image=np.zeros((4, 8, 3)))
