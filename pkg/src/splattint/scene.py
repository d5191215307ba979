"""Scene model: gaussian splat primitives, pinhole cameras, training views.

Conventions used throughout the package:

- World-to-camera poses, OpenCV axes (x right, y down, z forward).
- Pixel (u, v) samples the continuous image plane at integer coordinates,
  u = fx * x/z + cx, v = fy * y/z + cy.
- Quaternions are stored (w, x, y, z) and kept unit-norm in memory.
- Per-gaussian color is a degree-3 real spherical-harmonics expansion,
  16 coefficients x 3 channels.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SH_COEFFS = 16  # (degree + 1)^2 for degree 3


def _as_float_array(value, shape, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != shape:
        raise ValidationError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name}: non-finite values")
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixel units."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("intrinsics: non-positive image dimensions")
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError("intrinsics: non-positive focal length")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValidationError("intrinsics: principal point outside image")


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform: x_cam = rotation @ x_world + translation."""

    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        rot = _as_float_array(self.rotation, (3, 3), "pose rotation")
        tr = _as_float_array(self.translation, (3,), "pose translation")
        err = np.abs(rot @ rot.T - np.eye(3)).max()
        if err > 1e-3:
            raise ValidationError(f"pose rotation not orthonormal (max error {err:.2e})")
        if np.linalg.det(rot) < 0:
            raise ValidationError("pose rotation has negative determinant")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @property
    def camera_center(self) -> np.ndarray:
        """World-space position of the optical center."""
        return -self.rotation.T @ self.translation


def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> CameraPose:
    """Pose for a camera at `eye` looking toward `target`, head along `up`."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise ValidationError("look_at: eye and target coincide")
    z = forward / norm
    x = np.cross(z, up)
    xn = np.linalg.norm(x)
    if xn < 1e-12:
        raise ValidationError("look_at: up parallel to view direction")
    x = x / xn
    y = np.cross(z, x)
    rotation = np.stack([x, y, z])
    return CameraPose(rotation=rotation, translation=-rotation @ eye)


def quaternion_to_rotation(q: np.ndarray) -> np.ndarray:
    """Unit quaternion(s) (w, x, y, z) -> rotation matrix, shape (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rot = np.empty(q.shape[:-1] + (3, 3))
    rot[..., 0, 0] = 1 - 2 * (y * y + z * z)
    rot[..., 0, 1] = 2 * (x * y - w * z)
    rot[..., 0, 2] = 2 * (x * z + w * y)
    rot[..., 1, 0] = 2 * (x * y + w * z)
    rot[..., 1, 1] = 1 - 2 * (x * x + z * z)
    rot[..., 1, 2] = 2 * (y * z - w * x)
    rot[..., 2, 0] = 2 * (x * z - w * y)
    rot[..., 2, 1] = 2 * (y * z + w * x)
    rot[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return rot


@dataclass(frozen=True)
class Gaussian:
    """One splat primitive (a convenience view; scenes store arrays)."""

    position: np.ndarray  # (3,)
    rotation: np.ndarray  # (4,) unit quaternion, (w, x, y, z)
    scale: np.ndarray  # (3,) per-axis standard deviations, > 0
    opacity: float  # in (0, 1)
    sh: np.ndarray  # (16, 3)


@dataclass(frozen=True)
class Scene:
    """A gaussian-splat scene as parallel arrays over N gaussians."""

    positions: np.ndarray  # (N, 3)
    rotations: np.ndarray  # (N, 4) unit quaternions
    scales: np.ndarray  # (N, 3) positive
    opacities: np.ndarray  # (N,) in (0, 1)
    sh: np.ndarray  # (N, 16, 3)
    sh_degree: int = 3

    def __post_init__(self):
        n = len(np.asarray(self.positions))
        object.__setattr__(self, "positions", _as_float_array(self.positions, (n, 3), "positions"))
        object.__setattr__(self, "rotations", _as_float_array(self.rotations, (n, 4), "rotations"))
        object.__setattr__(self, "scales", _as_float_array(self.scales, (n, 3), "scales"))
        object.__setattr__(self, "opacities", _as_float_array(self.opacities, (n,), "opacities"))
        object.__setattr__(self, "sh", _as_float_array(self.sh, (n, SH_COEFFS, 3), "sh"))
        if not (0 <= self.sh_degree <= 3):
            raise ValidationError("sh_degree must be in [0, 3]")
        if np.any(self.scales <= 0):
            raise ValidationError("scales must be strictly positive")
        if np.any(self.opacities <= 0) or np.any(self.opacities >= 1):
            raise ValidationError("opacities must lie strictly inside (0, 1)")
        norms = np.linalg.norm(self.rotations, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValidationError("rotations must be unit quaternions")

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __getitem__(self, index: int) -> Gaussian:
        return Gaussian(
            position=self.positions[index],
            rotation=self.rotations[index],
            scale=self.scales[index],
            opacity=float(self.opacities[index]),
            sh=self.sh[index],
        )

    @property
    def gaussians(self) -> list[Gaussian]:
        return [self[i] for i in range(len(self))]

    @classmethod
    def from_gaussians(cls, gaussians, sh_degree: int = 3) -> "Scene":
        gaussians = list(gaussians)
        if not gaussians:
            raise ValidationError("scene needs at least one gaussian")
        return cls(
            positions=np.stack([g.position for g in gaussians]).astype(np.float64),
            rotations=np.stack([g.rotation for g in gaussians]).astype(np.float64),
            scales=np.stack([g.scale for g in gaussians]).astype(np.float64),
            opacities=np.array([g.opacity for g in gaussians], dtype=np.float64),
            sh=np.stack([g.sh for g in gaussians]).astype(np.float64),
            sh_degree=sh_degree,
        )

    def with_sh(self, sh: np.ndarray) -> "Scene":
        """New scene sharing geometry arrays, with replaced SH coefficients."""
        return dataclasses.replace(self, sh=sh)


@dataclass(frozen=True)
class TrainingView:
    """A posed camera with its reference image (values in [0, 1])."""

    view_id: int
    intrinsics: CameraIntrinsics
    pose: CameraPose
    image: np.ndarray  # (height, width, 3) float64
    image_path: str | None = None

    def __post_init__(self):
        expected = (self.intrinsics.height, self.intrinsics.width, 3)
        img = np.asarray(self.image, dtype=np.float64)
        if img.shape != expected:
            raise ValidationError(
                f"view {self.view_id}: image shape {img.shape} does not match intrinsics {expected}"
            )
        object.__setattr__(self, "image", img)


def scene_radius(scene: Scene) -> float:
    """Radius of the bounding sphere of gaussian centers around their centroid."""
    centroid = scene.positions.mean(axis=0)
    return float(np.linalg.norm(scene.positions - centroid, axis=1).max())
