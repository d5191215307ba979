"""Shared fixtures and small scene builders."""

from __future__ import annotations

import numpy as np
import pytest

from splattint import (
    CameraIntrinsics,
    CameraPose,
    Gaussian,
    Scene,
    SH_C0,
    generate_synthetic_scene,
    recipe,
)


def dc_sh(color) -> np.ndarray:
    """DC-only coefficients whose activated color equals `color`."""
    sh = np.zeros((16, 3))
    sh[0] = (np.asarray(color, dtype=np.float64) - 0.5) / SH_C0
    return sh


def make_gaussian(position, color=(1.0, 0.0, 0.0), scale=0.1, opacity=0.8,
                  quat=(1.0, 0.0, 0.0, 0.0), sh=None) -> Gaussian:
    scale = np.full(3, scale, dtype=np.float64) if np.isscalar(scale) \
        else np.asarray(scale, dtype=np.float64)
    return Gaussian(
        position=np.asarray(position, dtype=np.float64),
        rotation=np.asarray(quat, dtype=np.float64),
        scale=scale,
        opacity=float(opacity),
        sh=dc_sh(color) if sh is None else np.asarray(sh, dtype=np.float64),
    )


def identity_camera(width=32, height=32, fx=None) -> tuple[CameraIntrinsics, CameraPose]:
    """Camera at the origin looking down +z, principal point at the center."""
    fx = float(fx if fx is not None else width)
    intr = CameraIntrinsics(fx=fx, fy=fx, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                            width=width, height=height)
    pose = CameraPose(rotation=np.eye(3), translation=np.zeros(3))
    return intr, pose


@pytest.fixture(scope="session")
def two_blobs_bundle():
    rec = recipe("two-blobs", width=32, height=32, camera_count=2)
    return generate_synthetic_scene(rec, seed=1)


@pytest.fixture(scope="session")
def plane_bundle():
    return generate_synthetic_scene("plane", seed=0)
