"""Deterministic synthetic fixtures: scene recipes with posed training views.

Recipes:

- "plane": a grid of thin gaussians tiling z = 0 over [-1, 1]^2 with
  checkerboard colors plus per-gaussian jitter (texture for stereo matching).
- "two-blobs": two jittered gaussian clusters with distinct base colors and
  small random higher-order SH coefficients.
- "orbit-room": the plane plus a sphere cluster floating in front of it.

Cameras sit on a ring around the -z axis looking at the origin.  Training
images are rendered with the package's own rasterizer, so a freshly generated
bundle is exactly self-consistent (zero photometric loss).  Generated fields
are rounded through float32 so PLY checkpoints round-trip bit-exactly.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .render import SH_C0, render
from .scene import CameraIntrinsics, Scene, TrainingView, look_at
from .scene_io import save_cameras, save_scene_ply

RECIPE_NAMES = ("plane", "two-blobs", "orbit-room")


@dataclass(frozen=True)
class SceneRecipe:
    name: str
    grid_n: int = 14
    cluster_size: int = 10
    camera_count: int = 4
    width: int = 96
    height: int = 96
    focal_scale: float = 0.9  # fx = fy = focal_scale * width
    ring_radius: float = 2.3
    ring_polar_deg: float = 18.0


_PRESETS = {
    "plane": SceneRecipe(name="plane"),
    "two-blobs": SceneRecipe(name="two-blobs", camera_count=6, width=64, height=64,
                             focal_scale=1.0, ring_radius=1.9, ring_polar_deg=25.0),
    "orbit-room": SceneRecipe(name="orbit-room", grid_n=10, cluster_size=40,
                              camera_count=8, ring_radius=2.6, ring_polar_deg=30.0),
}


def recipe(name: str, **overrides) -> SceneRecipe:
    if name not in _PRESETS:
        raise ValidationError(f"unknown recipe {name!r} (choose from {RECIPE_NAMES})")
    return replace(_PRESETS[name], **overrides)


@dataclass(frozen=True)
class SyntheticBundle:
    scene: Scene
    views: tuple[TrainingView, ...]
    recipe: SceneRecipe
    seed: int


def _dc_from_color(colors: np.ndarray) -> np.ndarray:
    """DC coefficients whose activated color equals `colors`."""
    return (np.asarray(colors) - 0.5) / SH_C0


def _plane_arrays(rec: SceneRecipe, rng: np.random.Generator):
    n = rec.grid_n
    if n < 2:
        raise ValidationError("plane recipe needs grid_n >= 2")
    coords = np.linspace(-1.0, 1.0, n)
    gx, gy = np.meshgrid(coords, coords, indexing="xy")
    count = n * n
    positions = np.stack([gx.ravel(), gy.ravel(), np.zeros(count)], axis=1)
    spacing = 2.0 / (n - 1)
    scales = np.tile([0.65 * spacing, 0.65 * spacing, 0.05 * spacing], (count, 1))
    rotations = np.tile([1.0, 0.0, 0.0, 0.0], (count, 1))
    opacities = np.full(count, 0.95)

    ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    checker = ((ix + iy) % 2 == 0).ravel()
    colors = np.where(checker[:, None], [0.85, 0.75, 0.35], [0.25, 0.30, 0.70])
    colors = np.clip(colors + rng.uniform(-0.12, 0.12, (count, 3)), 0.05, 0.95)
    sh = np.zeros((count, 16, 3))
    sh[:, 0, :] = _dc_from_color(colors)
    return positions, rotations, scales, opacities, sh


def _blob_arrays(rng: np.random.Generator, center, base_color, count: int,
                 spread: float = 0.16):
    positions = np.asarray(center) + rng.normal(0.0, spread, (count, 3))
    base_scale = np.exp(rng.normal(np.log(0.085), 0.22, (count, 1)))
    scales = base_scale * rng.uniform(0.8, 1.25, (count, 3))
    quats = rng.normal(size=(count, 4))
    rotations = quats / np.linalg.norm(quats, axis=1, keepdims=True)
    opacities = rng.uniform(0.75, 0.95, count)
    colors = np.clip(np.asarray(base_color) + rng.uniform(-0.08, 0.08, (count, 3)),
                     0.05, 0.95)
    sh = np.zeros((count, 16, 3))
    sh[:, 0, :] = _dc_from_color(colors)
    sh[:, 1:, :] = rng.normal(0.0, 0.02, (count, 15, 3))
    return positions, rotations, scales, opacities, sh


def _ball_arrays(rng: np.random.Generator, center, radius: float, count: int):
    raw = rng.normal(size=(count, 3))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    shell = raw * radius * rng.uniform(0.4, 1.0, (count, 1)) ** (1.0 / 3.0)
    positions = np.asarray(center) + shell
    scales = np.exp(rng.normal(np.log(0.06), 0.2, (count, 1))) \
        * rng.uniform(0.85, 1.2, (count, 3))
    quats = rng.normal(size=(count, 4))
    rotations = quats / np.linalg.norm(quats, axis=1, keepdims=True)
    opacities = rng.uniform(0.8, 0.95, count)
    # warm-to-cool gradient along the vertical axis
    t = (positions[:, 1] - positions[:, 1].min()) / max(np.ptp(positions[:, 1]), 1e-9)
    colors = np.stack([0.8 - 0.5 * t, 0.35 + 0.3 * t, 0.25 + 0.55 * t], axis=1)
    colors = np.clip(colors + rng.uniform(-0.05, 0.05, (count, 3)), 0.05, 0.95)
    sh = np.zeros((count, 16, 3))
    sh[:, 0, :] = _dc_from_color(colors)
    sh[:, 1:, :] = rng.normal(0.0, 0.015, (count, 15, 3))
    return positions, rotations, scales, opacities, sh


def _round_trip_float32(positions, rotations, scales, opacities, sh):
    """Round fields through their stored float32 representation."""
    positions = positions.astype(np.float32).astype(np.float64)
    scales = np.exp(np.log(scales).astype(np.float32).astype(np.float64))
    logit = np.log(opacities / (1.0 - opacities)).astype(np.float32).astype(np.float64)
    opacities = 1.0 / (1.0 + np.exp(-logit))
    quats = rotations.astype(np.float32).astype(np.float64)
    rotations = quats / np.linalg.norm(quats, axis=1, keepdims=True)
    sh = sh.astype(np.float32).astype(np.float64)
    return positions, rotations, scales, opacities, sh


def _ring_cameras(rec: SceneRecipe) -> list[tuple[CameraIntrinsics, np.ndarray]]:
    polar = np.deg2rad(rec.ring_polar_deg)
    fx = rec.focal_scale * rec.width
    intrinsics = CameraIntrinsics(
        fx=fx, fy=fx,
        cx=(rec.width - 1) / 2.0, cy=(rec.height - 1) / 2.0,
        width=rec.width, height=rec.height,
    )
    cameras = []
    for k in range(rec.camera_count):
        azimuth = 2.0 * np.pi * k / rec.camera_count
        eye = rec.ring_radius * np.array([
            np.sin(polar) * np.cos(azimuth),
            np.sin(polar) * np.sin(azimuth),
            -np.cos(polar),
        ])
        cameras.append((intrinsics, eye))
    return cameras


def generate_synthetic_scene(rec, seed: int = 0) -> SyntheticBundle:
    """Build a deterministic scene with cameras and rendered training images."""
    if isinstance(rec, str):
        rec = recipe(rec)
    if rec.camera_count < 2:
        raise ValidationError("recipes require at least 2 cameras on the ring")
    rng = np.random.default_rng(seed)

    if rec.name == "plane":
        arrays = _plane_arrays(rec, rng)
    elif rec.name == "two-blobs":
        parts = [
            _blob_arrays(rng, (-0.55, 0.0, 0.0), (0.78, 0.28, 0.22), rec.cluster_size),
            _blob_arrays(rng, (0.55, 0.0, 0.0), (0.20, 0.32, 0.78), rec.cluster_size),
        ]
        arrays = tuple(np.concatenate(field) for field in zip(*parts))
    elif rec.name == "orbit-room":
        parts = [
            _plane_arrays(rec, rng),
            _ball_arrays(rng, (0.0, 0.0, -0.55), 0.28, rec.cluster_size),
        ]
        arrays = tuple(np.concatenate(field) for field in zip(*parts))
    else:
        raise ValidationError(f"unknown recipe {rec.name!r}")

    scene = Scene(*_round_trip_float32(*arrays))
    views = []
    for view_id, (intrinsics, eye) in enumerate(_ring_cameras(rec)):
        pose = look_at(eye, (0.0, 0.0, 0.0))
        image = render(scene, intrinsics, pose)
        views.append(TrainingView(view_id=view_id, intrinsics=intrinsics,
                                  pose=pose, image=image))
    return SyntheticBundle(scene=scene, views=tuple(views), recipe=rec, seed=seed)


def write_fixture(bundle: SyntheticBundle, directory,
                  image_format: str = "pfm") -> tuple[str, str]:
    """Write scene.ply and cameras.txt (plus images) for a bundle."""
    os.makedirs(directory, exist_ok=True)
    scene_path = os.path.join(directory, "scene.ply")
    cameras_path = os.path.join(directory, "cameras.txt")
    save_scene_ply(bundle.scene, scene_path)
    save_cameras(bundle.views, cameras_path, image_format=image_format)
    return scene_path, cameras_path
