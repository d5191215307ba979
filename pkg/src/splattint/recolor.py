"""Edited ground-truth datasets: the selection recolored across every view.

The edit model is a per-channel multiplicative tint on masked pixels,
clamped to [0, 1]; unmasked pixels are untouched.  A dataset is an immutable
snapshot stamped with a generation counter so a background optimizer can swap
to a rebuilt dataset atomically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .render import DEFAULT_CONFIG, DEFAULT_DEPTH_TAU, RasterizerConfig, depth_from_gaussians
from .scene import Scene, TrainingView
from .selection import DEFAULT_DEPTH_TOLERANCE, DEFAULT_QUAD_SIZE, SelectionCloud, project_cloud


def _check_tint(tint) -> np.ndarray:
    tint = np.asarray(tint, dtype=np.float64)
    if tint.shape != (3,):
        raise ValidationError(f"tint must be 3 components, got shape {tint.shape}")
    if not np.all(np.isfinite(tint)) or np.any(tint < 0):
        raise ValidationError("tint components must be finite and >= 0")
    return tint


def apply_recolor(image: np.ndarray, mask: np.ndarray, tint) -> np.ndarray:
    """Multiply masked pixels by the tint, clamped to [0, 1]."""
    tint = _check_tint(tint)
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != image.shape[:2]:
        raise ValidationError(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    out = image.copy()
    out[mask] = np.clip(image[mask] * tint, 0.0, 1.0)
    return out


@dataclass(frozen=True)
class EditedView:
    view: TrainingView
    mask: np.ndarray  # (H, W) bool, where the cloud stamps in this view
    image: np.ndarray  # (H, W, 3) recolored ground truth


@dataclass(frozen=True)
class EditedDataset:
    views: tuple[EditedView, ...]
    generation: int
    tint: np.ndarray  # (3,)

    def __len__(self) -> int:
        return len(self.views)


def build_edited_dataset(views, cloud: SelectionCloud, tint, scene: Scene,
                         generation: int = 0,
                         quad_size: int = DEFAULT_QUAD_SIZE,
                         depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE,
                         tau: float = DEFAULT_DEPTH_TAU,
                         raster: RasterizerConfig = DEFAULT_CONFIG) -> EditedDataset:
    """Project the cloud into every view and recolor the masked pixels.

    Occlusion testing uses each view's gaussian depth map.  An empty cloud
    yields masks of all False and images equal to the originals.
    """
    tint = _check_tint(tint)
    edited = []
    for view in views:
        if cloud.is_empty:
            mask = np.zeros((view.intrinsics.height, view.intrinsics.width), dtype=bool)
        else:
            occlusion = depth_from_gaussians(scene, view.intrinsics, view.pose, tau, raster)
            mask = project_cloud(cloud, view.intrinsics, view.pose, occlusion,
                                 quad_size, depth_tolerance)
        edited.append(EditedView(view=view, mask=mask,
                                 image=apply_recolor(view.image, mask, tint)))
    return EditedDataset(views=tuple(edited), generation=generation, tint=tint)
