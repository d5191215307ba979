"""Lifting 2D mask strokes into a reusable 3D selection.

A selection starts as painted pixels on one frozen view.  Masked pixels with
finite depth are subsampled uniformly at random (seeded), unprojected through
the pinhole model into world points, and cleaned with a statistical outlier
filter (mean distance to the k nearest neighbors, threshold mean + scale*std).
The cloud then projects into any other view as small quads, depth-tested
against that view's occlusion depth with a relative tolerance, which makes the
selection follow the geometry across viewpoints.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .scene import CameraIntrinsics, CameraPose

DEFAULT_SAMPLE_FRACTION = 0.7
DEFAULT_KNN = 16
DEFAULT_STD_SCALE = 0.007
DEFAULT_QUAD_SIZE = 5
DEFAULT_DEPTH_TOLERANCE = 0.02

BRUSH = "brush"
RUBBER = "rubber"


@dataclass(frozen=True)
class SelectionMask2D:
    """Painted pixels on one frozen camera."""

    bits: np.ndarray  # (H, W) bool
    intrinsics: CameraIntrinsics
    pose: CameraPose

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        expected = (self.intrinsics.height, self.intrinsics.width)
        if bits.shape != expected:
            raise ValidationError(f"mask shape {bits.shape}, camera expects {expected}")
        object.__setattr__(self, "bits", bits)

    @property
    def count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class SelectionCloud:
    """World-space points lifted from one source view."""

    points: np.ndarray  # (M, 3)
    intrinsics: CameraIntrinsics | None = None
    pose: CameraPose | None = None
    rng_seed: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def is_empty(self) -> bool:
        return len(self) == 0


def empty_cloud() -> SelectionCloud:
    return SelectionCloud(points=np.empty((0, 3)))


def new_mask(intrinsics: CameraIntrinsics, pose: CameraPose) -> SelectionMask2D:
    bits = np.zeros((intrinsics.height, intrinsics.width), dtype=bool)
    return SelectionMask2D(bits=bits, intrinsics=intrinsics, pose=pose)


def apply_stroke(mask: SelectionMask2D, tool: str, path, radius: float) -> SelectionMask2D:
    """Stamp discs of `radius` along the polyline `path` ([[u, v], ...]).

    brush sets bits, rubber clears them; pixels within Euclidean distance
    `radius` of any path segment are affected.
    """
    if tool not in (BRUSH, RUBBER):
        raise ValidationError(f"unknown stroke tool {tool!r}")
    path = np.asarray(path, dtype=np.float64).reshape(-1, 2)
    if path.shape[0] == 0:
        raise ValidationError("stroke path is empty")
    if radius < 0 or not np.isfinite(radius):
        raise ValidationError("stroke radius must be finite and >= 0")
    if not np.all(np.isfinite(path)):
        raise ValidationError("stroke path has non-finite coordinates")
    height, width = mask.bits.shape
    bits = mask.bits.copy()
    value = tool == BRUSH
    segments = [(path[i], path[i + 1]) for i in range(len(path) - 1)] or [(path[0], path[0])]
    for start, end in segments:
        u0 = max(0, int(np.floor(min(start[0], end[0]) - radius)))
        u1 = min(width - 1, int(np.ceil(max(start[0], end[0]) + radius)))
        v0 = max(0, int(np.floor(min(start[1], end[1]) - radius)))
        v1 = min(height - 1, int(np.ceil(max(start[1], end[1]) + radius)))
        if u0 > u1 or v0 > v1:
            continue
        us = np.arange(u0, u1 + 1, dtype=np.float64)
        vs = np.arange(v0, v1 + 1, dtype=np.float64)
        du = us[None, :] - start[0]
        dv = vs[:, None] - start[1]
        seg = end - start
        seg_len2 = seg @ seg
        if seg_len2 < 1e-18:
            dist2 = du * du + dv * dv
        else:
            t = np.clip((du * seg[0] + dv * seg[1]) / seg_len2, 0.0, 1.0)
            dist2 = (du - t * seg[0]) ** 2 + (dv - t * seg[1]) ** 2
        hit = dist2 <= radius * radius
        bits[v0:v1 + 1, u0:u1 + 1][hit] = value
    return replace(mask, bits=bits)


def unproject(mask: SelectionMask2D, depth: np.ndarray,
              fraction: float = DEFAULT_SAMPLE_FRACTION, seed: int = 0) -> SelectionCloud:
    """Lift masked finite-depth pixels into world points.

    A seeded uniform subset of round(fraction * count) pixels is kept.  An
    empty result is a valid signal, not an error.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ValidationError("sample fraction must be in [0, 1]")
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != mask.bits.shape:
        raise ValidationError(f"depth shape {depth.shape} does not match mask {mask.bits.shape}")
    vs, us = np.nonzero(mask.bits & np.isfinite(depth) & (depth > 0))
    total = len(us)
    keep = int(round(fraction * total))
    if keep == 0:
        return SelectionCloud(np.empty((0, 3)), mask.intrinsics, mask.pose, seed)
    order = np.random.default_rng(seed).permutation(total)[:keep]
    us, vs = us[order], vs[order]
    d = depth[vs, us]
    intr = mask.intrinsics
    cam = np.stack([
        d * (us - intr.cx) / intr.fx,
        d * (vs - intr.cy) / intr.fy,
        d,
    ], axis=1)
    world = (cam - mask.pose.translation) @ mask.pose.rotation
    return SelectionCloud(world, mask.intrinsics, mask.pose, seed)


def knn_mean_distances(points: np.ndarray, k: int) -> np.ndarray:
    """Mean distance from each point to its k nearest neighbors (self excluded)."""
    tree = cKDTree(points)
    dists, _ = tree.query(points, k=k + 1)
    return dists[:, 1:].mean(axis=1)


def remove_outliers(cloud: SelectionCloud, k: int = DEFAULT_KNN,
                    std_scale: float = DEFAULT_STD_SCALE) -> SelectionCloud:
    """Keep points whose mean k-NN distance is <= mean + std_scale * std.

    Clouds with at most k points are returned unchanged with a warning.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    m = len(cloud)
    if m == 0:
        return cloud
    if m <= k:
        warnings.warn(
            f"outlier filter skipped: cloud has {m} points, need more than k={k}",
            stacklevel=2,
        )
        return cloud
    means = knn_mean_distances(cloud.points, k)
    threshold = means.mean() + std_scale * means.std()
    return replace(cloud, points=cloud.points[means <= threshold])


def _project_points(points: np.ndarray, intrinsics: CameraIntrinsics, pose: CameraPose,
                    occlusion_depth: np.ndarray, depth_tolerance: float):
    """Per-point nearest pixel and visibility under the occlusion depth test."""
    occlusion_depth = np.asarray(occlusion_depth, dtype=np.float64)
    expected = (intrinsics.height, intrinsics.width)
    if occlusion_depth.shape != expected:
        raise ValidationError(
            f"occlusion depth shape {occlusion_depth.shape}, camera expects {expected}"
        )
    cam = points @ pose.rotation.T + pose.translation
    z = cam[:, 2]
    front = z > 0
    pu = np.full(len(points), -1, dtype=np.int64)
    pv = np.full(len(points), -1, dtype=np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intrinsics.fx * cam[:, 0] / z + intrinsics.cx
        v = intrinsics.fy * cam[:, 1] / z + intrinsics.cy
    pu[front] = np.rint(u[front]).astype(np.int64)
    pv[front] = np.rint(v[front]).astype(np.int64)
    inside = front & (pu >= 0) & (pu < intrinsics.width) & (pv >= 0) & (pv < intrinsics.height)
    visible = inside.copy()
    visible[inside] = z[inside] <= occlusion_depth[pv[inside], pu[inside]] * (1.0 + depth_tolerance)
    return pu, pv, visible


def project_cloud(cloud: SelectionCloud, intrinsics: CameraIntrinsics, pose: CameraPose,
                  occlusion_depth: np.ndarray, quad_size: int = DEFAULT_QUAD_SIZE,
                  depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE) -> np.ndarray:
    """Stamp visible cloud points as quad_size x quad_size squares; (H, W) bool.

    A point is visible when its depth passes z <= occlusion * (1 + tolerance);
    occluded, behind-camera, and out-of-frame points stamp nothing.  Quads are
    clipped at image borders.
    """
    if quad_size < 1:
        raise ValidationError("quad_size must be >= 1")
    bits = np.zeros((intrinsics.height, intrinsics.width), dtype=bool)
    if cloud.is_empty:
        return bits
    pu, pv, visible = _project_points(cloud.points, intrinsics, pose,
                                      occlusion_depth, depth_tolerance)
    if not visible.any():
        return bits
    half = (quad_size - 1) // 2
    offsets = np.arange(quad_size) - half
    qu = (pu[visible][:, None] + offsets[None, :])[:, :, None]
    qv = (pv[visible][:, None] + offsets[None, :])[:, None, :]
    qu = np.broadcast_to(qu, (visible.sum(), quad_size, quad_size)).ravel()
    qv = np.broadcast_to(qv, (visible.sum(), quad_size, quad_size)).ravel()
    ok = (qu >= 0) & (qu < intrinsics.width) & (qv >= 0) & (qv < intrinsics.height)
    bits[qv[ok], qu[ok]] = True
    return bits


def reenter_selection(cloud: SelectionCloud, intrinsics: CameraIntrinsics,
                      pose: CameraPose, occlusion_depth: np.ndarray,
                      depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE) -> SelectionMask2D:
    """Seed an editable mask from an existing cloud (single-pixel stamps)."""
    bits = project_cloud(cloud, intrinsics, pose, occlusion_depth,
                         quad_size=1, depth_tolerance=depth_tolerance)
    return SelectionMask2D(bits=bits, intrinsics=intrinsics, pose=pose)


def commit_reentry(cloud: SelectionCloud, edited: SelectionMask2D,
                   reentry: SelectionMask2D, depth: np.ndarray,
                   fraction: float = DEFAULT_SAMPLE_FRACTION, seed: int = 0,
                   k: int = DEFAULT_KNN, std_scale: float = DEFAULT_STD_SCALE,
                   depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE) -> SelectionCloud:
    """Fold mask edits on a re-entered view back into the cloud.

    Points whose re-entry pixel was cleared are dropped; pixels painted beyond
    the re-entry mask unproject fresh points; the merged cloud passes the
    outlier filter again.
    """
    if edited.bits.shape != reentry.bits.shape:
        raise ValidationError("edited and re-entry masks have different shapes")
    cleared = reentry.bits & ~edited.bits
    added = edited.bits & ~reentry.bits
    pu, pv, visible = _project_points(cloud.points, edited.intrinsics, edited.pose,
                                      depth, depth_tolerance)
    drop = np.zeros(len(cloud), dtype=bool)
    drop[visible] = cleared[pv[visible], pu[visible]]
    kept = cloud.points[~drop]
    fresh = unproject(replace(edited, bits=added), depth, fraction, seed)
    merged = SelectionCloud(np.concatenate([kept, fresh.points]),
                            edited.intrinsics, edited.pose, seed)
    if merged.is_empty:
        return merged
    return remove_outliers(merged, k, std_scale)
