"""Stereo depth from re-rendered baselines.

The scene itself supplies the second eye: the camera is shifted by a baseline
along its own +x (horizontal pair) or +y (vertical pair) axis and the scene is
re-rendered, which yields a perfectly rectified pair.  Classical zero-mean
normalized cross-correlation block matching recovers disparity, and

    depth = focal * baseline / disparity

converts it.  Horizontal and vertical estimates are fused by pointwise
minimum; remaining holes can be backfilled from the gaussian depth heuristic.

Matching details: (2w+1)^2 windows (w = 5), integer search 0..max_disparity
with ties broken toward the smaller disparity, windows whose variance falls
below the floor are invalid, parabolic sub-pixel refinement around the best
integer score, and a left-right consistency check with a 1 px tolerance.
Invalid disparities are -1; invalid depths are +inf.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ValidationError
from .render import DEFAULT_CONFIG, DEFAULT_DEPTH_TAU, RasterizerConfig, depth_from_gaussians, render
from .scene import CameraIntrinsics, CameraPose, Scene, scene_radius

INVALID_DISPARITY = -1.0


@dataclass(frozen=True)
class StereoConfig:
    baseline: float | None = None  # None: 2% of the scene bounding-sphere radius
    max_disparity: int = 64
    window_radius: int = 5
    variance_floor: float = 1e-6
    lr_tolerance: float = 1.0
    min_disparity: float = 1e-3


DEFAULT_STEREO = StereoConfig()


@dataclass(frozen=True)
class StereoPair:
    """A rectified pair; fx is the focal length along the baseline axis."""

    left: np.ndarray  # (H, W, 3)
    right: np.ndarray  # (H, W, 3)
    baseline: float
    fx: float


def default_baseline(scene: Scene) -> float:
    return 0.02 * scene_radius(scene)


def render_stereo_pair(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                       baseline: float, direction: str = "horizontal",
                       config: RasterizerConfig = DEFAULT_CONFIG) -> StereoPair:
    """Render the view and a second eye shifted by `baseline` in view space."""
    if baseline <= 0:
        raise ValidationError("baseline must be positive")
    if direction == "horizontal":
        axis, focal = 0, intrinsics.fx
    elif direction == "vertical":
        axis, focal = 1, intrinsics.fy
    else:
        raise ValidationError(f"unknown stereo direction {direction!r}")
    shift = np.zeros(3)
    shift[axis] = baseline
    right_pose = CameraPose(pose.rotation, pose.translation - shift)
    return StereoPair(
        left=render(scene, intrinsics, pose, config=config),
        right=render(scene, intrinsics, right_pose, config=config),
        baseline=baseline,
        fx=focal,
    )


def _gray(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        return image.mean(axis=2)
    if image.ndim == 2:
        return image
    raise ValidationError(f"expected (H, W) or (H, W, 3) image, got {image.shape}")


def _box(data: np.ndarray, radius: int) -> np.ndarray:
    return uniform_filter(data, size=2 * radius + 1, mode="nearest")


def _zncc_scores(left: np.ndarray, right: np.ndarray, config: StereoConfig) -> np.ndarray:
    """Stacked ZNCC scores, shape (max_disparity + 1, H, W); invalid entries -2."""
    radius = config.window_radius
    height, width = left.shape
    mu_l = _box(left, radius)
    var_l = _box(left * left, radius) - mu_l * mu_l
    ok_l = var_l >= config.variance_floor
    cols = np.arange(width)
    scores = np.full((config.max_disparity + 1, height, width), -2.0)
    for d in range(config.max_disparity + 1):
        if d >= width:
            break  # no column can see that far; rows stay invalid
        shifted = np.empty_like(right)
        shifted[:, d:] = right[:, :width - d]
        shifted[:, :d] = right[:, :1]
        mu_r = _box(shifted, radius)
        var_r = _box(shifted * shifted, radius) - mu_r * mu_r
        cov = _box(left * shifted, radius) - mu_l * mu_r
        ok = ok_l & (var_r >= config.variance_floor) & (cols >= d)
        denom = np.sqrt(np.maximum(var_l * var_r, config.variance_floor ** 2))
        scores[d] = np.where(ok, cov / denom, -2.0)
    return scores


def _best_with_subpixel(scores: np.ndarray) -> np.ndarray:
    """Disparity from a score stack: argmax plus parabolic refinement."""
    best = np.argmax(scores, axis=0)  # ties -> smallest disparity
    h, w = best.shape
    rows, cols = np.indices((h, w))
    s0 = scores[best, rows, cols]
    disp = best.astype(np.float64)
    disp[s0 <= -2.0] = INVALID_DISPARITY

    lo = np.maximum(best - 1, 0)
    hi = np.minimum(best + 1, scores.shape[0] - 1)
    sm = scores[lo, rows, cols]
    sp = scores[hi, rows, cols]
    refinable = (best > 0) & (best < scores.shape[0] - 1) & (sm > -2.0) & (sp > -2.0) \
        & (s0 > -2.0)
    denom = sm + sp - 2.0 * s0
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = 0.5 * (sm - sp) / denom
    usable = refinable & (denom < -1e-12)
    disp = np.where(usable, best + np.clip(delta, -0.5, 0.5), disp)
    return disp


def match_disparity(left: np.ndarray, right: np.ndarray,
                    config: StereoConfig = DEFAULT_STEREO) -> np.ndarray:
    """ZNCC block matching; (H, W) float disparity with -1 for invalid pixels."""
    gl, gr = _gray(left), _gray(right)
    if gl.shape != gr.shape:
        raise ValidationError(f"stereo pair shapes differ: {gl.shape} vs {gr.shape}")
    disp_l = _best_with_subpixel(_zncc_scores(gl, gr, config))
    # Right-image disparity (candidates shift the other way) for the LR check:
    # matching mirrored images reuses the same search direction.
    disp_r = _best_with_subpixel(_zncc_scores(gr[:, ::-1], gl[:, ::-1], config))[:, ::-1]

    height, width = gl.shape
    cols = np.arange(width)[None, :]
    valid = disp_l >= 0.0
    partner = np.rint(cols - disp_l).astype(np.int64)
    partner_ok = valid & (partner >= 0) & (partner < width)
    rows = np.arange(height)[:, None].repeat(width, axis=1)
    partner_disp = np.full_like(disp_l, INVALID_DISPARITY)
    partner_disp[partner_ok] = disp_r[rows[partner_ok], partner[partner_ok]]
    consistent = partner_ok & (partner_disp >= 0.0) \
        & (np.abs(disp_l - partner_disp) <= config.lr_tolerance)
    return np.where(consistent, disp_l, INVALID_DISPARITY)


def disparity_to_depth(disparity: np.ndarray, fx: float, baseline: float,
                       min_disparity: float = DEFAULT_STEREO.min_disparity) -> np.ndarray:
    """depth = fx * baseline / disparity; invalid or tiny disparities give +inf."""
    disparity = np.asarray(disparity, dtype=np.float64)
    usable = disparity > min_disparity
    out = np.full(disparity.shape, np.inf)
    out[usable] = fx * baseline / disparity[usable]
    return out


def aggregate_hv(depth_h: np.ndarray, depth_v: np.ndarray) -> np.ndarray:
    """Pointwise minimum of the two estimates (+inf passes through)."""
    depth_h = np.asarray(depth_h, dtype=np.float64)
    depth_v = np.asarray(depth_v, dtype=np.float64)
    if depth_h.shape != depth_v.shape:
        raise ValidationError(f"depth shapes differ: {depth_h.shape} vs {depth_v.shape}")
    return np.minimum(depth_h, depth_v)


def stereo_hv_depth(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                    config: StereoConfig = DEFAULT_STEREO,
                    raster: RasterizerConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Fused horizontal + vertical stereo depth, holes left as +inf."""
    baseline = config.baseline if config.baseline is not None else default_baseline(scene)
    pair_h = render_stereo_pair(scene, intrinsics, pose, baseline, "horizontal", raster)
    disp_h = match_disparity(pair_h.left, pair_h.right, config)
    depth_h = disparity_to_depth(disp_h, pair_h.fx, baseline, config.min_disparity)

    pair_v = render_stereo_pair(scene, intrinsics, pose, baseline, "vertical", raster)
    # Vertical disparities become horizontal ones on transposed images.
    disp_v = match_disparity(np.swapaxes(pair_v.left, 0, 1),
                             np.swapaxes(pair_v.right, 0, 1), config).T
    depth_v = disparity_to_depth(disp_v, pair_v.fx, baseline, config.min_disparity)
    return aggregate_hv(depth_h, depth_v)


def estimate_depth(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                   method: str = "stereo-hv", tau: float = DEFAULT_DEPTH_TAU,
                   config: StereoConfig = DEFAULT_STEREO,
                   raster: RasterizerConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Depth map by method: "gaussians" (transmittance heuristic) or "stereo-hv"
    (fused stereo with gaussian backfill for holes)."""
    if method == "gaussians":
        return depth_from_gaussians(scene, intrinsics, pose, tau, raster)
    if method == "stereo-hv":
        fused = stereo_hv_depth(scene, intrinsics, pose, config, raster)
        holes = ~np.isfinite(fused)
        if holes.any():
            fallback = depth_from_gaussians(scene, intrinsics, pose, tau, raster)
            fused = np.where(holes, fallback, fused)
        return fused
    raise ValidationError(f"unknown depth method {method!r}")
