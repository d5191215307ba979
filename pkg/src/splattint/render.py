"""CPU reference rasterizer for gaussian-splat scenes.

Forward model, per pixel with gaussians sorted by ascending view-space depth:

    y = sum_i c_i * alpha_i * T_i,   T_1 = 1,  T_{i+1} = T_i * (1 - alpha_i)

with alpha_i = min(0.99, sigma_i * exp(-0.5 d^T conic d)).  Gaussians with
alpha below 1/255 are skipped; traversal stops before compositing a gaussian
that would push T below 1e-4; leftover transmittance multiplies the background.

Projection follows the EWA splatting approximation: the 3D covariance
R S S^T R^T is pushed through the pose rotation W and the perspective Jacobian
J at the mean, then dilated:  cov2d = J W Sigma W^T J^T + 0.3 I.

View-dependent color comes from a degree-3 real spherical-harmonics expansion
evaluated along normalize(mu - camera_center) and activated channelwise as
max(0, raw + 0.5).  The forward pass can record per-pixel contribution lists
(gaussian, alpha*T) so the spherical-harmonics backward pass is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scene import CameraIntrinsics, CameraPose, Gaussian, Scene, quaternion_to_rotation

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
SH_C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)

# Entries per composite block are capped to bound peak memory of the
# vectorized compositing path.
_BLOCK_ENTRIES = 1 << 20


@dataclass(frozen=True)
class RasterizerConfig:
    """Named rasterizer constants."""

    near_clip: float = 0.2
    alpha_clamp: float = 0.99
    alpha_skip: float = 1.0 / 255.0
    transmittance_floor: float = 1e-4
    covariance_dilation: float = 0.3
    footprint_sigmas: float = 3.0


DEFAULT_CONFIG = RasterizerConfig()
DEFAULT_DEPTH_TAU = 0.5


@dataclass(frozen=True)
class ProjectedGaussian:
    """Screen-space footprint of one gaussian."""

    mean2d: np.ndarray  # (2,) pixel coordinates
    conic: np.ndarray  # (2, 2) inverse of the dilated 2D covariance
    depth: float  # view-space z
    color: np.ndarray  # (3,) activated SH color
    base_alpha: float  # opacity multiplier sigma_i


@dataclass(frozen=True)
class ForwardCapture:
    """Forward render plus everything the SH backward pass needs."""

    image: np.ndarray  # (H, W, 3)
    n_gaussians: int
    kept_index: np.ndarray  # (K,) scene indices of non-culled gaussians
    basis: np.ndarray  # (K, 16) SH basis values along each view direction
    active: np.ndarray  # (K, 3) channel activation indicator (raw + 0.5 > 0)
    contrib_pixel: np.ndarray  # (C,) flat pixel index (v * width + u)
    contrib_kept: np.ndarray  # (C,) index into kept arrays
    contrib_weight: np.ndarray  # (C,) alpha * T at composite time


def compute_covariance(rotation: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """3D covariance R S S^T R^T from unit quaternion(s) and per-axis scales."""
    rot = quaternion_to_rotation(rotation)
    scale = np.asarray(scale, dtype=np.float64)
    m = rot * scale[..., None, :]
    return m @ np.swapaxes(m, -1, -2)


def sh_basis(directions: np.ndarray, degree: int) -> np.ndarray:
    """Real SH basis values for unit direction(s); entries beyond `degree` are 0.

    Returns shape (..., 16).
    """
    if not (0 <= degree <= 3):
        raise ValidationError("sh degree must be in [0, 3]")
    d = np.asarray(directions, dtype=np.float64)
    out = np.zeros(d.shape[:-1] + (16,))
    out[..., 0] = SH_C0
    if degree < 1:
        return out
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    out[..., 1] = -SH_C1 * y
    out[..., 2] = SH_C1 * z
    out[..., 3] = -SH_C1 * x
    if degree < 2:
        return out
    xx, yy, zz = x * x, y * y, z * z
    xy, yz, xz = x * y, y * z, x * z
    out[..., 4] = SH_C2[0] * xy
    out[..., 5] = SH_C2[1] * yz
    out[..., 6] = SH_C2[2] * (2.0 * zz - xx - yy)
    out[..., 7] = SH_C2[3] * xz
    out[..., 8] = SH_C2[4] * (xx - yy)
    if degree < 3:
        return out
    out[..., 9] = SH_C3[0] * y * (3.0 * xx - yy)
    out[..., 10] = SH_C3[1] * xy * z
    out[..., 11] = SH_C3[2] * y * (4.0 * zz - xx - yy)
    out[..., 12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    out[..., 13] = SH_C3[4] * x * (4.0 * zz - xx - yy)
    out[..., 14] = SH_C3[5] * z * (xx - yy)
    out[..., 15] = SH_C3[6] * x * (xx - 3.0 * yy)
    return out


def eval_sh(coeffs: np.ndarray, direction: np.ndarray, degree: int = 3) -> np.ndarray:
    """Raw (pre-activation) RGB from SH coefficients (..., 16, 3) along direction(s)."""
    basis = sh_basis(direction, degree)
    return np.einsum("...k,...kc->...c", basis, np.asarray(coeffs, dtype=np.float64))


def color_activation(raw: np.ndarray) -> np.ndarray:
    """Channelwise max(0, raw + 0.5)."""
    return np.maximum(0.0, np.asarray(raw, dtype=np.float64) + 0.5)


class _Projection:
    """Depth-sorted screen-space arrays for the non-culled gaussians."""

    __slots__ = ("index", "mean2d", "conic_a", "conic_b", "conic_c", "depth",
                 "color", "base_alpha", "active", "basis", "count")

    def __init__(self, index, mean2d, conic_a, conic_b, conic_c, depth, color,
                 base_alpha, active, basis):
        self.index = index
        self.mean2d = mean2d
        self.conic_a = conic_a
        self.conic_b = conic_b
        self.conic_c = conic_c
        self.depth = depth
        self.color = color
        self.base_alpha = base_alpha
        self.active = active
        self.basis = basis
        self.count = len(index)


def _project_scene(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                   config: RasterizerConfig = DEFAULT_CONFIG) -> _Projection:
    rot, tr = pose.rotation, pose.translation
    view = scene.positions @ rot.T + tr
    keep = view[:, 2] > config.near_clip

    idx = np.nonzero(keep)[0]
    view = view[idx]
    x, y, z = view[:, 0], view[:, 1], view[:, 2]
    fx, fy = intrinsics.fx, intrinsics.fy
    mean2d = np.stack([fx * x / z + intrinsics.cx, fy * y / z + intrinsics.cy], axis=1)

    cov3d = compute_covariance(scene.rotations[idx], scene.scales[idx])
    k = len(idx)
    jac = np.zeros((k, 2, 3))
    jac[:, 0, 0] = fx / z
    jac[:, 0, 2] = -fx * x / (z * z)
    jac[:, 1, 1] = fy / z
    jac[:, 1, 2] = -fy * y / (z * z)
    t = jac @ rot
    cov2d = np.einsum("nij,njk,nlk->nil", t, cov3d, t)
    cov2d[:, 0, 0] += config.covariance_dilation
    cov2d[:, 1, 1] += config.covariance_dilation

    a, b, c = cov2d[:, 0, 0], cov2d[:, 0, 1], cov2d[:, 1, 1]
    det = a * c - b * b
    mid = 0.5 * (a + c)
    lam_max = mid + np.sqrt(np.maximum(mid * mid - det, 0.0))
    radius = config.footprint_sigmas * np.sqrt(lam_max)

    w1, h1 = intrinsics.width - 1, intrinsics.height - 1
    visible = (det > 0) \
        & (mean2d[:, 0] + radius >= 0) & (mean2d[:, 0] - radius <= w1) \
        & (mean2d[:, 1] + radius >= 0) & (mean2d[:, 1] - radius <= h1)
    idx, mean2d, z = idx[visible], mean2d[visible], z[visible]
    a, b, c, det = a[visible], b[visible], c[visible], det[visible]

    direction = scene.positions[idx] - pose.camera_center
    direction = direction / np.linalg.norm(direction, axis=1, keepdims=True)
    basis = sh_basis(direction, scene.sh_degree)
    raw = np.einsum("nk,nkc->nc", basis, scene.sh[idx])
    active = (raw + 0.5) > 0.0
    color = np.maximum(0.0, raw + 0.5)

    order = np.argsort(z, kind="stable")  # ties resolved by ascending scene index
    idx = idx[order]
    return _Projection(
        index=idx,
        mean2d=mean2d[order],
        conic_a=(c / det)[order],
        conic_b=(-b / det)[order],
        conic_c=(a / det)[order],
        depth=z[order],
        color=color[order],
        base_alpha=scene.opacities[idx],
        active=active[order],
        basis=basis[order],
    )


def project_gaussian(gaussian: Gaussian, intrinsics: CameraIntrinsics,
                     pose: CameraPose,
                     config: RasterizerConfig = DEFAULT_CONFIG) -> ProjectedGaussian | None:
    """Project a single gaussian; returns None when culled."""
    scene = Scene(
        positions=gaussian.position[None],
        rotations=gaussian.rotation[None],
        scales=gaussian.scale[None],
        opacities=np.array([gaussian.opacity]),
        sh=gaussian.sh[None],
    )
    proj = _project_scene(scene, intrinsics, pose, config)
    if proj.count == 0:
        return None
    conic = np.array([[proj.conic_a[0], proj.conic_b[0]],
                      [proj.conic_b[0], proj.conic_c[0]]])
    return ProjectedGaussian(
        mean2d=proj.mean2d[0],
        conic=conic,
        depth=float(proj.depth[0]),
        color=proj.color[0],
        base_alpha=float(proj.base_alpha[0]),
    )


def _row_blocks(height: int, width: int, count: int):
    rows = max(1, min(height, _BLOCK_ENTRIES // max(1, width * count)))
    for start in range(0, height, rows):
        yield start, min(start + rows, height)


def _block_alpha(proj: _Projection, xs, ys, config: RasterizerConfig):
    """alpha (B, W, K) for a block of rows, skip threshold already applied."""
    dx = xs[:, None] - proj.mean2d[None, :, 0]  # (W, K)
    dy = ys[:, None] - proj.mean2d[None, :, 1]  # (B, K)
    power = -(0.5 * proj.conic_a * dx * dx)[None, :, :] \
        - (0.5 * proj.conic_c * dy * dy)[:, None, :] \
        - proj.conic_b * dx[None, :, :] * dy[:, None, :]
    alpha = np.minimum(config.alpha_clamp, proj.base_alpha * np.exp(power))
    alpha[alpha < config.alpha_skip] = 0.0
    return alpha


def _block_weights(alpha, config: RasterizerConfig):
    """Composite weights alpha*T, the surviving transmittance, and the stop index."""
    k = alpha.shape[-1]
    t_inc = np.cumprod(1.0 - alpha, axis=-1)
    t_exc = np.empty_like(t_inc)
    t_exc[..., 0] = 1.0
    t_exc[..., 1:] = t_inc[..., :-1]
    below = t_inc < config.transmittance_floor
    any_below = below.any(axis=-1)
    first = np.where(any_below, np.argmax(below, axis=-1), k)
    alive = np.arange(k)[None, None, :] < first[..., None]
    weights = alpha * t_exc * alive
    t_final = np.where(
        any_below,
        np.take_along_axis(t_exc, np.minimum(first, k - 1)[..., None], axis=-1)[..., 0],
        t_inc[..., -1],
    )
    return weights, t_final, first


def _background(background) -> np.ndarray:
    if background is None:
        return np.zeros(3)
    bg = np.asarray(background, dtype=np.float64)
    if bg.shape != (3,):
        raise ValidationError(f"background must be 3 floats, got shape {bg.shape}")
    return bg


def render(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
           background=None, config: RasterizerConfig = DEFAULT_CONFIG,
           layout: str = "hwc") -> np.ndarray:
    """Render the scene; returns (H, W, 3) float64, or (3, H, W) for layout="chw"."""
    if layout not in ("hwc", "chw"):
        raise ValidationError(f"unknown layout {layout!r}")
    width, height = intrinsics.width, intrinsics.height
    bg = _background(background)
    proj = _project_scene(scene, intrinsics, pose, config)
    if layout == "hwc":
        out = np.empty((height, width, 3))
    else:
        out = np.empty((3, height, width))
    if proj.count == 0:
        if layout == "hwc":
            out[:] = bg
        else:
            out[:] = bg[:, None, None]
        return out
    xs = np.arange(width, dtype=np.float64)
    for y0, y1 in _row_blocks(height, width, proj.count):
        ys = np.arange(y0, y1, dtype=np.float64)
        alpha = _block_alpha(proj, xs, ys, config)
        weights, t_final, _ = _block_weights(alpha, config)
        if layout == "hwc":
            out[y0:y1] = np.einsum("bwk,kc->bwc", weights, proj.color) \
                + t_final[..., None] * bg
        else:
            out[:, y0:y1, :] = np.einsum("bwk,kc->cbw", weights, proj.color) \
                + t_final[None] * bg[:, None, None]
    return out


def render_forward(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                   background=None,
                   config: RasterizerConfig = DEFAULT_CONFIG) -> ForwardCapture:
    """Render and record per-pixel contribution lists for the backward pass."""
    width, height = intrinsics.width, intrinsics.height
    bg = _background(background)
    proj = _project_scene(scene, intrinsics, pose, config)
    image = np.empty((height, width, 3))
    pixels, kept, weights_out = [], [], []
    if proj.count == 0:
        image[:] = bg
    else:
        xs = np.arange(width, dtype=np.float64)
        for y0, y1 in _row_blocks(height, width, proj.count):
            ys = np.arange(y0, y1, dtype=np.float64)
            alpha = _block_alpha(proj, xs, ys, config)
            weights, t_final, _ = _block_weights(alpha, config)
            image[y0:y1] = np.einsum("bwk,kc->bwc", weights, proj.color) \
                + t_final[..., None] * bg
            bi, wi, ki = np.nonzero(weights)
            pixels.append(((y0 + bi) * width + wi).astype(np.int64))
            kept.append(ki.astype(np.int64))
            weights_out.append(weights[bi, wi, ki])
    cat = (lambda parts, dtype: np.concatenate(parts) if parts else np.empty(0, dtype=dtype))
    return ForwardCapture(
        image=image,
        n_gaussians=len(scene),
        kept_index=proj.index,
        basis=proj.basis,
        active=proj.active,
        contrib_pixel=cat(pixels, np.int64),
        contrib_kept=cat(kept, np.int64),
        contrib_weight=cat(weights_out, np.float64),
    )


def depth_from_gaussians(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                         tau: float = DEFAULT_DEPTH_TAU,
                         config: RasterizerConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Per-pixel view-space depth of the first gaussian that drops T below tau.

    Pixels where transmittance never crosses tau get +inf.
    """
    width, height = intrinsics.width, intrinsics.height
    proj = _project_scene(scene, intrinsics, pose, config)
    out = np.full((height, width), np.inf)
    if proj.count == 0:
        return out
    xs = np.arange(width, dtype=np.float64)
    for y0, y1 in _row_blocks(height, width, proj.count):
        ys = np.arange(y0, y1, dtype=np.float64)
        alpha = _block_alpha(proj, xs, ys, config)
        t_inc = np.cumprod(1.0 - alpha, axis=-1)
        # tau crossings only count at composited gaussians (skipped ones keep T).
        crossed = (t_inc < tau) & (alpha > 0.0)
        has = crossed.any(axis=-1)
        idx = np.argmax(crossed, axis=-1)
        below = t_inc < config.transmittance_floor
        stop = np.where(below.any(axis=-1), np.argmax(below, axis=-1), proj.count)
        valid = has & (idx <= stop)
        out[y0:y1] = np.where(valid, proj.depth[idx], np.inf)
    return out


def to_chw(image: np.ndarray) -> np.ndarray:
    """(H, W, 3) interleaved -> (3, H, W) planar, contiguous."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError(f"to_chw expects (H, W, 3), got {image.shape}")
    return np.ascontiguousarray(np.transpose(image, (2, 0, 1)))


def from_chw(planes: np.ndarray) -> np.ndarray:
    """(3, H, W) planar -> (H, W, 3) interleaved, contiguous."""
    planes = np.asarray(planes)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValidationError(f"from_chw expects (3, H, W), got {planes.shape}")
    return np.ascontiguousarray(np.transpose(planes, (1, 2, 0)))
