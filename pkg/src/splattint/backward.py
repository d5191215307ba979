"""Backward pass from an image gradient to spherical-harmonics coefficients.

Geometry is frozen: blend weights alpha_i * T_i recorded by the forward pass
are constants, so for gaussian i, coefficient k, channel ch

    dL/dC[i, k, ch] = Y_k(dir_i) * 1[raw_ch + 0.5 > 0]
                      * sum_pixels dL/dy[p, ch] * (alpha_i * T_i)(p)

where the activation indicator is the channel clamp state recorded during the
forward pass.  Culled gaussians and basis entries beyond the scene's SH degree
get exactly zero gradient.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .render import ForwardCapture


def backward_sh(capture: ForwardCapture, grad_image: np.ndarray) -> np.ndarray:
    """Accumulate dL/dSH, shape (N, 16, 3), from dL/dimage (H, W, 3)."""
    grad_image = np.asarray(grad_image, dtype=np.float64)
    expected = capture.image.shape
    if grad_image.shape != expected:
        raise ValidationError(
            f"gradient image shape {grad_image.shape} does not match render {expected}"
        )
    out = np.zeros((capture.n_gaussians, 16, 3))
    if capture.kept_index.size == 0 or capture.contrib_weight.size == 0:
        return out
    flat = grad_image.reshape(-1, 3)
    # Per-gaussian, per-channel sum of weighted pixel gradients.
    acc = np.zeros((len(capture.kept_index), 3))
    np.add.at(acc, capture.contrib_kept,
              flat[capture.contrib_pixel] * capture.contrib_weight[:, None])
    acc *= capture.active
    out[capture.kept_index] = capture.basis[:, :, None] * acc[:, None, :]
    return out
