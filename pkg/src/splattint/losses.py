"""Photometric loss and its hand-derived image gradient.

    total = (1 - lam) * L1 + lam * (1 - SSIM)

L1 is the mean absolute difference over all pixel-channels.  SSIM uses an
11x11 gaussian window (sigma 1.5, C1 = 0.01^2, C2 = 0.03^2), computed per
channel and averaged.  At image borders the truncated window is renormalized:
every windowed moment is a zero-padded correlation divided by the in-image
kernel mass, so a constant image scores exactly 1 everywhere.

Gradients are derived by hand (no autodiff).  The SSIM derivative
backpropagates through the windowed moments; because the gaussian kernel is
symmetric, the transpose of "correlate then divide by mass" is "divide by
mass then correlate", which keeps the gradient a handful of filter passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ValidationError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
DEFAULT_LAMBDA = 0.2


@dataclass(frozen=True)
class LossBreakdown:
    l1: float
    ssim: float
    total: float
    lam: float


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """1D gaussian kernel, normalized to sum 1."""
    offsets = np.arange(size, dtype=np.float64) - size // 2
    kernel = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return kernel / kernel.sum()


def _filt(data: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable zero-padded correlation over the two leading axes."""
    out = correlate1d(data, kernel, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, kernel, axis=1, mode="constant", cval=0.0)


def _check_pair(image: np.ndarray, reference: np.ndarray, window: bool = False):
    image = np.asarray(image, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if image.shape != reference.shape:
        raise ValidationError(f"image shapes differ: {image.shape} vs {reference.shape}")
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError(f"expected (H, W, 3) images, got {image.shape}")
    if window and min(image.shape[0], image.shape[1]) < SSIM_WINDOW:
        raise ValidationError(
            f"images must be at least {SSIM_WINDOW}px on each side for SSIM"
        )
    return image, reference


def l1_loss(image: np.ndarray, reference: np.ndarray) -> float:
    image, reference = _check_pair(image, reference)
    return float(np.mean(np.abs(image - reference)))


def _ssim_terms(image, reference, kernel):
    mass = _filt(np.ones(image.shape[:2]), kernel)[..., None]
    mu1 = _filt(image, kernel) / mass
    mu2 = _filt(reference, kernel) / mass
    var1 = _filt(image * image, kernel) / mass - mu1 * mu1
    var2 = _filt(reference * reference, kernel) / mass - mu2 * mu2
    cov = _filt(image * reference, kernel) / mass - mu1 * mu2
    a1 = 2.0 * mu1 * mu2 + SSIM_C1
    a2 = 2.0 * cov + SSIM_C2
    b1 = mu1 * mu1 + mu2 * mu2 + SSIM_C1
    b2 = var1 + var2 + SSIM_C2
    return mass, mu1, mu2, a1, a2, b1, b2


def ssim(image: np.ndarray, reference: np.ndarray) -> float:
    """Mean SSIM over pixels and channels, in [-1, 1] (1 iff images are equal)."""
    image, reference = _check_pair(image, reference, window=True)
    kernel = gaussian_window()
    _, _, _, a1, a2, b1, b2 = _ssim_terms(image, reference, kernel)
    return float(np.mean((a1 * a2) / (b1 * b2)))


def photometric_loss(image: np.ndarray, reference: np.ndarray,
                     lam: float = DEFAULT_LAMBDA) -> LossBreakdown:
    if not (0.0 <= lam <= 1.0):
        raise ValidationError("lam must be in [0, 1]")
    l1 = l1_loss(image, reference)
    s = ssim(image, reference)
    return LossBreakdown(l1=l1, ssim=s, total=(1.0 - lam) * l1 + lam * (1.0 - s), lam=lam)


def _ssim_grad(image, reference, kernel):
    """d mean-SSIM / d image, all passes zero-padded correlations."""
    mass, mu1, mu2, a1, a2, b1, b2 = _ssim_terms(image, reference, kernel)
    d_mu1 = 2.0 * (mu2 * a2) / (b1 * b2) - 2.0 * mu1 * a1 * a2 / (b1 * b1 * b2)
    d_var1 = -(a1 * a2) / (b1 * b2 * b2)
    d_cov = 2.0 * a1 / (b1 * b2)
    grad = _filt(d_mu1 / mass, kernel) \
        + 2.0 * image * _filt(d_var1 / mass, kernel) \
        - 2.0 * _filt(d_var1 * mu1 / mass, kernel) \
        + reference * _filt(d_cov / mass, kernel) \
        - _filt(d_cov * mu2 / mass, kernel)
    return grad / image.size


def loss_grad_wrt_image(image: np.ndarray, reference: np.ndarray,
                        lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """d total / d image, shape (H, W, 3).

    (1 - lam)/N * sign(image - reference) - lam * d(mean SSIM)/d image.
    """
    if not (0.0 <= lam <= 1.0):
        raise ValidationError("lam must be in [0, 1]")
    image, reference = _check_pair(image, reference, window=lam > 0.0)
    if np.array_equal(image, reference):
        # At the optimum the true gradient is zero; the SSIM formula would
        # leave ~1e-18 roundoff residue that optimizers then amplify.
        return np.zeros_like(image)
    grad = (1.0 - lam) * np.sign(image - reference) / image.size
    if lam > 0.0:
        grad = grad - lam * _ssim_grad(image, reference, gaussian_window())
    return grad
