"""Image file IO with pinned numeric conventions.

PNG: 8-bit RGB, linear value/255 mapping, no gamma transform.
PFM: float32 little-endian (negative scale), rows stored bottom-up; used for
depth and disparity maps (grayscale) and for lossless reference images (color).
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import FormatError

PFM_SCALE = -1.0  # negative: little-endian payload


def read_png(path) -> np.ndarray:
    """Load an 8-bit image as (H, W, 3) float64 in [0, 1] (value / 255)."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        data = np.asarray(rgb, dtype=np.float64)
    return data / 255.0


def write_png(path, image: np.ndarray) -> None:
    """Save an (H, W, 3) float image; values clipped to [0, 1], then round(v*255)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"write_png expects (H, W, 3), got {image.shape}")
    quantized = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


def write_pfm(path, data: np.ndarray) -> None:
    """Save (H, W) or (H, W, 3) float data as little-endian PFM, scale -1.0."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF"
    else:
        raise FormatError(f"write_pfm expects (H, W) or (H, W, 3), got {data.shape}")
    height, width = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(f"{PFM_SCALE}\n".encode("ascii"))
        # PFM stores rows bottom to top.
        fh.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Load a PFM file; returns float32 (H, W) or (H, W, 3), bit-exact."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise FormatError(f"not a PFM file (magic {magic!r})")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise FormatError("malformed PFM dimensions line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        if scale >= 0:
            raise FormatError("big-endian PFM not supported (expected negative scale)")
        count = width * height * channels
        payload = fh.read(count * 4)
        if len(payload) != count * 4:
            raise FormatError("truncated PFM payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width, channels)
    if channels == 1:
        data = data[:, :, 0]
    return np.flipud(data).copy()


def read_view_image(path) -> np.ndarray:
    """Load a view image by extension: .png (8-bit) or .pfm (lossless float)."""
    name = str(path).lower()
    if name.endswith(".pfm"):
        data = read_pfm(path)
        if data.ndim != 3:
            raise FormatError(f"{path}: view images must have 3 channels")
        return data.astype(np.float64)
    return read_png(path)
