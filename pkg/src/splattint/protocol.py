"""Wire protocol: JSON control/status messages plus binary video frames.

Every frame starts with a 20-byte header, all integers unsigned 32-bit
little-endian:

    magic "RCGS" | width | height | format | payloadLength

format 0 is raw RGBA8, rows top-to-bottom; format 1 is a PNG payload.
"""

from __future__ import annotations

import io
import struct

import numpy as np
from PIL import Image

from .errors import FormatError, ValidationError

FRAME_MAGIC = b"RCGS"
FORMAT_RAW = 0
FORMAT_PNG = 1
HEADER = struct.Struct("<4sIIII")

FRAME_FORMATS = {"raw": FORMAT_RAW, "png": FORMAT_PNG}


def image_to_rgba(image: np.ndarray) -> np.ndarray:
    """Float (H, W, 3) image in [0, 1] -> uint8 RGBA with opaque alpha."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValidationError(f"expected (H, W, 3) image, got {image.shape}")
    rgba = np.empty(image.shape[:2] + (4,), dtype=np.uint8)
    rgba[..., :3] = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    rgba[..., 3] = 255
    return rgba


def encode_frame(rgba: np.ndarray, frame_format: str = "raw") -> bytes:
    """Serialize a uint8 RGBA image as a header-prefixed binary frame."""
    if frame_format not in FRAME_FORMATS:
        raise ValidationError(f"unknown frame format {frame_format!r}")
    rgba = np.ascontiguousarray(rgba, dtype=np.uint8)
    if rgba.ndim != 3 or rgba.shape[2] != 4:
        raise ValidationError(f"expected (H, W, 4) RGBA, got {rgba.shape}")
    height, width = rgba.shape[:2]
    if frame_format == "raw":
        payload = rgba.tobytes()
    else:
        buf = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
        payload = buf.getvalue()
    code = FRAME_FORMATS[frame_format]
    return HEADER.pack(FRAME_MAGIC, width, height, code, len(payload)) + payload


def decode_frame(data: bytes) -> tuple[int, int, int, bytes]:
    """Parse a binary frame; returns (width, height, format, payload)."""
    if len(data) < HEADER.size:
        raise FormatError("frame shorter than its header")
    magic, width, height, code, length = HEADER.unpack_from(data)
    if magic != FRAME_MAGIC:
        raise FormatError(f"bad frame magic {magic!r}")
    payload = data[HEADER.size:]
    if len(payload) != length:
        raise FormatError(f"frame payload length {len(payload)} != header {length}")
    return width, height, code, payload


def decode_frame_image(data: bytes) -> np.ndarray:
    """Binary frame -> uint8 RGBA array (decodes PNG payloads)."""
    width, height, code, payload = decode_frame(data)
    if code == FORMAT_RAW:
        if len(payload) != width * height * 4:
            raise FormatError("raw payload size does not match dimensions")
        return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 4).copy()
    if code == FORMAT_PNG:
        with Image.open(io.BytesIO(payload)) as im:
            return np.asarray(im.convert("RGBA"), dtype=np.uint8).copy()
    raise FormatError(f"unknown frame format code {code}")
