"""Scene and camera persistence.

Scenes use the common gaussian-splatting PLY checkpoint layout: binary
little-endian, one `vertex` element, float32 properties

    x y z f_dc_0..2 f_rest_0..44 opacity scale_0..2 rot_0..3

with log-scales, logit-opacities, unnormalized (w, x, y, z) quaternions and
channel-major f_rest (15 red coefficients, then 15 green, then 15 blue).
Unknown extra properties (e.g. nx/ny/nz normals) are ignored on load.

Camera manifests are plain text, one view per line:

    id width height fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 t0 t1 t2 image_path

Blank lines and lines starting with `#` are skipped.  Rotations are row-major
world-to-camera, translations camera-frame.  Image paths are resolved relative
to the manifest; .png and .pfm images are accepted.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DataError, FormatError, ValidationError
from .imageio import read_view_image, write_pfm, write_png
from .scene import CameraIntrinsics, CameraPose, Scene, TrainingView

SH_REST = 45
# Finite logit bound: sigmoid(13.9) differs from 1 by ~9.2e-7, so opacities
# saturated at exactly 0 or 1 reload within 1e-6.
OPACITY_LOGIT_CLAMP = 13.9

_REQUIRED_PROPERTIES = (
    ["x", "y", "z"]
    + [f"f_dc_{i}" for i in range(3)]
    + [f"f_rest_{i}" for i in range(SH_REST)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)

_PLY_TYPES = {
    "float": "<f4",
    "float32": "<f4",
    "double": "<f8",
    "float64": "<f8",
    "uchar": "u1",
    "uint8": "u1",
    "char": "i1",
    "int8": "i1",
    "short": "<i2",
    "int16": "<i2",
    "ushort": "<u2",
    "uint16": "<u2",
    "int": "<i4",
    "int32": "<i4",
    "uint": "<u4",
    "uint32": "<u4",
}


def _parse_ply_header(fh):
    line = fh.readline()
    if line.strip() != b"ply":
        raise FormatError("not a PLY file")
    fmt = None
    counts = []  # (element name, count), in order
    properties = []  # property names of the vertex element
    dtypes = []
    current = None
    while True:
        line = fh.readline()
        if not line:
            raise FormatError("unterminated PLY header")
        tokens = line.decode("ascii", errors="replace").strip().split()
        if not tokens or tokens[0] == "comment":
            continue
        if tokens[0] == "format":
            fmt = tokens[1]
        elif tokens[0] == "element":
            current = tokens[1]
            counts.append((tokens[1], int(tokens[2])))
        elif tokens[0] == "property":
            if current != "vertex":
                continue
            if tokens[1] == "list":
                raise FormatError("list properties not supported in vertex element")
            if tokens[1] not in _PLY_TYPES:
                raise FormatError(f"unsupported property type {tokens[1]!r}")
            dtypes.append((tokens[2], _PLY_TYPES[tokens[1]]))
            properties.append(tokens[2])
        elif tokens[0] == "end_header":
            break
    if fmt != "binary_little_endian":
        raise FormatError(f"unsupported PLY format {fmt!r} (need binary_little_endian)")
    vertex_counts = [c for name, c in counts if name == "vertex"]
    if not vertex_counts:
        raise FormatError("PLY has no vertex element")
    for name, c in counts:
        if name != "vertex" and c != 0:
            raise FormatError(f"unsupported non-empty element {name!r}")
    return vertex_counts[0], properties, dtypes


def load_scene_ply(path) -> Scene:
    """Load a gaussian-splat PLY checkpoint."""
    with open(path, "rb") as fh:
        count, properties, dtypes = _parse_ply_header(fh)
        for name in _REQUIRED_PROPERTIES:
            if name not in properties:
                raise FormatError(f"missing PLY property {name!r}")
        dtype = np.dtype(dtypes)
        payload = fh.read(count * dtype.itemsize)
    if len(payload) != count * dtype.itemsize:
        raise FormatError("truncated PLY payload")
    rows = np.frombuffer(payload, dtype=dtype)

    def col(name):
        return rows[name].astype(np.float64)

    positions = np.stack([col("x"), col("y"), col("z")], axis=1)
    raw_opacity = col("opacity")
    raw_scales = np.stack([col(f"scale_{i}") for i in range(3)], axis=1)
    raw_rot = np.stack([col(f"rot_{i}") for i in range(4)], axis=1)
    dc = np.stack([col(f"f_dc_{i}") for i in range(3)], axis=1)
    rest = np.stack([col(f"f_rest_{i}") for i in range(SH_REST)], axis=1)

    for name, arr in (("position", positions), ("opacity", raw_opacity),
                      ("scale", raw_scales), ("rotation", raw_rot),
                      ("f_dc", dc), ("f_rest", rest)) if count else ():
        bad = ~np.isfinite(arr).reshape(count, -1).all(axis=1)
        if bad.any():
            raise DataError(f"non-finite {name} at vertex {int(np.nonzero(bad)[0][0])}")

    norms = np.linalg.norm(raw_rot, axis=1)
    if np.any(norms < 1e-12):
        raise DataError(f"zero-norm quaternion at vertex {int(np.argmin(norms))}")

    sh = np.zeros((count, 16, 3))
    sh[:, 0, :] = dc
    # channel-major: f_rest_[c*15 + j] is coefficient j+1 of channel c
    sh[:, 1:, :] = rest.reshape(count, 3, 15).transpose(0, 2, 1)

    return Scene(
        positions=positions,
        rotations=raw_rot / norms[:, None],
        scales=np.exp(raw_scales),
        opacities=1.0 / (1.0 + np.exp(-raw_opacity)),
        sh=sh,
    )


def save_scene_ply(scene: Scene, path) -> None:
    """Write a scene as a binary little-endian PLY checkpoint (float32 payload)."""
    n = len(scene)
    dtype = np.dtype([(name, "<f4") for name in _REQUIRED_PROPERTIES])
    rows = np.empty(n, dtype=dtype)
    rows["x"], rows["y"], rows["z"] = scene.positions.T
    for i in range(3):
        rows[f"f_dc_{i}"] = scene.sh[:, 0, i]
    rest = scene.sh[:, 1:, :].transpose(0, 2, 1).reshape(n, SH_REST)
    for i in range(SH_REST):
        rows[f"f_rest_{i}"] = rest[:, i]
    clipped = np.clip(scene.opacities, 1.0 / (1.0 + np.exp(OPACITY_LOGIT_CLAMP)),
                      1.0 / (1.0 + np.exp(-OPACITY_LOGIT_CLAMP)))
    rows["opacity"] = np.log(clipped / (1.0 - clipped))
    for i in range(3):
        rows[f"scale_{i}"] = np.log(scene.scales[:, i])
        rows[f"rot_{i}"] = scene.rotations[:, i]
    rows["rot_3"] = scene.rotations[:, 3]

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {name}" for name in _REQUIRED_PROPERTIES]
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(rows.tobytes())


def _format_real(value: float) -> str:
    return repr(float(value))


def load_cameras(path) -> list[TrainingView]:
    """Load a camera manifest and its referenced images."""
    base = os.path.dirname(os.path.abspath(path))
    views = []
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 20:
                raise FormatError(f"{path}:{lineno}: expected 20 fields, got {len(tokens)}")
            try:
                view_id = int(tokens[0])
                width, height = int(tokens[1]), int(tokens[2])
                reals = [float(t) for t in tokens[3:19]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            fx, fy, cx, cy = reals[0:4]
            rotation = np.array(reals[4:13]).reshape(3, 3)
            translation = np.array(reals[13:16])
            if view_id in seen_ids:
                raise ValidationError(f"view {view_id}: duplicate id")
            seen_ids.add(view_id)
            err = np.abs(rotation @ rotation.T - np.eye(3)).max()
            if err > 1e-3:
                raise ValidationError(
                    f"view {view_id}: rotation not orthonormal (max error {err:.2e})"
                )
            if np.linalg.det(rotation) < 0:
                raise ValidationError(f"view {view_id}: rotation determinant is negative")
            try:
                intrinsics = CameraIntrinsics(fx, fy, cx, cy, width, height)
            except ValidationError as exc:
                raise ValidationError(f"view {view_id}: {exc}") from exc
            image_rel = tokens[19]
            image_path = os.path.normpath(os.path.join(base, image_rel))
            if not os.path.exists(image_path):
                raise ValidationError(f"view {view_id}: image not found: {image_rel}")
            image = read_view_image(image_path)
            if image.shape[:2] != (height, width):
                raise ValidationError(
                    f"view {view_id}: image is {image.shape[1]}x{image.shape[0]}, "
                    f"manifest says {width}x{height}"
                )
            views.append(TrainingView(
                view_id=view_id,
                intrinsics=intrinsics,
                pose=CameraPose(rotation, translation),
                image=image,
                image_path=image_path,
            ))
    if not views:
        raise FormatError(f"{path}: no views")
    return views


def save_cameras(views, path, image_format: str = "pfm") -> None:
    """Write a camera manifest plus per-view images next to it.

    `image_format` picks the image payload: "pfm" is lossless (float32),
    "png" quantizes to 8 bits.
    """
    if image_format not in ("pfm", "png"):
        raise ValidationError(f"unsupported image format {image_format!r}")
    base = os.path.dirname(os.path.abspath(path))
    image_dir = os.path.join(base, "images")
    os.makedirs(image_dir, exist_ok=True)
    lines = ["# id width height fx fy cx cy r00..r22 t0 t1 t2 image"]
    for view in views:
        rel = f"images/view_{view.view_id:04d}.{image_format}"
        target = os.path.join(base, rel)
        if image_format == "pfm":
            write_pfm(target, view.image.astype(np.float32))
        else:
            write_png(target, view.image)
        intr = view.intrinsics
        fields = [str(view.view_id), str(intr.width), str(intr.height)]
        fields += [_format_real(v) for v in (intr.fx, intr.fy, intr.cx, intr.cy)]
        fields += [_format_real(v) for v in view.pose.rotation.reshape(-1)]
        fields += [_format_real(v) for v in view.pose.translation]
        fields.append(rel)
        lines.append(" ".join(fields))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
