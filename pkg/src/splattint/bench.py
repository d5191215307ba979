"""Timing harness comparing the two render output layouts.

Interleaved HWC and planar CHW touch memory differently; which wins is
hardware-dependent, so the report carries times only and asserts nothing
about their order.
"""

from __future__ import annotations

import statistics
import time

import numpy as np

from .errors import ValidationError
from .render import DEFAULT_CONFIG, RasterizerConfig, from_chw, render
from .scene import CameraIntrinsics, CameraPose, Scene

MIN_REPETITIONS = 10


def bench_layouts(scene: Scene, intrinsics: CameraIntrinsics, pose: CameraPose,
                  repetitions: int = MIN_REPETITIONS,
                  config: RasterizerConfig = DEFAULT_CONFIG) -> dict:
    """Time `repetitions` renders per layout; returns the report table.

    Report: {"rows": [{variant, median_ms, min_ms, max_ms}, ...],
             "pixels_identical": bool, "repetitions": int}.
    """
    if repetitions < MIN_REPETITIONS:
        raise ValidationError(f"need at least {MIN_REPETITIONS} repetitions")
    images = {}
    rows = []
    for variant in ("hwc", "chw"):
        render(scene, intrinsics, pose, layout=variant)  # warm-up
        times = []
        for _ in range(repetitions):
            start = time.perf_counter()
            images[variant] = render(scene, intrinsics, pose, layout=variant)
            times.append((time.perf_counter() - start) * 1e3)
        rows.append({
            "variant": variant,
            "median_ms": float(statistics.median(times)),
            "min_ms": float(min(times)),
            "max_ms": float(max(times)),
        })
    identical = bool(np.array_equal(images["hwc"], from_chw(images["chw"])))
    return {"rows": rows, "pixels_identical": identical, "repetitions": repetitions}


def format_report(report: dict) -> str:
    """Human summary, one line per variant."""
    lines = []
    for row in report["rows"]:
        lines.append("{variant}: median {median_ms:.3f} ms  min {min_ms:.3f} ms  "
                     "max {max_ms:.3f} ms".format(**row))
    lines.append(f"pixels identical: {report['pixels_identical']}")
    return "\n".join(lines)
