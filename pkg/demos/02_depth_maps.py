"""
Two ways to get a depth map out of a splat scene
================================================

The transmittance-crossing heuristic reads depth straight off the compositing
order; the stereo route renders a synthetic baseline pair and matches it.
Both are compared against the known geometry of the "plane" fixture.
"""

from pathlib import Path

import numpy as np

from splattint import (
    StereoConfig,
    depth_from_gaussians,
    estimate_depth,
    generate_synthetic_scene,
    look_at,
    write_pfm,
    write_png,
)

out = Path(__file__).parent / "out" / "depth"
out.mkdir(parents=True, exist_ok=True)

bundle = generate_synthetic_scene("plane", seed=0)
intr = bundle.views[0].intrinsics

# A fronto-parallel camera 2.3 units from the plane keeps the analysis simple:
# every pixel that sees the plane should report depth ~2.3.
pose = look_at(np.array([0.0, 0.0, -2.3]), np.zeros(3), np.array([0.0, 1.0, 0.0]))
truth = 2.3


def describe(name, depth):
    finite = np.isfinite(depth)
    rel = np.abs(depth[finite] - truth) / truth
    print(f"{name:10s} finite {finite.mean():5.1%}  median rel err {np.median(rel):.4f}"
          f"  worst {rel.max():.4f}")
    write_pfm(out / f"{name}.pfm", depth.astype(np.float32))
    # normalized preview, infinities drawn black
    preview = np.where(finite, depth, np.nan)
    lo, hi = np.nanmin(preview), np.nanmax(preview)
    gray = np.where(finite, 1.0 - (preview - lo) / max(hi - lo, 1e-9), 0.0)
    write_png(out / f"{name}.png", np.repeat(gray[:, :, None], 3, axis=2))


describe("gaussians", depth_from_gaussians(bundle.scene, intr, pose))

# estimate_depth with an explicit baseline; None would fall back to 2% of the
# scene's bounding-sphere radius.
describe("stereo-hv", estimate_depth(bundle.scene, intr, pose, "stereo-hv",
                                     config=StereoConfig(baseline=0.2)))

print(f"maps written to {out}")
