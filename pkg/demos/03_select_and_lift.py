"""
Painting a 2D selection and lifting it to 3D
============================================

Brush strokes on one view become a point cloud: mask pixels are unprojected
through the view's depth map, cleaned with a statistical outlier filter, and
projected into the other training cameras as splatted quads.
"""

from pathlib import Path

import numpy as np

from splattint import (
    apply_stroke,
    depth_from_gaussians,
    generate_synthetic_scene,
    new_mask,
    project_cloud,
    recipe,
    remove_outliers,
    unproject,
    write_png,
)

out = Path(__file__).parent / "out" / "selection"
out.mkdir(parents=True, exist_ok=True)

bundle = generate_synthetic_scene(recipe("two-blobs", width=96, height=96,
                                         camera_count=3), seed=1)
view = bundle.views[0]

# paint a diagonal brush stroke across the first blob, then rub part of it out
mask = new_mask(view.intrinsics, view.pose)
mask = apply_stroke(mask, "brush", [(30.0, 30.0), (55.0, 55.0)], radius=9.0)
mask = apply_stroke(mask, "rubber", [(52.0, 52.0)], radius=4.0)
print(f"mask: {int(mask.bits.sum())} pixels set")
write_png(out / "mask.png", np.repeat(mask.bits[:, :, None].astype(float), 3, axis=2))

depth = depth_from_gaussians(bundle.scene, view.intrinsics, view.pose)
cloud = unproject(mask, depth, fraction=0.7, seed=3)
print(f"unprojected {len(cloud)} points (70% sample of finite-depth pixels)")

filtered = remove_outliers(cloud, k=16, std_scale=0.007)
print(f"outlier filter kept {len(filtered)} of {len(cloud)}")

# the cloud is world-space, so it lands correctly in every other camera
for other in bundle.views:
    hits = project_cloud(filtered, other.intrinsics, other.pose,
                         depth_from_gaussians(bundle.scene, other.intrinsics,
                                              other.pose))
    overlay = other.image.copy()
    overlay[hits] = 0.6 * overlay[hits] + 0.4 * np.array([1.0, 0.8, 0.1])
    write_png(out / f"reprojected_{other.view_id}.png", overlay)
    print(f"view {other.view_id}: selection covers {int(hits.sum())} pixels")

print(f"overlays written to {out}")
