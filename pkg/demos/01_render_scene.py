"""
Rendering a synthetic gaussian scene
====================================

Builds the "two-blobs" fixture, renders every training camera plus a small
orbit, and writes the frames as PNGs.
"""

import time
from pathlib import Path

import numpy as np

from splattint import (
    generate_synthetic_scene,
    image_to_rgba,
    look_at,
    recipe,
    render,
    scene_radius,
    write_png,
)

out = Path(__file__).parent / "out" / "render"
out.mkdir(parents=True, exist_ok=True)

# 1. Build the fixture. A bundle carries the scene plus the cameras that the
#    recipe rendered it from, so everything downstream is self-consistent.
bundle = generate_synthetic_scene(recipe("two-blobs", width=128, height=128,
                                         camera_count=4), seed=1)
print(f"scene: {len(bundle.scene)} gaussians, radius {scene_radius(bundle.scene):.2f}")

# 2. Re-render the training views. They should match the stored images exactly.
for view in bundle.views:
    started = time.perf_counter()
    image = render(bundle.scene, view.intrinsics, view.pose)
    ms = (time.perf_counter() - started) * 1e3
    assert np.array_equal(image, view.image)
    write_png(out / f"train_{view.view_id}.png", image)
    print(f"view {view.view_id}: {image.shape[1]}x{image.shape[0]} in {ms:.1f} ms")

# 3. A short orbit around the scene center, reusing the first camera's radius.
intr = bundle.views[0].intrinsics
eye0 = -bundle.views[0].pose.rotation.T @ bundle.views[0].pose.translation
orbit_radius = float(np.linalg.norm(eye0))
for step, angle in enumerate(np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False)):
    eye = orbit_radius * np.array([np.sin(angle), 0.25, np.cos(angle)])
    pose = look_at(eye, np.zeros(3), np.array([0.0, 1.0, 0.0]))
    frame = image_to_rgba(render(bundle.scene, intr, pose))
    write_png(out / f"orbit_{step}.png", frame[:, :, :3] / 255.0)

print(f"wrote {4 + 8} frames to {out}")
