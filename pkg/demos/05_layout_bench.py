"""
Memory-layout microbenchmark
============================

Renders the same scene with channel-last (hwc) and channel-first (chw)
image buffers and reports per-repetition timings. The outputs must be
pixel-identical; which layout wins is hardware- and BLAS-dependent.
"""

from pathlib import Path

from splattint import bench_layouts, format_report, generate_synthetic_scene, recipe

bundle = generate_synthetic_scene(recipe("two-blobs", width=96, height=96,
                                         camera_count=2), seed=1)
report = bench_layouts(bundle.scene, bundle.views[0].intrinsics,
                       bundle.views[0].pose, repetitions=15)

print(format_report(report))

out = Path(__file__).parent / "out"
out.mkdir(parents=True, exist_ok=True)
import json

(out / "bench.json").write_text(json.dumps(report, indent=2))
print(f"raw report in {out / 'bench.json'}")
