"""Command line front door.

Subcommands: view (interactive websocket server), edit (headless recolor),
depth (depth map export), bench (layout timing harness), fixture (synthetic
test scenes).  Exit codes: 0 ok, 1 environment/input error, 2 empty selection.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import MIN_REPETITIONS, bench_layouts, format_report
from .errors import SplattintError, ValidationError
from .imageio import read_png, write_pfm
from .optimize import OptimizerConfig
from .scene_io import load_cameras, load_scene_ply
from .server import run_server
from .session import EditSession, SessionConfig
from .stereo import estimate_depth
from .synthetic import RECIPE_NAMES, generate_synthetic_scene, recipe, write_fixture

DEPTH_METHODS = ("stereo-hv", "gaussians")
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EMPTY_SELECTION = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for empty selections."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _parse_tint(text: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"tint must be r,g,b, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"tint must be r,g,b numbers, got {text!r}") from None


def _load_inputs(args):
    scene = load_scene_ply(args.scene)
    views = load_cameras(args.cameras)
    return scene, views


def _pick_view(views, view_id: int):
    for view in views:
        if view.view_id == view_id:
            return view
    known = ", ".join(str(v.view_id) for v in views)
    raise ValidationError(f"view id {view_id} not in manifest (have: {known})")


def _session_config(args, deterministic: bool) -> SessionConfig:
    return SessionConfig(
        depth_method=args.depth_method,
        seed=args.seed,
        deterministic=deterministic,
        optimizer=OptimizerConfig(snapshot_every=args.snapshot_every),
    )


# -- subcommands ----------------------------------------------------------------


def _cmd_view(args) -> int:
    scene, views = _load_inputs(args)
    view = _pick_view(views, args.view_id)
    session = EditSession(scene, views, _session_config(args, deterministic=False))
    session.set_viewer(view.intrinsics, view.pose)

    def announce(port):
        print(f"serving ws://{args.host}:{port}", flush=True)

    try:
        run_server(session, args.host, args.port, max_fps=args.fps, on_ready=announce)
    except KeyboardInterrupt:
        pass
    finally:
        session.close()
    return EXIT_OK


def _cmd_edit(args) -> int:
    scene, views = _load_inputs(args)
    view = _pick_view(views, args.view_id)
    bits = read_png(args.mask).max(axis=2) >= 0.5
    metrics = []
    session = EditSession(scene, views, _session_config(args, deterministic=True),
                          metrics_sink=metrics.append)
    session.set_viewer(view.intrinsics, view.pose)
    session.handle_message({"type": "enter_selection"})
    session.apply_mask(bits)
    session.handle_message({"type": "set_tint", "rgb": _parse_tint(args.tint)})
    replies = session.handle_message({"type": "commit_selection"})
    errors = [r["message"] for r in replies if r["type"] == "error"]
    if errors:
        print(f"error: {errors[0]}", file=sys.stderr)
        return EXIT_EMPTY_SELECTION if "empty selection" in errors[0] else EXIT_ERROR
    session.run_iterations(args.iters)
    session.handle_message({"type": "save", "path": args.out})
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8") as fh:
            fh.writelines(m.line() + "\n" for m in metrics)
    if metrics:
        print(metrics[-1].line())
    return EXIT_OK


def _cmd_depth(args) -> int:
    scene, views = _load_inputs(args)
    view = _pick_view(views, args.view_id)
    depth = estimate_depth(scene, view.intrinsics, view.pose, method=args.depth_method)
    write_pfm(args.out, depth)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    scene, views = _load_inputs(args)
    view = _pick_view(views, args.view_id)
    report = bench_layouts(scene, view.intrinsics, view.pose, args.repetitions)
    print(format_report(report), file=sys.stderr)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_fixture(args) -> int:
    overrides = {}
    if args.cameras is not None:
        overrides["camera_count"] = args.cameras
    if args.size is not None:
        overrides["width"], overrides["height"] = args.size
    bundle = generate_synthetic_scene(recipe(args.recipe, **overrides), seed=args.seed)
    scene_path, cameras_path = write_fixture(bundle, args.out, args.image_format)
    print(scene_path)
    print(cameras_path)
    return EXIT_OK


# -- wiring -----------------------------------------------------------------------


def _add_scene_args(p):
    p.add_argument("--scene", required=True, help="gaussian scene .ply")
    p.add_argument("--cameras", required=True, help="camera manifest .txt")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splattint",
                     description="Paint-and-recolor workbench for gaussian splat scenes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("view", help="serve an interactive edit session over websockets")
    _add_scene_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--view-id", type=int, default=0, help="initial viewer camera")
    p.add_argument("--depth-method", choices=DEPTH_METHODS, default="stereo-hv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot-every", type=int, default=10)
    p.add_argument("--fps", type=float, default=30.0, help="frame stream cap")
    p.set_defaults(func=_cmd_view)

    p = sub.add_parser("edit", help="headless recolor: mask image in, edited scene out")
    _add_scene_args(p)
    p.add_argument("--mask", required=True, help="selection mask image (nonzero = selected)")
    p.add_argument("--view-id", type=int, default=0, help="camera the mask was drawn on")
    p.add_argument("--tint", required=True, help="r,g,b multipliers")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--out", required=True, help="output scene .ply")
    p.add_argument("--depth-method", choices=DEPTH_METHODS, default="stereo-hv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshot-every", type=int, default=10)
    p.add_argument("--metrics", help="also write every per-iteration metrics line here")
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("depth", help="export a depth map as PFM")
    _add_scene_args(p)
    p.add_argument("--view-id", type=int, default=0)
    p.add_argument("--depth-method", choices=DEPTH_METHODS, default="stereo-hv")
    p.add_argument("--out", required=True, help="output .pfm")
    p.set_defaults(func=_cmd_depth)

    p = sub.add_parser("bench", help="time HWC vs CHW rendering")
    _add_scene_args(p)
    p.add_argument("--view-id", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=MIN_REPETITIONS)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("fixture", help="generate a synthetic scene + camera manifest")
    p.add_argument("--recipe", choices=RECIPE_NAMES, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cameras", type=int, help="override camera count")
    p.add_argument("--size", type=int, nargs=2, metavar=("W", "H"), help="override image size")
    p.add_argument("--image-format", choices=("pfm", "png"), default="pfm")
    p.set_defaults(func=_cmd_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SplattintError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
