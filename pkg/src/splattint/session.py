"""Interactive edit session: one scene, one background refit, one selection.

The session is a message reducer.  handle_message() takes a decoded JSON
message and returns the list of JSON replies it produced; binary frames are
pulled separately through render_frame() by whoever owns the transport.
Malformed or out-of-order messages yield a single error reply and leave the
session state untouched.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .optimize import DEFAULT_OPTIMIZER, BackgroundOptimizer, OptimizerConfig
from .protocol import FRAME_FORMATS, encode_frame, image_to_rgba
from .recolor import EditedDataset, _check_tint, build_edited_dataset
from .render import (
    DEFAULT_CONFIG,
    DEFAULT_DEPTH_TAU,
    RasterizerConfig,
    depth_from_gaussians,
    render,
)
from .scene import CameraIntrinsics, CameraPose, Scene, look_at
from .scene_io import save_scene_ply
from .selection import (
    DEFAULT_DEPTH_TOLERANCE,
    DEFAULT_KNN,
    DEFAULT_QUAD_SIZE,
    DEFAULT_SAMPLE_FRACTION,
    DEFAULT_STD_SCALE,
    SelectionCloud,
    SelectionMask2D,
    apply_stroke,
    commit_reentry,
    empty_cloud,
    new_mask,
    project_cloud,
    reenter_selection,
    remove_outliers,
    unproject,
)
from .stereo import DEFAULT_STEREO, StereoConfig, estimate_depth

log = logging.getLogger(__name__)

HIGHLIGHT_COLOR = (1.0, 0.8, 0.1)
HIGHLIGHT_STRENGTH = 0.45


@dataclass(frozen=True)
class SessionConfig:
    """Knobs shared by the websocket server and the headless edit pipeline."""

    depth_method: str = "stereo-hv"
    frame_format: str = "raw"
    seed: int = 0
    deterministic: bool = False  # never start the worker; drive run_iterations()
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION
    knn: int = DEFAULT_KNN
    std_scale: float = DEFAULT_STD_SCALE
    quad_size: int = DEFAULT_QUAD_SIZE
    depth_tolerance: float = DEFAULT_DEPTH_TOLERANCE
    tau: float = DEFAULT_DEPTH_TAU
    optimizer: OptimizerConfig = DEFAULT_OPTIMIZER
    stereo: StereoConfig = DEFAULT_STEREO
    raster: RasterizerConfig = DEFAULT_CONFIG


DEFAULT_SESSION = SessionConfig()


def _as_vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be three finite numbers")
    return arr


class EditSession:
    """Reducer tying the renderer, selection tools, and optimizer together.

    All public methods are safe to call from the transport thread while the
    optimizer worker runs; session state is guarded by one reentrant lock and
    scenes/datasets are immutable snapshots.
    """

    def __init__(self, scene: Scene, views, config: SessionConfig = DEFAULT_SESSION,
                 metrics_sink=None):
        views = list(views)
        if not views:
            raise ValidationError("a session needs at least one view")
        if config.frame_format not in FRAME_FORMATS:
            raise ValidationError(f"unknown frame format {config.frame_format!r}")
        self._scene = scene
        self._views = views
        self._config = config
        self._metrics_sink = metrics_sink
        self._lock = threading.RLock()
        self._frame_format = config.frame_format
        self._intrinsics = views[0].intrinsics
        self._pose = views[0].pose
        self._tint = np.ones(3)
        self._cloud = empty_cloud()
        self._generation = 0
        self._dataset: EditedDataset | None = None
        self._optimizer: BackgroundOptimizer | None = None
        # Selection state; all three are set while a selection is active.
        self._active: SelectionMask2D | None = None
        self._reentry: SelectionMask2D | None = None
        self._depth: np.ndarray | None = None
        self._stopped = False
        self._handlers = {
            "hello": self._on_hello,
            "set_camera": self._on_set_camera,
            "enter_selection": self._on_enter_selection,
            "stroke": self._on_stroke,
            "commit_selection": self._on_commit_selection,
            "clear_selection": self._on_clear_selection,
            "set_tint": self._on_set_tint,
            "pause": self._on_pause,
            "resume": self._on_resume,
            "stop": self._on_stop,
            "save": self._on_save,
        }

    # -- introspection ---------------------------------------------------------

    @property
    def in_selection(self) -> bool:
        with self._lock:
            return self._active is not None

    @property
    def generation(self) -> int:
        with self._lock:
            return self._generation

    @property
    def cloud(self) -> SelectionCloud:
        with self._lock:
            return self._cloud

    @property
    def dataset(self) -> EditedDataset | None:
        with self._lock:
            return self._dataset

    @property
    def stopped(self) -> bool:
        with self._lock:
            return self._stopped

    @property
    def frame_format(self) -> str:
        with self._lock:
            return self._frame_format

    @property
    def viewer_camera(self) -> tuple[CameraIntrinsics, CameraPose]:
        with self._lock:
            return self._intrinsics, self._pose

    def current_scene(self) -> Scene:
        with self._lock:
            if self._optimizer is not None:
                return self._optimizer.current_scene()
            return self._scene

    def snapshot_scene(self) -> Scene:
        """Latest published scene; lags current_scene by < snapshot_every steps."""
        with self._lock:
            if self._optimizer is not None:
                return self._optimizer.snapshot()
            return self._scene

    def set_viewer(self, intrinsics: CameraIntrinsics, pose: CameraPose) -> None:
        """Point the viewer at an exact camera, bypassing look_at."""
        with self._lock:
            if self._active is not None:
                raise ValidationError("selection active")
            self._intrinsics = intrinsics
            self._pose = pose

    def apply_mask(self, bits: np.ndarray) -> None:
        """Replace the active mask wholesale (headless edits load it from a file)."""
        with self._lock:
            if self._active is None:
                raise ValidationError("no active selection")
            bits = np.asarray(bits, dtype=bool)
            if bits.shape != self._active.bits.shape:
                raise ValidationError(
                    f"mask shape {bits.shape} does not match the frozen view "
                    f"{self._active.bits.shape}")
            self._active = SelectionMask2D(bits=bits, intrinsics=self._active.intrinsics,
                                           pose=self._active.pose)

    # -- message handling --------------------------------------------------------

    def handle_message(self, message) -> list[dict]:
        """Apply one control message; returns JSON replies (possibly empty)."""
        if not isinstance(message, dict) or not isinstance(message.get("type"), str):
            return [_error("malformed message: expected an object with a type field")]
        handler = self._handlers.get(message["type"])
        if handler is None:
            return [_error(f"unknown message type {message['type']!r}")]
        with self._lock:
            try:
                return handler(message)
            except (ValueError, TypeError) as exc:
                # SplattintError is a ValueError; stray conversion errors from
                # malformed payloads take the same path.
                return [_error(str(exc))]

    def status_message(self) -> dict:
        """Current optimizer progress as a status reply."""
        with self._lock:
            if self._optimizer is not None:
                s = self._optimizer.status()
                return {"type": "status", "iteration": s.iteration, "loss": s.loss,
                        "ips": s.ips, "generation": s.generation}
            return {"type": "status", "iteration": 0, "loss": 0.0, "ips": 0.0,
                    "generation": self._generation}

    # -- handlers (called with the lock held) -------------------------------------

    def _on_hello(self, message) -> list[dict]:
        fmt = message.get("format", "raw")
        if fmt not in FRAME_FORMATS:
            raise ValidationError(f"unknown frame format {fmt!r}")
        self._frame_format = fmt
        return []

    def _on_set_camera(self, message) -> list[dict]:
        if self._active is not None:
            raise ValidationError("selection active")
        position = _as_vec3(message.get("position"), "position")
        target = _as_vec3(message.get("target"), "target")
        up = _as_vec3(message.get("up", (0.0, 1.0, 0.0)), "up")
        self._pose = look_at(position, target, up)
        return []

    def _on_enter_selection(self, message) -> list[dict]:
        if self._active is not None:
            raise ValidationError("selection already active")
        cfg = self._config
        scene = self._current_scene_locked()
        depth = estimate_depth(scene, self._intrinsics, self._pose,
                               method=cfg.depth_method, tau=cfg.tau,
                               config=cfg.stereo, raster=cfg.raster)
        if self._cloud.is_empty:
            active = new_mask(self._intrinsics, self._pose)
            reentry = None
        else:
            occlusion = depth_from_gaussians(scene, self._intrinsics, self._pose,
                                             cfg.tau, cfg.raster)
            active = reenter_selection(self._cloud, self._intrinsics, self._pose,
                                       occlusion, cfg.depth_tolerance)
            reentry = active
        self._active, self._reentry, self._depth = active, reentry, depth
        return [self._selection_info()]

    def _on_stroke(self, message) -> list[dict]:
        if self._active is None:
            raise ValidationError("no active selection")
        tool = message.get("tool")
        path = message.get("path")
        radius = message.get("radius")
        if not isinstance(radius, (int, float)):
            raise ValidationError("stroke radius must be a number")
        self._active = apply_stroke(self._active, tool, path, float(radius))
        return []

    def _on_commit_selection(self, message) -> list[dict]:
        if self._active is None:
            raise ValidationError("no active selection")
        cfg = self._config
        if self._reentry is not None:
            cloud = commit_reentry(self._cloud, self._active, self._reentry,
                                   self._depth, cfg.sample_fraction, cfg.seed,
                                   cfg.knn, cfg.std_scale, cfg.depth_tolerance)
        else:
            cloud = unproject(self._active, self._depth, cfg.sample_fraction, cfg.seed)
            if not cloud.is_empty:
                cloud = remove_outliers(cloud, cfg.knn, cfg.std_scale)
        if cloud.is_empty:
            # Stay in selection mode so more strokes can follow.
            raise ValidationError("empty selection")
        self._cloud = cloud
        self._active = self._reentry = self._depth = None
        self._rebuild_dataset()
        return [self._selection_info()]

    def _on_clear_selection(self, message) -> list[dict]:
        if self._active is not None:
            self._active = new_mask(self._intrinsics, self._pose)
            self._reentry = None
        if not self._cloud.is_empty:
            self._cloud = empty_cloud()
            self._rebuild_dataset()
        return [self._selection_info()]

    def _on_set_tint(self, message) -> list[dict]:
        self._tint = _check_tint(message.get("rgb"))
        if not self._cloud.is_empty:
            self._rebuild_dataset()
        return [self._selection_info()]

    def _on_pause(self, message) -> list[dict]:
        if self._optimizer is not None:
            self._optimizer.pause()
        return []

    def _on_resume(self, message) -> list[dict]:
        if self._optimizer is not None:
            self._optimizer.resume()
        return []

    def _on_stop(self, message) -> list[dict]:
        self.close()
        return []

    def _on_save(self, message) -> list[dict]:
        path = message.get("path")
        if not isinstance(path, str) or not path:
            raise ValidationError("save needs a path string")
        save_scene_ply(self._current_scene_locked(), path)
        return [self.status_message()]

    # -- internals ------------------------------------------------------------

    def _current_scene_locked(self) -> Scene:
        if self._optimizer is not None:
            return self._optimizer.current_scene()
        return self._scene

    def _selection_info(self) -> dict:
        return {"type": "selection_info", "cloudSize": len(self._cloud),
                "generation": self._generation}

    def _rebuild_dataset(self) -> None:
        """New generation of recolored views; created or swapped into the refit."""
        cfg = self._config
        self._generation += 1
        dataset = build_edited_dataset(self._views, self._cloud, self._tint,
                                       self._current_scene_locked(), self._generation,
                                       cfg.quad_size, cfg.depth_tolerance, cfg.tau,
                                       cfg.raster)
        self._dataset = dataset
        if self._optimizer is None:
            self._optimizer = BackgroundOptimizer(self._scene, dataset, cfg.optimizer,
                                                  seed=cfg.seed,
                                                  metrics_sink=self._metrics_sink)
            if not cfg.deterministic:
                self._optimizer.start()
        else:
            self._optimizer.swap_dataset(dataset)

    def run_iterations(self, count: int) -> Scene:
        """Drive the refit synchronously; only valid in deterministic sessions."""
        with self._lock:
            optimizer = self._optimizer
        if optimizer is None:
            raise ValidationError("no committed selection to optimize")
        return optimizer.run_iterations(count)

    def close(self) -> None:
        with self._lock:
            optimizer = self._optimizer
            self._stopped = True
        if optimizer is not None:
            optimizer.stop()

    # -- frames -----------------------------------------------------------------

    def render_rgba(self) -> np.ndarray:
        """Current view of the latest snapshot with the selection overlaid."""
        with self._lock:
            scene = self._optimizer.snapshot() if self._optimizer else self._scene
            intr, pose = self._intrinsics, self._pose
            active = self._active
            cloud = self._cloud
            cfg = self._config
        image = render(scene, intr, pose)
        if active is not None:
            bits = active.bits
        elif not cloud.is_empty:
            occlusion = depth_from_gaussians(scene, intr, pose, cfg.tau, cfg.raster)
            bits = project_cloud(cloud, intr, pose, occlusion,
                                 cfg.quad_size, cfg.depth_tolerance)
        else:
            bits = None
        if bits is not None and bits.any():
            blend = np.asarray(HIGHLIGHT_COLOR)
            image = image.copy()
            image[bits] = (1.0 - HIGHLIGHT_STRENGTH) * image[bits] + HIGHLIGHT_STRENGTH * blend
        return image_to_rgba(image)

    def render_frame(self) -> bytes:
        return encode_frame(self.render_rgba(), self.frame_format)


def _error(message: str) -> dict:
    return {"type": "error", "message": message}
