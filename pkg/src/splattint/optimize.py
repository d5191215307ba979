"""SH-only refitting of a scene toward an edited dataset.

Each iteration samples a training view uniformly at random, renders it,
differentiates the photometric loss back to the spherical-harmonics
coefficients (geometry stays bit-frozen), and applies one Adam step with
separate learning rates for the DC row and the higher-order rows.

`BackgroundOptimizer` wraps the same iteration in a pausable worker thread
that publishes immutable scene snapshots on a fixed cadence and accepts
atomic dataset swaps; `run_iterations` drives the identical loop
synchronously for deterministic, single-threaded runs.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

import numpy as np

from .backward import backward_sh
from .errors import ValidationError
from .losses import DEFAULT_LAMBDA, LossBreakdown, loss_grad_wrt_image, photometric_loss
from .recolor import EditedDataset
from .render import render_forward
from .scene import Scene

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    lr_dc: float = 0.0025
    lr_rest: float = 0.000125
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lam: float = DEFAULT_LAMBDA
    snapshot_every: int = 10


DEFAULT_OPTIMIZER = OptimizerConfig()


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray  # (N, 16, 3)
    v: np.ndarray  # (N, 16, 3)
    step: int

    @classmethod
    def fresh(cls, n_gaussians: int) -> "AdamState":
        shape = (n_gaussians, 16, 3)
        return cls(m=np.zeros(shape), v=np.zeros(shape), step=0)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState,
              config: OptimizerConfig = DEFAULT_OPTIMIZER) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update: theta <- theta - lr * m^ / (sqrt(v^) + eps).

    Row 0 (the DC coefficients) uses lr_dc, rows 1..15 lr_rest.  Non-finite
    gradients reject the iteration: params and state are returned unchanged.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.ndim != 3 or params.shape[1:] != (16, 3):
        raise ValidationError(
            f"params/grads must both be (N, 16, 3), got {params.shape} and {grads.shape}"
        )
    if not np.all(np.isfinite(grads)):
        log.warning("non-finite gradient; Adam iteration %d rejected", state.step + 1)
        return params, state
    t = state.step + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1 ** t)
    v_hat = v / (1.0 - config.beta2 ** t)
    lr = np.full((16, 1), config.lr_rest)
    lr[0] = config.lr_dc
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return new_params, AdamState(m=m, v=v, step=t)


@dataclass(frozen=True)
class IterationMetrics:
    iteration: int
    view_id: int
    generation: int
    loss: LossBreakdown

    def line(self) -> str:
        """One metrics record: iter,viewId,generation,l1,ssim,total."""
        return (f"{self.iteration},{self.view_id},{self.generation},"
                f"{self.loss.l1:.8f},{self.loss.ssim:.8f},{self.loss.total:.8f}")


def optimize_iteration(scene: Scene, dataset: EditedDataset, rng: np.random.Generator,
                       state: AdamState,
                       config: OptimizerConfig = DEFAULT_OPTIMIZER
                       ) -> tuple[Scene, AdamState, IterationMetrics]:
    """One SH refit step against a uniformly sampled view of the dataset."""
    if len(dataset) == 0:
        raise ValidationError("dataset has no views")
    pick = int(rng.integers(len(dataset)))
    target = dataset.views[pick]
    view = target.view
    capture = render_forward(scene, view.intrinsics, view.pose)
    loss = photometric_loss(capture.image, target.image, config.lam)
    grad_image = loss_grad_wrt_image(capture.image, target.image, config.lam)
    grads = backward_sh(capture, grad_image)
    new_sh, new_state = adam_step(scene.sh, grads, state, config)
    metrics = IterationMetrics(
        iteration=state.step + 1,
        view_id=view.view_id,
        generation=dataset.generation,
        loss=loss,
    )
    return scene.with_sh(new_sh), new_state, metrics


@dataclass(frozen=True)
class OptimizerStatus:
    iteration: int
    loss: float
    ips: float  # iterations per second over the last snapshot window
    generation: int


class BackgroundOptimizer:
    """Owns the refit loop; safe to drive from a UI thread.

    The worker publishes an immutable scene snapshot every
    `config.snapshot_every` iterations (scenes are never mutated in place, so
    snapshots are plain references).  pause() idles the loop without touching
    optimizer state, swap_dataset() takes effect on the next iteration, and
    run_iterations() executes the same loop synchronously for deterministic
    runs (do not mix it with a started worker).
    """

    def __init__(self, scene: Scene, dataset: EditedDataset,
                 config: OptimizerConfig = DEFAULT_OPTIMIZER, seed: int = 0,
                 metrics_sink=None):
        self._config = config
        self._rng = np.random.default_rng(seed)
        self._state = AdamState.fresh(len(scene))
        self._scene = scene
        self._metrics_sink = metrics_sink
        self._lock = threading.Lock()
        self._dataset = dataset
        self._snapshot = scene
        self._status = OptimizerStatus(0, 0.0, 0.0, dataset.generation)
        self._run_event = threading.Event()
        self._run_event.set()
        self._stop_event = threading.Event()
        self._thread: threading.Thread | None = None
        self._window_start = time.perf_counter()
        self._window_iters = 0
        self._last_loss = 0.0

    # -- state shared with other threads -------------------------------------

    def snapshot(self) -> Scene:
        with self._lock:
            return self._snapshot

    def current_scene(self) -> Scene:
        with self._lock:
            return self._scene

    def status(self) -> OptimizerStatus:
        with self._lock:
            return self._status

    def swap_dataset(self, dataset: EditedDataset) -> None:
        with self._lock:
            self._dataset = dataset

    # -- control --------------------------------------------------------------

    def start(self) -> None:
        if self._thread is not None:
            return
        self._thread = threading.Thread(target=self._loop, name="sh-refit", daemon=True)
        self._thread.start()

    def pause(self) -> None:
        self._run_event.clear()

    def resume(self) -> None:
        self._run_event.set()

    @property
    def paused(self) -> bool:
        return not self._run_event.is_set()

    def stop(self) -> None:
        self._stop_event.set()
        self._run_event.set()
        if self._thread is not None:
            self._thread.join(timeout=30.0)
            self._thread = None

    @property
    def stopped(self) -> bool:
        return self._stop_event.is_set()

    # -- the loop itself --------------------------------------------------------

    def _step(self) -> None:
        with self._lock:
            dataset = self._dataset
            scene = self._scene
        scene, self._state, metrics = optimize_iteration(
            scene, dataset, self._rng, self._state, self._config)
        self._window_iters += 1
        self._last_loss = metrics.loss.total
        with self._lock:
            self._scene = scene
        if self._state.step % self._config.snapshot_every == 0:
            self._publish()
        if self._metrics_sink is not None:
            self._metrics_sink(metrics)

    def _publish(self) -> None:
        now = time.perf_counter()
        elapsed = max(now - self._window_start, 1e-9)
        with self._lock:
            self._snapshot = self._scene
            self._status = OptimizerStatus(
                iteration=self._state.step,
                loss=self._last_loss,
                ips=self._window_iters / elapsed,
                generation=self._dataset.generation,
            )
        self._window_start = now
        self._window_iters = 0

    def _loop(self) -> None:
        while not self._stop_event.is_set():
            if not self._run_event.wait(timeout=0.1):
                continue
            if self._stop_event.is_set():
                break
            try:
                self._step()
            except Exception:
                log.exception("optimizer iteration failed; pausing")
                self._run_event.clear()

    def run_iterations(self, count: int) -> Scene:
        """Deterministic synchronous mode; returns the final scene."""
        if self._thread is not None:
            raise ValidationError("run_iterations cannot be mixed with a started worker")
        for _ in range(count):
            self._step()
        self._publish()
        return self.current_scene()
