import re
import time

import numpy as np
import pytest

from splattint import (
    AdamState,
    BackgroundOptimizer,
    OptimizerConfig,
    SelectionMask2D,
    ValidationError,
    adam_step,
    build_edited_dataset,
    depth_from_gaussians,
    empty_cloud,
    optimize_iteration,
    remove_outliers,
    render_forward,
    unproject,
)
from splattint.recolor import EditedDataset, EditedView


def tinted_dataset(bundle, tint=(1.0, 0.2, 0.2)):
    view = bundle.views[0]
    depth = depth_from_gaussians(bundle.scene, view.intrinsics, view.pose)
    mask = SelectionMask2D(np.isfinite(depth), view.intrinsics, view.pose)
    cloud = remove_outliers(unproject(mask, depth, fraction=0.7, seed=0),
                            k=16, std_scale=0.007)
    return build_edited_dataset(bundle.views, cloud, tint, bundle.scene)


def masked_l1(scene, dataset):
    total, count = 0.0, 0
    for edited in dataset.views:
        image = render_forward(scene, edited.view.intrinsics, edited.view.pose).image
        if edited.mask.any():
            total += np.abs(image[edited.mask] - edited.image[edited.mask]).sum()
            count += edited.mask.sum() * 3
    return total / count


@pytest.fixture(scope="module")
def refit_run(two_blobs_bundle):
    """1000 deterministic iterations toward a red-tinted selection."""
    dataset = tinted_dataset(two_blobs_bundle)
    metrics = []
    optimizer = BackgroundOptimizer(two_blobs_bundle.scene, dataset, seed=7,
                                    metrics_sink=metrics.append)
    final = optimizer.run_iterations(1000)
    return two_blobs_bundle, dataset, metrics, final


class TestAdamStep:
    def test_zero_gradient_is_identity(self):
        params = np.random.default_rng(0).normal(size=(4, 16, 3))
        out, state = adam_step(params, np.zeros_like(params), AdamState.fresh(4))
        np.testing.assert_array_equal(out, params)
        assert state.step == 1

    def test_first_step_closed_form(self):
        config = OptimizerConfig()
        params = np.zeros((1, 16, 3))
        grads = np.full_like(params, 0.5)
        out, _ = adam_step(params, grads, AdamState.fresh(1), config)
        # t=1: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        step_unit = 0.5 / (0.5 + config.eps)
        np.testing.assert_allclose(out[0, 0], -config.lr_dc * step_unit, rtol=1e-12)
        np.testing.assert_allclose(out[0, 1:], -config.lr_rest * step_unit, rtol=1e-12)

    def test_lr_rows_are_independent(self):
        config = OptimizerConfig()
        params = np.zeros((1, 16, 3))
        grads = np.zeros_like(params)
        grads[0, 0, 0] = 1.0
        grads[0, 5, 0] = 1.0
        out, _ = adam_step(params, grads, AdamState.fresh(1), config)
        ratio = out[0, 0, 0] / out[0, 5, 0]
        np.testing.assert_allclose(ratio, config.lr_dc / config.lr_rest, rtol=1e-12)

    def test_quadratic_bowl_converges(self):
        config = OptimizerConfig(lr_dc=0.1, lr_rest=0.1)
        params = np.zeros((1, 16, 3))
        state = AdamState.fresh(1)
        for _ in range(500):
            grads = np.zeros_like(params)
            grads[0, 0, 0] = params[0, 0, 0] - 3.0
            params, state = adam_step(params, grads, state, config)
        assert abs(params[0, 0, 0] - 3.0) < 1e-2
        assert np.all(params[0, 1:] == 0.0)

    def test_nonfinite_gradient_rejected(self, caplog):
        params = np.random.default_rng(1).normal(size=(2, 16, 3))
        grads = np.zeros_like(params)
        grads[1, 3, 2] = np.nan
        state = AdamState.fresh(2)
        with caplog.at_level("WARNING"):
            out, new_state = adam_step(params, grads, state)
        assert "rejected" in caplog.text
        assert out is params and new_state is state

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValidationError):
            adam_step(np.zeros((2, 16, 3)), np.zeros((3, 16, 3)), AdamState.fresh(2))
        with pytest.raises(ValidationError):
            adam_step(np.zeros((2, 15, 3)), np.zeros((2, 15, 3)), AdamState.fresh(2))

    def test_second_moment_stays_nonnegative(self):
        rng = np.random.default_rng(2)
        params = rng.normal(size=(3, 16, 3))
        state = AdamState.fresh(3)
        for _ in range(20):
            params, state = adam_step(params, rng.normal(size=params.shape), state)
            assert np.all(state.v >= 0.0)
        assert state.step == 20


class TestOptimizeIteration:
    def test_self_consistent_dataset_is_fixed_point(self, two_blobs_bundle):
        # views were rendered from this very scene, so the loss is exactly 0
        dataset = build_edited_dataset(two_blobs_bundle.views, empty_cloud(),
                                       (1.0, 1.0, 1.0), two_blobs_bundle.scene)
        rng = np.random.default_rng(0)
        state = AdamState.fresh(len(two_blobs_bundle.scene))
        scene, state, metrics = optimize_iteration(
            two_blobs_bundle.scene, dataset, rng, state)
        assert metrics.loss.total == 0.0
        np.testing.assert_array_equal(scene.sh, two_blobs_bundle.scene.sh)

    def test_geometry_frozen(self, two_blobs_bundle):
        dataset = tinted_dataset(two_blobs_bundle)
        rng = np.random.default_rng(1)
        scene = two_blobs_bundle.scene
        state = AdamState.fresh(len(scene))
        for _ in range(3):
            scene, state, metrics = optimize_iteration(scene, dataset, rng, state)
        assert np.isfinite(metrics.loss.total)
        assert not np.array_equal(scene.sh, two_blobs_bundle.scene.sh)
        np.testing.assert_array_equal(scene.positions, two_blobs_bundle.scene.positions)
        np.testing.assert_array_equal(scene.rotations, two_blobs_bundle.scene.rotations)
        np.testing.assert_array_equal(scene.scales, two_blobs_bundle.scene.scales)
        np.testing.assert_array_equal(scene.opacities, two_blobs_bundle.scene.opacities)

    def test_metrics_fields_and_line_format(self, two_blobs_bundle):
        dataset = tinted_dataset(two_blobs_bundle)
        rng = np.random.default_rng(2)
        _, _, metrics = optimize_iteration(
            two_blobs_bundle.scene, dataset, rng, AdamState.fresh(len(two_blobs_bundle.scene)))
        assert metrics.iteration == 1
        assert metrics.view_id in {v.view_id for v in two_blobs_bundle.views}
        assert metrics.generation == dataset.generation
        assert re.fullmatch(r"\d+,\d+,\d+,\d+\.\d{8},-?\d+\.\d{8},\d+\.\d{8}",
                            metrics.line())

    def test_empty_dataset_raises(self, two_blobs_bundle):
        empty = EditedDataset(views=(), generation=0, tint=np.ones(3))
        with pytest.raises(ValidationError):
            optimize_iteration(two_blobs_bundle.scene, empty, np.random.default_rng(0),
                               AdamState.fresh(len(two_blobs_bundle.scene)))


class TestRefitRun:
    def test_masked_l1_drops(self, refit_run):
        bundle, dataset, _, final = refit_run
        before = masked_l1(bundle.scene, dataset)
        after = masked_l1(final, dataset)
        assert after < 0.2 * before

    def test_geometry_bit_identical_after_long_run(self, refit_run):
        bundle, _, _, final = refit_run
        np.testing.assert_array_equal(final.positions, bundle.scene.positions)
        np.testing.assert_array_equal(final.rotations, bundle.scene.rotations)
        np.testing.assert_array_equal(final.scales, bundle.scene.scales)
        np.testing.assert_array_equal(final.opacities, bundle.scene.opacities)

    def test_loss_trend_block_averages_decrease(self, refit_run):
        _, _, metrics, _ = refit_run
        totals = np.array([m.loss.total for m in metrics])
        blocks = totals.reshape(5, 200).mean(axis=1)
        assert np.all(np.diff(blocks) < 0.0)

    def test_metrics_stream_contiguous(self, refit_run):
        _, dataset, metrics, _ = refit_run
        assert [m.iteration for m in metrics] == list(range(1, 1001))
        assert all(m.generation == dataset.generation for m in metrics)


class TestBackgroundOptimizer:
    def test_synchronous_matches_manual_loop(self, two_blobs_bundle):
        dataset = tinted_dataset(two_blobs_bundle)
        optimizer = BackgroundOptimizer(two_blobs_bundle.scene, dataset, seed=5)
        via_worker = optimizer.run_iterations(20)

        rng = np.random.default_rng(5)
        scene = two_blobs_bundle.scene
        state = AdamState.fresh(len(scene))
        for _ in range(20):
            scene, state, _ = optimize_iteration(scene, dataset, rng, state)
        np.testing.assert_array_equal(via_worker.sh, scene.sh)

    def test_snapshot_and_status_after_run(self, two_blobs_bundle):
        dataset = tinted_dataset(two_blobs_bundle)
        optimizer = BackgroundOptimizer(two_blobs_bundle.scene, dataset, seed=0)
        final = optimizer.run_iterations(7)
        assert optimizer.snapshot() is final
        status = optimizer.status()
        assert status.iteration == 7
        assert status.generation == dataset.generation
        assert status.ips > 0.0

    def test_swap_dataset_changes_generation(self, two_blobs_bundle):
        first = tinted_dataset(two_blobs_bundle)
        second = build_edited_dataset(two_blobs_bundle.views, empty_cloud(),
                                      (1.0, 1.0, 1.0), two_blobs_bundle.scene,
                                      generation=first.generation + 1)
        seen = []
        optimizer = BackgroundOptimizer(two_blobs_bundle.scene, first, seed=0,
                                        metrics_sink=seen.append)
        optimizer.run_iterations(2)
        optimizer.swap_dataset(second)
        optimizer.run_iterations(1)
        assert [m.generation for m in seen] == [first.generation] * 2 + [second.generation]

    def test_thread_pause_resume_stop(self, two_blobs_bundle):
        dataset = tinted_dataset(two_blobs_bundle)
        seen = []
        optimizer = BackgroundOptimizer(two_blobs_bundle.scene, dataset, seed=0,
                                        metrics_sink=seen.append)
        optimizer.start()
        deadline = time.time() + 20.0
        while len(seen) < 5 and time.time() < deadline:
            time.sleep(0.01)
        assert len(seen) >= 5

        optimizer.pause()
        assert optimizer.paused
        time.sleep(0.1)  # let any in-flight iteration drain
        frozen = len(seen)
        time.sleep(0.3)
        assert len(seen) <= frozen + 1
        snapshot = optimizer.snapshot()
        assert snapshot.sh.shape == two_blobs_bundle.scene.sh.shape

        optimizer.resume()
        deadline = time.time() + 20.0
        while len(seen) <= frozen + 1 and time.time() < deadline:
            time.sleep(0.01)
        assert len(seen) > frozen + 1

        optimizer.stop()
        assert optimizer.stopped
        assert optimizer.snapshot() is not None

    def test_iteration_failure_pauses_loop(self, two_blobs_bundle):
        view = two_blobs_bundle.views[0]
        broken = EditedDataset(
            views=(EditedView(view=view,
                              mask=np.zeros((4, 4), dtype=bool),
                              image=np.zeros((4, 4, 3))),),
            generation=0, tint=np.ones(3))
        optimizer = BackgroundOptimizer(two_blobs_bundle.scene, broken, seed=0)
        optimizer.start()
        deadline = time.time() + 20.0
        while not optimizer.paused and time.time() < deadline:
            time.sleep(0.01)
        assert optimizer.paused
        assert optimizer.snapshot() is two_blobs_bundle.scene
        optimizer.stop()

    def test_run_iterations_rejected_while_threaded(self, two_blobs_bundle):
        dataset = tinted_dataset(two_blobs_bundle)
        optimizer = BackgroundOptimizer(two_blobs_bundle.scene, dataset, seed=0)
        optimizer.start()
        try:
            with pytest.raises(ValidationError):
                optimizer.run_iterations(1)
        finally:
            optimizer.stop()
