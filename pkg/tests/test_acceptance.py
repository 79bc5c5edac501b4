"""Acceptance criteria, one test per criterion, each printing a pass line.

Field-level isometry coverage (criterion 5) runs every element of the
grid-preserving point group combined with deterministic translations plus a
pure-translation sweep; arbitrary (t, g) factor into these two kinds, so
equivariance under both factors covers the full grid-preserving subgroup.
"""

import time

import numpy as np
import pytest

from csconv.algebra import (
    Multivector,
    Signature,
    build_cayley,
    geometric_product,
)
from csconv.kernel import KernelConfig, KernelGrid, init_kernel_params
from csconv.train import ToyTask, default_train_settings, make_task_data, train_loop
from csconv.verify import VERIFY_SIGS, run_suite

from oracles import cayley_oracle

ALL_SIGS_D4 = [Signature(p, d - p) for d in range(1, 5) for p in range(d + 1)]


def _announce(num, started, detail):
    print(f"\n[PASS] criterion {num} ({time.time() - started:.1f}s): {detail}")


@pytest.fixture(scope="module")
def teacher_student_runs():
    base = dict(field_sizes=(16, 16), channels=2, width=4, depth=1, seed=0)
    settings = default_train_settings("teacher_student")
    started = time.time()
    learned = train_loop(ToyTask("teacher_student", Signature(2, 0), **base), **settings)
    ablated = train_loop(
        ToyTask("teacher_student", Signature(2, 0), head_weights="fixed_one", **base),
        **settings,
    )
    return learned, ablated, settings, time.time() - started


def test_criterion_1_algebra_axioms():
    started = time.time()
    rng = np.random.default_rng(0)
    worst = 0.0
    for sig in ALL_SIGS_D4:
        table = build_cayley(sig)
        assert np.array_equal(table.entries, cayley_oracle(sig))
        one = Multivector.unit(sig)
        metric = sig.metric_diag
        for _ in range(20):
            x = Multivector(sig, rng.standard_normal(sig.n_blades))
            y = Multivector(sig, rng.standard_normal(sig.n_blades))
            z = Multivector(sig, rng.standard_normal(sig.n_blades))
            left = geometric_product(geometric_product(x, y), z)
            right = geometric_product(x, geometric_product(y, z))
            scale = max(np.max(np.abs(left.coeffs)), 1.0)
            worst = max(worst, np.max(np.abs(left.coeffs - right.coeffs)) / scale)
            assert np.allclose(geometric_product(one, x).coeffs, x.coeffs, atol=0)
            assert np.allclose(geometric_product(x, one).coeffs, x.coeffs, atol=0)

            v = rng.standard_normal(sig.d)
            vec = Multivector(sig, np.zeros(sig.n_blades))
            for i in range(sig.d):
                vec.coeffs[1 << i] = v[i]
            sq = geometric_product(vec, vec)
            eta = float(np.sum(metric * v * v))
            worst = max(worst, abs(sq.coeffs[0] - eta) / max(abs(eta), 1.0))
            assert np.all(sq.coeffs[1:] == 0.0)

            w = rng.standard_normal(sig.d)
            vec2 = Multivector(sig, np.zeros(sig.n_blades))
            for i in range(sig.d):
                vec2.coeffs[1 << i] = w[i]
            lhs = geometric_product(vec2, vec)
            rhs = (
                -geometric_product(vec, vec2)
                + 2.0 * float(np.sum(metric * v * w)) * one
            )
            worst = max(worst, np.max(np.abs(lhs.coeffs - rhs.coeffs)))
    elapsed = time.time() - started
    assert worst < 1e-12
    assert elapsed < 10.0
    _announce(1, started, f"algebra axioms on {len(ALL_SIGS_D4)} signatures, "
                          f"worst residual {worst:.2e}")


def test_criterion_2_representation_laws():
    started = time.time()
    worst = 0.0
    for sig in VERIFY_SIGS:
        reports = run_suite("representation", sig, seed=1)
        assert all(r.passed for r in reports), [r.to_json() for r in reports]
        worst = max(worst, max(r.max_err for r in reports))
    elapsed = time.time() - started
    assert elapsed < 20.0
    _announce(2, started, f"representation laws, 200 elements x 4 signatures, "
                          f"worst error {worst:.2e} < 1e-9")


def test_criterion_3_kernel_head_equivariance():
    started = time.time()
    worst = 0.0
    for sig in VERIFY_SIGS:
        reports = run_suite("kernel-head", sig, seed=2)
        assert all(r.passed for r in reports)
        worst = max(worst, max(r.max_err for r in reports))
    elapsed = time.time() - started
    assert elapsed < 10.0
    _announce(3, started, f"kernel head equivariance, 100 triples x 4 signatures, "
                          f"worst error {worst:.2e} < 1e-9")


def test_criterion_4_kernel_steerability():
    started = time.time()
    worst = 0.0
    for sig in VERIFY_SIGS:
        reports = run_suite("steerability", sig, seed=3)
        by_name = {r.check: r for r in reports}
        assert by_name["steerability"].passed
        assert by_name["steerability"].n_samples == 100
        assert by_name["steerability_negative_control"].passed  # error > 0.1
        worst = max(worst, by_name["steerability"].max_err)
    elapsed = time.time() - started
    assert elapsed < 60.0
    _announce(4, started, f"steerability at analytic points incl. rapidity-2 boosts, "
                          f"worst error {worst:.2e} < 1e-9")


def test_criterion_5_grid_equivariance():
    started = time.time()
    worst = 0.0
    control = np.inf
    for sig in VERIFY_SIGS:
        reports = run_suite("equivariance", sig, seed=4)
        by_name = {r.check: r for r in reports}
        assert by_name["grid_equivariance_point_group"].passed
        assert by_name["grid_equivariance_translations"].passed
        assert by_name["grid_equivariance_negative_control"].passed
        worst = max(worst, by_name["grid_equivariance_point_group"].max_err)
        control = min(control, by_name["grid_equivariance_negative_control"].max_err)
    elapsed = time.time() - started
    assert worst < 1e-6
    assert control > 0.05
    assert elapsed < 60.0
    _announce(5, started, f"2-layer model grid equivariance, worst error {worst:.2e} "
                          f"< 1e-6; negative control {control:.2f} > 0.05")


def test_criterion_6_angular_spectrum():
    started = time.time()
    reports = run_suite("spectrum", Signature(2, 0), seed=5)
    by_name = {r.check: r for r in reports}
    single = by_name["single_kernel_vector_vector_freq2"]
    composed = by_name["composed_kernel_freq2_recovery"]
    assert single.passed and single.max_err < 0.02
    assert composed.passed and composed.max_err > 0.5
    elapsed = time.time() - started
    assert elapsed < 30.0
    _announce(6, started, f"single-kernel freq-2 fraction {single.max_err:.4f} < 2%, "
                          f"composed recovery {composed.max_err:.2f} > 50%")


def _numeric_loss(cfg, params, grid, x_flat, y_flat):
    from csconv.train import _forward_flat

    pred = _forward_flat(cfg, params, grid, x_flat)
    return float(np.mean((np.asarray(pred) - y_flat) ** 2))


def test_criterion_7_gradient_correctness():
    started = time.time()
    checked = 0
    worst = 0.0
    for sig in VERIFY_SIGS:
        rng = np.random.default_rng(10 + sig.p * 4 + sig.q)
        for rep in range(10):
            sizes = (3,) * sig.d
            fsizes = (5,) * sig.d if sig.d < 3 else (4,) * sig.d
            cfg = KernelConfig(
                sig, c_in=1, c_out=1, sizes=sizes, width=2, depth=1,
                head_weights="grade", seed=int(rng.integers(0, 2 ** 31)),
            )
            grid = KernelGrid.centered(sig, sizes)
            params = init_kernel_params(cfg, grid.n_points,
                                        rng=np.random.default_rng(cfg.seed))
            x_flat = np.random.default_rng(cfg.seed + 1).standard_normal(
                (1, sig.n_blades, *fsizes))
            y_flat = np.random.default_rng(cfg.seed + 2).standard_normal(x_flat.shape)

            from csconv.train import _loss_and_grads

            _, grads = _loss_and_grads(cfg, dict(params), grid, x_flat, y_flat)
            h = 1e-5
            for name, value in params.items():
                flat = value.reshape(-1) if value.ndim else value.reshape(1)
                g_flat = grads[name].reshape(-1) if grads[name].ndim else grads[name].reshape(1)
                for idx in range(flat.size):
                    trial = {k: v.copy() for k, v in params.items()}
                    tview = trial[name].reshape(-1) if trial[name].ndim else trial[name].reshape(1)
                    tview[idx] += h
                    up = _numeric_loss(cfg, trial, grid, x_flat, y_flat)
                    tview[idx] -= 2 * h
                    down = _numeric_loss(cfg, trial, grid, x_flat, y_flat)
                    fd = (up - down) / (2 * h)
                    got = float(g_flat[idx])
                    checked += 1
                    # relative tolerance 1e-5 with an absolute floor of 1e-8
                    bound = max(1e-5 * max(abs(fd), abs(got)), 1e-8)
                    dev = abs(got - fd)
                    assert dev <= bound, f"{sig.as_tuple()} {name}[{idx}]: ad={got} fd={fd}"
                    worst = max(worst, dev / bound)
    elapsed = time.time() - started
    assert elapsed < 60.0
    _announce(7, started, f"reverse-mode vs central differences on {checked} "
                          f"parameters (10 configs x 4 signatures), worst deviation "
                          f"at {100 * worst:.1f}% of tolerance")


def test_criterion_8_toy_training(teacher_student_runs):
    started = time.time()
    learned, _, settings, train_time = teacher_student_runs
    assert settings["steps"] <= 500
    assert not learned.diverged
    ratio = learned.initial_loss / learned.final_loss
    assert ratio >= 100.0
    assert all(v < 1e-6 for v in learned.equivariance.values())
    assert all(e["equiv_err"] is None or e["equiv_err"] < 1e-6 for e in learned.log)

    grad_task = ToyTask("gradient_operator", Signature(2, 0), field_sizes=(16, 16),
                        channels=1, width=6, depth=1, seed=0)
    grad_report = train_loop(grad_task, **default_train_settings("gradient_operator"))
    var = float(np.var(make_task_data(grad_task)["y_flat"]))
    rel = grad_report.final_loss / var
    assert rel <= 1e-3
    assert all(v < 1e-6 for v in grad_report.equivariance.values())
    elapsed = (time.time() - started) + train_time
    assert elapsed < 300.0
    _announce(8, started, f"teacher-student {ratio:.0f}x reduction in "
                          f"{settings['steps']} steps; gradient task rel MSE {rel:.1e} <= 1e-3")


def test_criterion_9_head_weight_ablation(teacher_student_runs):
    started = time.time()
    learned, ablated, _, train_time = teacher_student_runs
    assert not ablated.diverged
    assert ablated.final_loss > learned.final_loss
    assert train_time < 300.0
    _announce(9, started, f"fixed-weight head final loss {ablated.final_loss:.2e} "
                          f"strictly worse than learned {learned.final_loss:.2e}")
