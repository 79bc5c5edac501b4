import json

import numpy as np
import pytest

from csconv import autodiff as ad
from csconv.algebra import Signature
from csconv.cgenn import linear_layer
from csconv.train import (
    ToyTask,
    central_difference_gradient,
    default_train_settings,
    make_task_data,
    synth_field,
    train_loop,
)

SIG = Signature(2, 0)


def test_task_validation():
    with pytest.raises(ValueError):
        ToyTask("bogus", SIG)
    with pytest.raises(ValueError):
        ToyTask("teacher_student", SIG, field_sizes=(16,))


def test_synth_field_statistics():
    rng = np.random.default_rng(0)
    f = synth_field(SIG, (64, 64), 1, 0.0, rng)
    var = f.data.var()
    assert abs(var - 1.0) < 0.1
    # grid mean within 3 sigma of the standard error
    mean = f.data.mean()
    se = 1.0 / np.sqrt(f.data.size)
    assert abs(mean) < 3 * se

    a = synth_field(SIG, (8, 8), 2, 1.0, np.random.default_rng(5)).data
    b = synth_field(SIG, (8, 8), 2, 1.0, np.random.default_rng(5)).data
    assert np.array_equal(a, b)

    smooth = synth_field(SIG, (32, 32), 1, 2.0, np.random.default_rng(1))
    assert smooth.data.var() < 0.5  # blur shrinks variance


def test_central_difference_gradient():
    rng = np.random.default_rng(2)
    f = synth_field(SIG, (6, 6), 1, 0.0, rng)
    g = central_difference_gradient(f)
    s = f.data[0, :, :, 0]
    expected_x = (np.roll(s, -1, axis=0) - np.roll(s, 1, axis=0)) / 2
    assert np.allclose(g.data[0, :, :, 1], expected_x)
    assert np.all(g.data[..., 0] == 0.0)
    assert np.all(g.data[..., 3] == 0.0)


def test_dataset_deterministic():
    task = ToyTask("teacher_student", SIG, field_sizes=(8, 8), channels=1, seed=3)
    a = make_task_data(task)
    b = make_task_data(task)
    assert np.array_equal(a["x_flat"], b["x_flat"])
    assert np.array_equal(a["y_flat"], b["y_flat"])


def test_zero_steps_reports_initial_state():
    task = ToyTask("teacher_student", SIG, field_sizes=(8, 8), channels=1, seed=1)
    rep = train_loop(task, steps=0, lr=0.1)
    assert len(rep.losses) == 1
    assert rep.initial_loss == rep.final_loss
    assert not rep.diverged
    lines = rep.jsonl().splitlines()
    assert json.loads(lines[0])["step"] == 0


def test_teacher_student_converges_100x():
    task = ToyTask("teacher_student", SIG, field_sizes=(16, 16), channels=2,
                   width=4, depth=1, seed=0)
    settings = default_train_settings("teacher_student")
    assert settings["steps"] <= 500
    rep = train_loop(task, **settings)
    assert not rep.diverged
    assert rep.initial_loss / rep.final_loss >= 100.0
    # structural equivariance survives training at every checkpoint
    assert all(v < 1e-6 for v in rep.equivariance.values())
    assert all(e["equiv_err"] is None or e["equiv_err"] < 1e-6 for e in rep.log)


def test_teacher_student_second_seed():
    task = ToyTask("teacher_student", SIG, field_sizes=(16, 16), channels=2,
                   width=4, depth=1, seed=1)
    rep = train_loop(task, **default_train_settings("teacher_student"))
    assert rep.initial_loss / rep.final_loss >= 100.0


def test_gradient_operator_reaches_target():
    task = ToyTask("gradient_operator", SIG, field_sizes=(16, 16), channels=1,
                   width=6, depth=1, seed=0)
    rep = train_loop(task, **default_train_settings("gradient_operator"))
    var = float(np.var(make_task_data(task)["y_flat"]))
    assert rep.final_loss / var <= 1e-3
    assert all(v < 1e-6 for v in rep.equivariance.values())


def test_fixed_head_ablation_is_worse():
    base = dict(field_sizes=(16, 16), channels=2, width=4, depth=1, seed=0)
    settings = default_train_settings("teacher_student")
    learned = train_loop(ToyTask("teacher_student", SIG, **base), **settings)
    ablated = train_loop(
        ToyTask("teacher_student", SIG, head_weights="fixed_one", **base), **settings
    )
    assert ablated.final_loss > learned.final_loss


def test_linear_layer_descent_is_monotone():
    # fitting one grade-mixing linear layer to another is a quadratic problem;
    # small-step gradient descent must never increase the loss
    rng = np.random.default_rng(7)
    sig = SIG
    x = rng.standard_normal((6, 2, 4))
    w_true = rng.standard_normal((3, 2, 2))
    target = linear_layer(w_true, x)
    w = rng.standard_normal((3, 2, 2))
    prev = np.inf
    for _ in range(200):
        tape = ad.Tape()
        wn = tape.param(w, "w")
        loss = ad.mean(ad.square(ad.subtract(linear_layer(wn, x), target)))
        val = float(loss.value)
        assert val <= prev + 1e-15
        prev = val
        g = ad.backward(loss)["w"]
        w = w - 0.1 * g
    assert prev < 0.1 * 1.62  # well below the initial loss


def test_float32_mode_trains_and_stays_equivariant():
    task = ToyTask("teacher_student", SIG, field_sizes=(8, 8), channels=1,
                   width=3, depth=1, seed=4)
    rep = train_loop(task, steps=100, lr=0.2, float32=True)
    assert not rep.diverged
    assert rep.final_loss < rep.initial_loss
    # parameters are held at float32 precision
    w = rep.final_params["head.w"]
    assert np.array_equal(w, w.astype(np.float32).astype(np.float64))
    assert all(v < 1e-5 for v in rep.equivariance.values())


def test_report_jsonl_schema():
    task = ToyTask("teacher_student", SIG, field_sizes=(8, 8), channels=1, seed=2)
    rep = train_loop(task, steps=20, lr=0.1, log_every=10)
    for line in rep.jsonl().splitlines():
        entry = json.loads(line)
        assert set(entry) == {"step", "loss", "equiv_err"}


def test_scalar_bias_trains_and_stays_equivariant():
    # bias on the scalar grade is an invariant shift; enabling it must not
    # break equivariance, and the bias must receive gradient
    from dataclasses import replace

    from csconv.kernel import KernelGrid, init_kernel_params
    from csconv.train import _loss_and_grads, make_task_data

    task = ToyTask("teacher_student", SIG, field_sizes=(8, 8), channels=1,
                   width=3, depth=1, seed=5)
    data = make_task_data(task)
    cfg = replace(data["student_cfg"], scalar_bias=True)
    grid = KernelGrid.centered(SIG, cfg.sizes)
    params = init_kernel_params(cfg, grid.n_points, rng=np.random.default_rng(5))
    params["bias"] = np.array([0.3])
    loss, grads = _loss_and_grads(cfg, params, grid, data["x_flat"], data["y_flat"])
    assert "bias" in grads and np.any(grads["bias"] != 0.0)

    from csconv.train import _equivariance_probe

    assert _equivariance_probe(task, cfg, params) < 1e-12
