"""Desk-scale training on synthetic multivector-field tasks.

Two regression tasks exercise the full differentiable pipeline end to end:

* ``teacher_student``: fit the outputs of an independently initialized
  one-layer model of the same architecture (realizable by construction);
* ``gradient_operator``: map a scalar-grade field to its central-difference
  spatial gradient placed on the vector grade (an isometry-equivariant
  linear target, hence representable by a steerable kernel).

Optimization is plain gradient descent with an optional cosine decay of the
learning rate; training runs in float64 by default for determinism, with an
opt-in float32 mode.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .algebra import Signature
from .conv import MultivectorField, conv_forward
from .group import GroupElement
from .kernel import KernelConfig, KernelGrid, generate_kernel, init_kernel_params, kernel_operator
from .verify import IsometryAction, grid_point_group, relative_equivariance_error

__all__ = [
    "ToyTask",
    "TrainReport",
    "synth_field",
    "central_difference_gradient",
    "make_task_data",
    "train_loop",
    "default_train_settings",
]

TASK_KINDS = ("teacher_student", "gradient_operator")


def default_train_settings(kind: str) -> dict:
    """Tuned step counts and learning rates per task kind."""
    if kind == "teacher_student":
        return {"steps": 500, "lr": 0.2, "head_fraction": 0.8}
    if kind == "gradient_operator":
        return {"steps": 3000, "lr": 0.2, "head_fraction": 0.85}
    raise ValueError(f"task kind must be one of {TASK_KINDS}")


@dataclass(frozen=True)
class ToyTask:
    kind: str
    sig: Signature
    field_sizes: tuple[int, ...] = (16, 16)
    channels: int = 2
    dataset_size: int = 4
    smoothness: float = 1.0
    kernel_sizes: tuple[int, ...] = (3, 3)
    width: int = 4
    depth: int = 1
    head_weights: str = "grade"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"task kind must be one of {TASK_KINDS}")
        if len(self.field_sizes) != self.sig.d:
            raise ValueError("one field size per axis required")


def _blur_axis(data: np.ndarray, axis: int, radius: float) -> np.ndarray:
    half = int(np.ceil(3.0 * radius))
    offsets = np.arange(-half, half + 1)
    weights = np.exp(-(offsets ** 2) / (2.0 * radius ** 2))
    weights /= weights.sum()
    out = np.zeros_like(data)
    for off, w in zip(offsets, weights):
        out += w * np.roll(data, off, axis=axis)
    return out


def synth_field(sig: Signature, sizes, c: int, smoothness: float, rng) -> MultivectorField:
    """White noise per blade coefficient, smoothed by a separable circular
    Gaussian of the given radius (in cells)."""
    if smoothness < 0:
        raise ValueError("smoothness must be >= 0")
    data = rng.standard_normal((c, *sizes, sig.n_blades))
    if smoothness > 0:
        for axis in range(1, sig.d + 1):
            data = _blur_axis(data, axis, smoothness)
    return MultivectorField(sig, data)


def central_difference_gradient(f: MultivectorField) -> MultivectorField:
    """Vector-grade central difference of the scalar grade, circular boundary."""
    data = np.zeros_like(f.data)
    scalar = f.data[..., 0]
    for j in range(f.sig.d):
        axis = 1 + j
        data[..., 1 << j] = (np.roll(scalar, -1, axis=axis) - np.roll(scalar, 1, axis=axis)) / 2.0
    return MultivectorField(f.sig, data, f.spacing)


def _stack_flat(fields: list[MultivectorField]) -> np.ndarray:
    """Stack fields into the flattened batch layout (B, c*2^d, Y...)."""
    d = fields[0].sig.d
    out = []
    for f in fields:
        x = np.transpose(f.data, (0, d + 1, *range(1, d + 1)))
        out.append(x.reshape(-1, *f.sizes))
    return np.stack(out, axis=0)


def make_task_data(task: ToyTask) -> dict:
    """Deterministic dataset plus student/teacher configurations."""
    rng = np.random.default_rng(task.seed)
    sig = task.sig
    if task.kind == "teacher_student":
        c = task.channels
        inputs = [
            synth_field(sig, task.field_sizes, c, task.smoothness, rng)
            for _ in range(task.dataset_size)
        ]
        teacher_cfg = KernelConfig(
            sig, c_in=c, c_out=c, sizes=task.kernel_sizes, width=task.width,
            depth=task.depth, head_weights="grade", seed=task.seed + 1009,
        )
        teacher = generate_kernel(teacher_cfg)
        targets = [conv_forward(f, teacher, padding="circular") for f in inputs]
        student_cfg = replace(teacher_cfg, seed=task.seed, head_weights=task.head_weights)
    else:
        inputs = []
        for _ in range(task.dataset_size):
            f = synth_field(sig, task.field_sizes, 1, task.smoothness, rng)
            data = np.zeros_like(f.data)
            data[..., 0] = f.data[..., 0]
            inputs.append(MultivectorField(sig, data))
        targets = [central_difference_gradient(f) for f in inputs]
        teacher = None
        student_cfg = KernelConfig(
            sig, c_in=1, c_out=1, sizes=task.kernel_sizes, width=task.width,
            depth=task.depth, head_weights=task.head_weights, seed=task.seed,
        )
    return {
        "inputs": inputs,
        "targets": targets,
        "x_flat": _stack_flat(inputs),
        "y_flat": _stack_flat(targets),
        "student_cfg": student_cfg,
        "teacher": teacher,
    }


def _forward_flat(cfg: KernelConfig, params: dict, grid: KernelGrid, x_flat,
                  padding: str = "circular"):
    """Differentiable student forward on the flattened batch."""
    n = cfg.sig.n_blades
    op = kernel_operator(cfg, params, grid.coords)  # (N, R, C)
    kdata = ad.reshape(
        ad.transpose(op, (1, 2, 0)), (cfg.c_out * n, cfg.c_in * n, *grid.sizes)
    )
    kflip = ad.flip(kdata, tuple(range(2, 2 + cfg.sig.d)))
    out = ad.correlate(x_flat, kflip, padding=padding)
    if "bias" in params:
        # constant shift of each output channel's scalar grade
        scalar_slot = np.eye(n)[0]
        lift = ad.einsum("o,b->ob", params["bias"], scalar_slot)
        out = ad.add(out, ad.reshape(lift, (1, cfg.c_out * n) + (1,) * cfg.sig.d))
    return out


def _loss_and_grads(cfg, params, grid, x_flat, y_flat):
    tape = ad.Tape()
    nodes = {k: tape.param(v, k) for k, v in params.items()}
    pred = _forward_flat(cfg, nodes, grid, x_flat)
    loss = ad.mean(ad.square(ad.subtract(pred, y_flat)))
    value = float(loss.value)
    grads = ad.backward(loss)
    return value, grads


def _head_design(cfg, params, grid, x_flat) -> tuple[np.ndarray, np.ndarray]:
    """Design of the prediction as an affine function of the head weights.

    The generated kernel is exactly linear in ``head.w``, so one forward pass
    per basis weight yields the full map.  Returns the column matrix and the
    zero-weight baseline (nonzero when a scalar bias is configured).
    """
    w0 = params["head.w"]
    probe = dict(params)
    probe["head.w"] = np.zeros_like(w0)
    baseline = np.asarray(_forward_flat(cfg, probe, grid, x_flat)).ravel()
    columns = []
    for idx in range(w0.size):
        w = np.zeros_like(w0)
        w.ravel()[idx] = 1.0
        probe["head.w"] = w
        pred = np.asarray(_forward_flat(cfg, probe, grid, x_flat)).ravel()
        columns.append(pred - baseline)
    return np.stack(columns, axis=1), baseline


class _HeadPhase:
    """Gradient descent on the head-weight quadratic.

    Columns are normalized to unit length first (a fixed diagonal rescaling)
    and the constant learning rate is set to 1 over the largest eigenvalue of
    the normalized normal matrix, estimated by power iteration.
    """

    def __init__(self, a_mat, target, w_init):
        norms = np.linalg.norm(a_mat, axis=0)
        self.scale = np.where(norms > 1e-12, norms, 1.0)
        self.an = a_mat / self.scale
        self.target = target
        v = np.ones(self.an.shape[1]) / np.sqrt(self.an.shape[1])
        lam = 1.0
        for _ in range(30):
            v = self.an.T @ (self.an @ v)
            lam = np.linalg.norm(v)
            v = v / lam
        self.lr = 1.0 / lam
        self.w = w_init * self.scale

    def run(self, steps):
        losses = []
        for _ in range(steps):
            residual = self.an @ self.w - self.target
            losses.append(float(np.mean(residual ** 2)))
            self.w = self.w - self.lr * (self.an.T @ residual)
        return losses

    @property
    def weights(self):
        return self.w / self.scale


def _student_model(cfg, params):
    from .conv import add_scalar_bias

    kernel = generate_kernel(cfg, params=params)
    if "bias" in params:
        return lambda f: add_scalar_bias(conv_forward(f, kernel, padding="circular"),
                                         params["bias"])
    return lambda f: conv_forward(f, kernel, padding="circular")


def _equivariance_probe(task: ToyTask, cfg, params) -> float:
    """Worst relative equivariance error over a few grid isometries."""
    rng = np.random.default_rng(task.seed + 77)
    sig = task.sig
    f = synth_field(sig, task.field_sizes, cfg.c_in, task.smoothness, rng)
    model = _student_model(cfg, params)
    worst = 0.0
    group = grid_point_group(sig)
    picks = [group[i] for i in range(1, len(group), max(1, len(group) // 4))]
    picks.append(GroupElement(sig, np.eye(sig.d)))
    for idx, g in enumerate(picks):
        t = tuple(int(rng.integers(0, s)) for s in task.field_sizes)
        err = relative_equivariance_error(model, IsometryAction(sig, t, g), f)
        worst = max(worst, err)
    return worst


@dataclass
class TrainReport:
    task: ToyTask
    losses: list[float] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)
    equivariance: dict[str, float] = field(default_factory=dict)
    final_params: dict = field(default_factory=dict)
    diverged: bool = False

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    def jsonl(self) -> str:
        return "\n".join(json.dumps(entry) for entry in self.log)


def train_loop(task: ToyTask, steps: int = 500, lr: float = 0.2,
               head_fraction: float = 0.8, cosine: bool = True,
               log_every: int = 50, float32: bool = False) -> TrainReport:
    """Two-phase full-batch gradient descent on the configured toy task.

    Phase one runs plain gradient descent on the head weights alone; since
    the kernel is exactly linear in them, the loss restricted to that block
    is quadratic and the design matrix is computed once, making the steps
    cheap and the tuned constant learning rate reliable.  Phase two descends
    jointly on all parameters with an optional cosine decay from ``lr``.
    ``steps`` is the total number of gradient steps across both phases; the
    head phase is skipped when the head carries no weights (fixed_one mode).

    The report carries the loss trajectory, JSONL-able log entries with the
    equivariance error at logged steps, and the final parameters.  A NaN
    loss marks the report as diverged instead of raising.
    """
    data = make_task_data(task)
    cfg = data["student_cfg"]
    grid = KernelGrid.centered(task.sig, cfg.sizes)
    params = init_kernel_params(cfg, grid.n_points, rng=np.random.default_rng(task.seed))
    x_flat, y_flat = data["x_flat"], data["y_flat"]

    # opt-in float32 mode: the training state (data and parameters) is held at
    # float32 precision; the shared engine itself stays float64
    def quantize(arr):
        return arr.astype(np.float32).astype(np.float64) if float32 else arr

    if float32:
        x_flat, y_flat = quantize(x_flat), quantize(y_flat)
        params = {k: quantize(np.asarray(v)) for k, v in params.items()}

    report = TrainReport(task=task)
    report.equivariance["init"] = _equivariance_probe(task, cfg, params)

    head_steps = int(round(head_fraction * steps)) if "head.w" in params else 0
    joint_steps = steps - head_steps
    mid_step = steps // 2

    def log(step, loss):
        report.log.append(
            {"step": step, "loss": loss, "equiv_err": _equivariance_probe(task, cfg, params)}
        )

    if head_steps:
        design, baseline = _head_design(cfg, params, grid, x_flat)
        phase = _HeadPhase(design, y_flat.ravel() - baseline, params["head.w"].ravel())
        for chunk in (min(mid_step, head_steps), head_steps - min(mid_step, head_steps)):
            if chunk == 0:
                continue
            report.losses.extend(phase.run(chunk))
            params["head.w"] = quantize(phase.weights.reshape(params["head.w"].shape))
            if len(report.losses) == mid_step:
                report.equivariance["mid"] = _equivariance_probe(task, cfg, params)
        for step in range(0, head_steps, log_every):
            report.log.append({"step": step, "loss": report.losses[step], "equiv_err": None})
        log(head_steps - 1, report.losses[-1])
    else:
        loss0, _ = _loss_and_grads(cfg, params, grid, x_flat, y_flat)
        report.losses.append(loss0)
        log(0, loss0)

    lr_floor = 0.01 * lr
    for j in range(joint_steps):
        step = head_steps + j
        loss, grads = _loss_and_grads(cfg, params, grid, x_flat, y_flat)
        if head_steps or j > 0:
            report.losses.append(loss)
        else:
            report.losses[-1] = loss
        if not np.isfinite(loss):
            report.diverged = True
            report.log.append({"step": step, "loss": loss, "equiv_err": None})
            break
        if step % log_every == 0:
            log(step, loss)
        if step == mid_step:
            report.equivariance["mid"] = _equivariance_probe(task, cfg, params)
        rate = lr_floor + 0.5 * (lr - lr_floor) * (1 + np.cos(np.pi * j / max(joint_steps, 1))) \
            if cosine else lr
        for name, g in grads.items():
            params[name] = quantize(params[name] - rate * g)

    if not report.diverged and joint_steps:
        final_loss, _ = _loss_and_grads(cfg, params, grid, x_flat, y_flat)
        report.losses.append(final_loss)
        log(steps, final_loss)
    report.equivariance.setdefault("mid", report.equivariance["init"])
    report.equivariance["end"] = _equivariance_probe(task, cfg, params)
    report.final_params = params
    return report
