"""Desk-scale training: teacher-student regression and a known operator.

Training cannot break equivariance, because the symmetry is structural in
the kernel parametrization; the equivariance error stays at float precision
at every checkpoint.  Freezing the head weights at one (the ablation mode)
costs a large factor in final loss.

Run:  python demos/07_toy_training.py   (about half a minute)
"""

import numpy as np

from csconv import Signature, ToyTask, train_loop
from csconv.train import default_train_settings, make_task_data

sig = Signature(2, 0)

# ---------------------------------------------------------------------------
# Teacher-student: fit another randomly initialized one-layer model.
# ---------------------------------------------------------------------------
task = ToyTask("teacher_student", sig, field_sizes=(16, 16), channels=2,
               width=4, depth=1, seed=0)
report = train_loop(task, **default_train_settings("teacher_student"))
print("teacher-student on (2,0), 16^2 fields:")
print(f"  initial loss {report.initial_loss:.3e}")
print(f"  final loss   {report.final_loss:.3e}"
      f"  ({report.initial_loss / report.final_loss:.0f}x reduction)")
print("  equivariance error at checkpoints:",
      {k: f"{v:.1e}" for k, v in report.equivariance.items()})

# ---------------------------------------------------------------------------
# Same task with the head weights frozen at one: strictly worse.
# ---------------------------------------------------------------------------
ablated = train_loop(
    ToyTask("teacher_student", sig, field_sizes=(16, 16), channels=2,
            width=4, depth=1, head_weights="fixed_one", seed=0),
    **default_train_settings("teacher_student"),
)
print(f"\nfixed-weight head ablation: final loss {ablated.final_loss:.3e} "
      f"({ablated.final_loss / report.final_loss:.0f}x worse)")

# ---------------------------------------------------------------------------
# Learn a known operator: the central-difference gradient of a scalar field.
# ---------------------------------------------------------------------------
grad_task = ToyTask("gradient_operator", sig, field_sizes=(16, 16), channels=1,
                    width=6, depth=1, seed=0)
grad_report = train_loop(grad_task, **default_train_settings("gradient_operator"))
var = float(np.var(make_task_data(grad_task)["y_flat"]))
print(f"\ngradient-operator task: relative MSE {grad_report.final_loss / var:.2e}")
print("  equivariance error at checkpoints:",
      {k: f"{v:.1e}" for k, v in grad_report.equivariance.items()})
