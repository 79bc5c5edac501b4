"""Command-line front end: Cayley-table dumps, kernel generation, verification
suites, and toy training runs.

Every command is deterministic given its configuration and seed.  Exit codes:
0 success, 1 check or training failure, 2 usage error.  ``CSK_THREADS`` caps
worker parallelism; the current implementation computes sequentially, so the
cap is accepted and recorded but does not change results.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .algebra import Signature, blade_grade, blade_label, build_cayley
from .kernel import HEAD_MODES, KernelConfig, generate_kernel, init_kernel_params, kernel_operator
from .serialization import (
    kernel_to_csv,
    kernel_to_pgms,
    params_to_json,
    save_kernel_blob,
)
from .train import ToyTask, default_train_settings, train_loop
from .verify import SUITES, run_suite, steerability_error
from .group import compose, sample_boost, sample_rotation

CONFIG_VERSION = 1

_CONFIG_KEYS = {
    "version", "signature", "grid", "channels", "width", "depth",
    "head_weights", "seed", "steps", "lr", "suite", "task", "tolerance", "out",
}


@dataclass
class RunConfig:
    signature: tuple[int, int] = (2, 0)
    grid: tuple[int, ...] = (7, 7)
    channels: tuple[int, int] = (1, 1)
    width: int = 8
    depth: int = 2
    head_weights: str = "grade"
    seed: int = 0
    steps: int | None = None
    lr: float | None = None
    suite: str | None = None
    task: str = "teacher_student"
    tolerance: float = 1e-9
    out: str | None = None

    @property
    def sig(self) -> Signature:
        return Signature(*self.signature)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    obj = json.loads(Path(path).read_text())
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if obj.get("version") != CONFIG_VERSION:
        raise ValueError(f"config version must be {CONFIG_VERSION}")
    obj.pop("version")
    return obj


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(","))


def _merge_config(args) -> RunConfig:
    cfg = RunConfig()
    file_values = _load_config(getattr(args, "config", None))
    for key, value in file_values.items():
        setattr(cfg, key, tuple(value) if isinstance(value, list) else value)
    for field_ in fields(RunConfig):
        cli_val = getattr(args, field_.name, None)
        if cli_val is not None:
            setattr(cfg, field_.name, cli_val)
    return cfg


def max_threads() -> int:
    raw = os.environ.get("CSK_THREADS", "")
    if not raw:
        return 1
    value = int(raw)
    if value < 1:
        raise ValueError("CSK_THREADS must be a positive integer")
    return value


# ---------------------------------------------------------------------------
# cayley
# ---------------------------------------------------------------------------

def _label_to_mask(label: str) -> int:
    if label == "1":
        return 0
    mask = 0
    for ch in label[1:]:
        mask |= 1 << (int(ch) - 1)
    return mask


def cayley_to_csv(sig: Signature) -> str:
    """Multiplication table as CSV: cell (A, B) holds the signed product blade.

    Rows and columns are presented grade by grade (1, e1, .., e12, ..); the
    in-memory layout stays mask-ordered.
    """
    table = build_cayley(sig)
    n = sig.n_blades
    order = sorted(range(n), key=lambda m: (blade_grade(m), m))
    labels = [blade_label(m) for m in order]
    lines = ["," + ",".join(labels)]
    for a in order:
        cells = []
        for b in order:
            c = a ^ b
            sign = table.entries[c, a, b]
            cells.append(("-" if sign < 0 else "") + blade_label(c))
        lines.append(blade_label(a) + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def cayley_from_csv(text: str) -> np.ndarray:
    """Rebuild the dense mask-ordered structure-constant tensor from the CSV."""
    rows = [line.split(",") for line in text.strip().splitlines()]
    col_masks = [_label_to_mask(lab) for lab in rows[0][1:]]
    n = len(col_masks)
    entries = np.zeros((n, n, n))
    for row in rows[1:]:
        a = _label_to_mask(row[0])
        for b, cell in zip(col_masks, row[1:]):
            sign = -1.0 if cell.startswith("-") else 1.0
            entries[_label_to_mask(cell.lstrip("-")), a, b] = sign
    return entries


def cmd_cayley(args) -> int:
    cfg = _merge_config(args)
    csv_text = cayley_to_csv(cfg.sig)
    sys.stdout.write(csv_text)
    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"cayley_p{cfg.sig.p}q{cfg.sig.q}.csv").write_text(csv_text)
    return 0


# ---------------------------------------------------------------------------
# kernel-gen
# ---------------------------------------------------------------------------

def cmd_kernel_gen(args) -> int:
    cfg = _merge_config(args)
    sig = cfg.sig
    kcfg = KernelConfig(
        sig, c_in=cfg.channels[0], c_out=cfg.channels[1], sizes=cfg.grid,
        width=cfg.width, depth=cfg.depth, head_weights=cfg.head_weights, seed=cfg.seed,
    )
    params = init_kernel_params(kcfg, int(np.prod(cfg.grid)),
                                rng=np.random.default_rng(cfg.seed))
    kernel = generate_kernel(kcfg, params=params)

    rng = np.random.default_rng(cfg.seed + 1)
    k_fn = lambda pts: np.asarray(kernel_operator(kcfg, params, pts))
    worst = 0.0
    for _ in range(10):
        g = sample_rotation(sig, rng)
        if sig.p and sig.q:
            g = compose(g, sample_boost(sig, rng))
        pts = rng.uniform(-1.0, 1.0, size=(2, sig.d))
        worst = max(worst, steerability_error(k_fn, g, pts))
    print(f"steerability self-check: max relative error {worst:.3e} "
          f"(head mode {kcfg.head_weights})")

    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        save_kernel_blob(kernel, outdir / "kernel.blob")
        kernel_to_csv(kernel, outdir / "kernel.csv")
        (outdir / "kernel_params.json").write_text(params_to_json(params))
        if len(cfg.grid) == 2:
            images = kernel_to_pgms(kernel, outdir / "blocks")
            print(f"wrote {len(images)} block images")
        print(f"kernel saved under {outdir}")

    if kcfg.head_weights != "blade" and worst > cfg.tolerance:
        print("self-check FAILED", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    cfg = _merge_config(args)
    if cfg.suite is None:
        print("verify needs --suite", file=sys.stderr)
        return 2
    try:
        reports = run_suite(cfg.suite, cfg.sig, seed=cfg.seed)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 2
    for rep in reports:
        print(rep.to_json())
    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"verify_{cfg.suite}_p{cfg.sig.p}q{cfg.sig.q}.json"
        path.write_text("[" + ",\n".join(r.to_json() for r in reports) + "]\n")
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _merge_config(args)
    task = ToyTask(
        cfg.task, cfg.sig,
        field_sizes=(16,) * cfg.sig.d,
        channels=cfg.channels[0] if cfg.task == "gradient_operator" else 2,
        width=cfg.width if cfg.width != 8 else (6 if cfg.task == "gradient_operator" else 4),
        depth=1,
        head_weights=cfg.head_weights,
        seed=cfg.seed,
    )
    settings = default_train_settings(cfg.task)
    if cfg.steps is not None:
        settings["steps"] = cfg.steps
    if cfg.lr is not None:
        settings["lr"] = cfg.lr
    report = train_loop(task, **settings)
    print(f"initial loss {report.initial_loss:.6e}")
    print(f"final loss   {report.final_loss:.6e}")
    print(f"equivariance error (init/mid/end): "
          + "/".join(f"{report.equivariance[k]:.2e}" for k in ("init", "mid", "end")))
    if cfg.out:
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "report.jsonl").write_text(report.jsonl() + "\n")
        (outdir / "model_params.json").write_text(params_to_json(report.final_params))
    return 1 if report.diverged else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csconv",
        description="Steerable convolutions on pseudo-Euclidean grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--sig", dest="signature", type=_parse_ints, metavar="P,Q",
                       default=None, help="metric signature, e.g. 2,0 or 1,1")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--config", type=str, default=None,
                       help="JSON config file; flags override its keys")

    p = sub.add_parser("cayley", help="dump the geometric-product table as CSV")
    common(p)
    p.set_defaults(fn=cmd_cayley)

    p = sub.add_parser("kernel-gen", help="generate a steerable kernel and export it")
    common(p)
    p.add_argument("--grid", dest="grid", type=_parse_ints, metavar="X1,X2,..", default=None)
    p.add_argument("--channels", dest="channels", type=_parse_ints, metavar="CIN,COUT",
                   default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--head-weights", dest="head_weights", choices=HEAD_MODES, default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.set_defaults(fn=cmd_kernel_gen)

    p = sub.add_parser("verify", help="run a named verification suite")
    common(p)
    p.add_argument("--suite", type=str, default=None, choices=None,
                   help=f"one of {sorted(SUITES)}")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("train", help="run a toy training task")
    common(p)
    p.add_argument("--task", type=str, default=None,
                   choices=("teacher_student", "gradient_operator"))
    p.add_argument("--channels", dest="channels", type=_parse_ints, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--head-weights", dest="head_weights", choices=HEAD_MODES, default=None)
    p.set_defaults(fn=cmd_train)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        max_threads()
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
