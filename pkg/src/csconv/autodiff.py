"""Minimal reverse-mode differentiation over dense float64 arrays.

Every op in this module accepts either plain ndarrays or :class:`Node`
values and dispatches accordingly, so the same forward code serves both the
verification path (numpy) and the training path (taped).  Gradients flow
only into nodes; ndarray arguments are treated as constants.

Supported ops: add / subtract / multiply (broadcasting), negative,
reciprocal, exp, absolute, sign (zero gradient), square, normal CDF
(gradient is the normal PDF), two-operand einsum, reshape, transpose, flip,
sum, mean, and n-dimensional correlation with zero or circular padding.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import ndtr

__all__ = [
    "Tape",
    "Node",
    "backward",
    "add",
    "subtract",
    "multiply",
    "negative",
    "reciprocal",
    "exp",
    "absolute",
    "sign",
    "square",
    "norm_cdf",
    "einsum",
    "reshape",
    "transpose",
    "flip",
    "asum",
    "mean",
    "correlate",
]

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Tape:
    """Records nodes in creation order (a topological order of the graph)."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._param_names: set[str] = set()
        self._finished = False

    def param(self, value, name: str) -> "Node":
        if name in self._param_names:
            raise ValueError(f"duplicate parameter name {name!r}")
        self._param_names.add(name)
        return Node(self, np.asarray(value, dtype=np.float64), name=name)

    def constant(self, value) -> "Node":
        return Node(self, np.asarray(value, dtype=np.float64))


class Node:
    """One value in the computation graph."""

    __slots__ = ("tape", "value", "name", "_parents", "_vjps", "_idx")

    def __init__(self, tape: Tape, value: np.ndarray, parents=(), vjps=(), name=None):
        self.tape = tape
        self.value = value
        self.name = name
        self._parents = tuple(parents)
        self._vjps = tuple(vjps)
        self._idx = len(tape._nodes)
        tape._nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return negative(self)


def _is_node(x) -> bool:
    return isinstance(x, Node)


def _value(x):
    return x.value if _is_node(x) else np.asarray(x, dtype=np.float64)


def _tape_of(*args) -> Tape:
    for a in args:
        if _is_node(a):
            return a.tape
    raise TypeError("no Node argument")


def _make(args, out_value, vjp_pairs):
    """Create a node whose parents are the Node-typed args.

    ``vjp_pairs`` is a list of (arg, vjp) aligned with args; entries whose
    arg is a constant are dropped.
    """
    parents = [a for a, _ in vjp_pairs if _is_node(a)]
    vjps = [fn for a, fn in vjp_pairs if _is_node(a)]
    return Node(_tape_of(*args), out_value, parents, vjps)


def backward(loss: Node) -> dict[str, np.ndarray]:
    """Accumulate gradients of a scalar loss w.r.t. all named parameters.

    Nodes are visited in reverse creation order, which is a reverse
    topological order, so each node is processed exactly once and the
    accumulation order is deterministic.  A tape supports a single backward
    pass; a second call raises.
    """
    if not _is_node(loss):
        raise TypeError("loss must be a Node")
    if loss.value.shape != ():
        raise ValueError("loss must be scalar")
    tape = loss.tape
    if tape._finished:
        raise RuntimeError("backward was already run on this tape")
    tape._finished = True

    grads: dict[int, np.ndarray] = {loss._idx: np.ones(())}
    out: dict[str, np.ndarray] = {}
    for node in reversed(tape._nodes[: loss._idx + 1]):
        g = grads.pop(node._idx, None)
        if g is None:
            continue
        if node.name is not None:
            out[node.name] = g
        for parent, vjp in zip(node._parents, node._vjps):
            pg = vjp(g)
            acc = grads.get(parent._idx)
            grads[parent._idx] = pg if acc is None else acc + pg
    tape._nodes.clear()
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b):
    av, bv = _value(a), _value(b)
    out = av + bv
    if not (_is_node(a) or _is_node(b)):
        return out
    return _make(
        (a, b),
        out,
        [(a, lambda g: _unbroadcast(g, av.shape)), (b, lambda g: _unbroadcast(g, bv.shape))],
    )


def subtract(a, b):
    av, bv = _value(a), _value(b)
    out = av - bv
    if not (_is_node(a) or _is_node(b)):
        return out
    return _make(
        (a, b),
        out,
        [(a, lambda g: _unbroadcast(g, av.shape)), (b, lambda g: _unbroadcast(-g, bv.shape))],
    )


def multiply(a, b):
    av, bv = _value(a), _value(b)
    out = av * bv
    if not (_is_node(a) or _is_node(b)):
        return out
    return _make(
        (a, b),
        out,
        [
            (a, lambda g: _unbroadcast(g * bv, av.shape)),
            (b, lambda g: _unbroadcast(g * av, bv.shape)),
        ],
    )


def negative(x):
    if not _is_node(x):
        return -_value(x)
    return _make((x,), -x.value, [(x, lambda g: -g)])


def reciprocal(x):
    xv = _value(x)
    out = 1.0 / xv
    if not _is_node(x):
        return out
    return _make((x,), out, [(x, lambda g: -g * out * out)])


def exp(x):
    xv = _value(x)
    out = np.exp(xv)
    if not _is_node(x):
        return out
    return _make((x,), out, [(x, lambda g: g * out)])


def absolute(x):
    xv = _value(x)
    if not _is_node(x):
        return np.abs(xv)
    s = np.sign(xv)  # gradient 0 at 0
    return _make((x,), np.abs(xv), [(x, lambda g: g * s)])


def sign(x):
    xv = _value(x)
    if not _is_node(x):
        return np.sign(xv)
    return _make((x,), np.sign(xv), [(x, lambda g: np.zeros_like(xv))])


def square(x):
    xv = _value(x)
    if not _is_node(x):
        return xv * xv
    return _make((x,), xv * xv, [(x, lambda g: 2.0 * g * xv)])


def norm_cdf(x):
    xv = _value(x)
    out = ndtr(xv)
    if not _is_node(x):
        return out
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * xv * xv)
    return _make((x,), out, [(x, lambda g: g * pdf)])


def einsum(spec: str, a, b):
    """Two-operand einsum; no repeated index within one operand."""
    ins, out_sub = spec.split("->")
    sub_a, sub_b = ins.split(",")
    for s in (sub_a, sub_b):
        if len(set(s)) != len(s):
            raise ValueError(f"einsum operand subscript {s!r} has repeated indices")
    known = set(sub_a) | set(sub_b)
    if not set(out_sub) <= known:
        raise ValueError(f"unknown output index in {spec!r}")
    av, bv = _value(a), _value(b)
    out = np.einsum(spec, av, bv)
    if not (_is_node(a) or _is_node(b)):
        return out
    if not set(sub_a) <= set(out_sub) | set(sub_b):
        raise ValueError(f"{spec!r}: cannot differentiate w.r.t. first operand")
    if not set(sub_b) <= set(out_sub) | set(sub_a):
        raise ValueError(f"{spec!r}: cannot differentiate w.r.t. second operand")
    return _make(
        (a, b),
        out,
        [
            (a, lambda g: np.einsum(f"{out_sub},{sub_b}->{sub_a}", g, bv)),
            (b, lambda g: np.einsum(f"{sub_a},{out_sub}->{sub_b}", av, g)),
        ],
    )


def reshape(x, shape):
    xv = _value(x)
    out = xv.reshape(shape)
    if not _is_node(x):
        return out
    return _make((x,), out, [(x, lambda g: g.reshape(xv.shape))])


def transpose(x, axes):
    xv = _value(x)
    axes = tuple(axes)
    out = np.transpose(xv, axes)
    inv = tuple(np.argsort(axes))
    if not _is_node(x):
        return out
    return _make((x,), out, [(x, lambda g: np.transpose(g, inv))])


def flip(x, axes):
    xv = _value(x)
    axes = tuple(axes)
    out = np.flip(xv, axis=axes)
    if not _is_node(x):
        return out
    return _make((x,), out, [(x, lambda g: np.flip(g, axis=axes))])


def asum(x, axis=None):
    xv = _value(x)
    out = xv.sum(axis=axis)
    if not _is_node(x):
        return out

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, xv.shape).copy()
        gg = np.expand_dims(g, axis)
        return np.broadcast_to(gg, xv.shape).copy()

    return _make((x,), out, [(x, vjp)])


def mean(x):
    xv = _value(x)
    out = xv.mean()
    if not _is_node(x):
        return out
    scale = 1.0 / xv.size
    return _make((x,), out, [(x, lambda g: np.full(xv.shape, g * scale))])


# ---------------------------------------------------------------------------
# n-dimensional correlation
# ---------------------------------------------------------------------------

_SPATIAL = "UVWX"
_KERNEL = "IJKL"


def _pad_spatial(x: np.ndarray, pads: tuple[int, ...], mode: str) -> np.ndarray:
    width = [(0, 0), (0, 0)] + [(r, r) for r in pads]
    if mode == "zero":
        return np.pad(x, width)
    if mode == "circular":
        return np.pad(x, width, mode="wrap")
    raise ValueError(f"unsupported padding mode {mode!r}")


def _corr_valid(xp: np.ndarray, k: np.ndarray) -> np.ndarray:
    d = k.ndim - 2
    win = sliding_window_view(xp, k.shape[2:], axis=tuple(range(2, 2 + d)))
    u, i = _SPATIAL[:d], _KERNEL[:d]
    return np.einsum(f"BC{u}{i},OC{i}->BO{u}", win, k)


def _corr_valid_wrt_kernel(xp: np.ndarray, g: np.ndarray, kshape) -> np.ndarray:
    d = len(kshape) - 2
    win = sliding_window_view(xp, kshape[2:], axis=tuple(range(2, 2 + d)))
    u, i = _SPATIAL[:d], _KERNEL[:d]
    return np.einsum(f"BC{u}{i},BO{u}->OC{i}", win, g)


def _fold_padding(gxp: np.ndarray, pads: tuple[int, ...], mode: str) -> np.ndarray:
    """Map a gradient w.r.t. the padded array back onto the unpadded one."""
    out = gxp
    for ax, r in enumerate(pads, start=2):
        if r == 0:
            continue
        length = out.shape[ax] - 2 * r
        core = np.take(out, range(r, r + length), axis=ax).copy()
        if mode == "circular":
            left = np.take(out, range(0, r), axis=ax)
            right = np.take(out, range(r + length, out.shape[ax]), axis=ax)
            head = [slice(None)] * out.ndim
            tail = [slice(None)] * out.ndim
            head[ax] = slice(0, r)
            tail[ax] = slice(length - r, length)
            core[tuple(tail)] += left
            core[tuple(head)] += right
        out = core
    return out


def correlate(x, k, padding: str = "circular"):
    """Correlate (B, C, Y1..Yd) with a kernel (O, C, K1..Kd); same-size output.

    Kernel sizes must be odd.  ``padding`` is "zero" or "circular"; the
    output spatial shape equals the input
    spatial shape.
    """
    xv, kv = _value(x), _value(k)
    d = kv.ndim - 2
    if xv.ndim != d + 2:
        raise ValueError(f"field rank {xv.ndim} does not match kernel rank {kv.ndim}")
    if xv.shape[1] != kv.shape[1]:
        raise ValueError(f"channel mismatch: field {xv.shape[1]}, kernel {kv.shape[1]}")
    ksizes = kv.shape[2:]
    if any(s % 2 == 0 for s in ksizes):
        raise ValueError(f"kernel sizes must be odd, got {ksizes}")
    if any(ks > ys for ks, ys in zip(ksizes, xv.shape[2:])):
        raise ValueError("kernel larger than field")
    pads = tuple((s - 1) // 2 for s in ksizes)

    xp = _pad_spatial(xv, pads, padding)
    out = _corr_valid(xp, kv)
    if not (_is_node(x) or _is_node(k)):
        return out

    def vjp_x(g):
        full = [(0, 0), (0, 0)] + [(s - 1, s - 1) for s in ksizes]
        gp = np.pad(g, full)
        k_t = np.swapaxes(kv, 0, 1)
        k_flip = np.flip(k_t, axis=tuple(range(2, 2 + d)))
        gxp = _corr_valid(gp, k_flip)
        return _fold_padding(gxp, pads, padding)

    def vjp_k(g):
        return _corr_valid_wrt_kernel(xp, g, kv.shape)

    return _make((x, k), out, [(x, vjp_x), (k, vjp_k)])
