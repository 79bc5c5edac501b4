"""Convolution of multivector fields with steerable kernels.

A field is a dense array (c, Y_1..Y_d, 2^d).  The convolution realizes

    L(f)(u) = sum_v K(v)[f(u - v)] * dvol,

a true convolution: multivector axes are flattened into channels, the
kernel is flipped once along every spatial axis, and a dense correlation is
applied.  Padding is either circular (exact equivariance on periodic grids)
or zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .algebra import Signature
from .cgenn import mv_activation
from .kernel import SteerableKernel

__all__ = [
    "MultivectorField",
    "flatten_field",
    "unflatten_field",
    "conv_forward",
    "apply_kernel_data",
    "field_activation",
    "model_forward",
    "add_scalar_bias",
]


@dataclass(frozen=True)
class MultivectorField:
    """Grid of multivector channels: data (c, Y_1..Y_d, 2^d)."""

    sig: Signature
    data: np.ndarray
    spacing: tuple[float, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != self.sig.d + 2:
            raise ValueError(
                f"field must have rank {self.sig.d + 2} (c, grid, blades), got {data.ndim}"
            )
        if data.shape[-1] != self.sig.n_blades:
            raise ValueError(f"blade axis has size {data.shape[-1]}, expected {self.sig.n_blades}")
        if not np.all(np.isfinite(data)):
            raise ValueError("field data must be finite")
        spacing = self.spacing or (1.0,) * self.sig.d
        if len(spacing) != self.sig.d:
            raise ValueError("one grid spacing per axis required")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", tuple(float(s) for s in spacing))

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.data.shape[1:-1]


def flatten_field(data, d: int):
    """(c, Y..., 2^d) -> (1, c*2^d, Y...): blade axis merged into channels."""
    shape = np.shape(ad._value(data))
    c, sizes, n = shape[0], shape[1:-1], shape[-1]
    x = ad.transpose(data, (0, d + 1, *range(1, d + 1)))
    return ad.reshape(x, (1, c * n, *sizes))


def unflatten_field(flat, c: int, d: int):
    """(1, c*2^d, Y...) -> (c, Y..., 2^d)."""
    shape = np.shape(ad._value(flat))
    n = shape[1] // c
    sizes = shape[2:]
    x = ad.reshape(flat, (c, n, *sizes))
    return ad.transpose(x, (0, *range(2, d + 2), 1))


def apply_kernel_data(field_data, kernel_data, d: int, c_out: int,
                      padding: str = "circular", scale: float = 1.0):
    """Dispatch-capable core of the convolution; returns (c_out, Y..., 2^d)."""
    flat = flatten_field(field_data, d)
    flipped = ad.flip(kernel_data, tuple(range(2, 2 + d)))
    out = ad.correlate(flat, flipped, padding=padding)
    if scale != 1.0:
        out = ad.multiply(out, float(scale))
    return unflatten_field(out, c_out, d)


def conv_forward(f: MultivectorField, kernel: SteerableKernel,
                 padding: str = "circular") -> MultivectorField:
    """Convolve a multivector field with a steerable kernel.

    The volume element (product of grid spacings) is folded into the kernel
    scale; with unit spacing this is the plain discrete sum.
    """
    if f.sig != kernel.sig:
        raise ValueError("field and kernel signatures differ")
    if f.channels != kernel.c_in:
        raise ValueError(f"field has {f.channels} channels, kernel expects {kernel.c_in}")
    if any(ks > ys for ks, ys in zip(kernel.grid.sizes, f.sizes)):
        raise ValueError("kernel does not fit inside the field")
    scale = float(np.prod(f.spacing))
    out = apply_kernel_data(f.data, kernel.data, f.sig.d, kernel.c_out, padding, scale)
    return MultivectorField(f.sig, out, f.spacing)


def field_activation(f: MultivectorField) -> MultivectorField:
    """Pointwise multivector gate applied per channel and grid point."""
    d = f.sig.d
    c = f.channels
    flat = ad.reshape(f.data, (-1, 1, f.sig.n_blades))
    out = mv_activation(flat)
    return MultivectorField(f.sig, np.reshape(out, f.data.shape), f.spacing)


def add_scalar_bias(f: MultivectorField, bias: np.ndarray) -> MultivectorField:
    """Add one constant per channel to the scalar grade (an invariant shift)."""
    data = f.data.copy()
    data[(slice(None),) + (slice(None),) * f.sig.d + (0,)] += np.reshape(
        bias, (-1,) + (1,) * f.sig.d
    )
    return MultivectorField(f.sig, data, f.spacing)


def model_forward(layers, f_in: MultivectorField,
                  padding: str = "circular") -> MultivectorField:
    """Run a layer sequence on a field.

    ``layers`` may contain :class:`SteerableKernel` instances, the token
    ``"activation"`` (pointwise gate), or the token ``"residual"`` which adds
    the model input at that position (channel counts must match).
    """
    cur = f_in
    for layer in layers:
        if isinstance(layer, SteerableKernel):
            cur = conv_forward(cur, layer, padding=padding)
        elif layer == "activation":
            cur = field_activation(cur)
        elif layer == "residual":
            if cur.channels != f_in.channels:
                raise ValueError(
                    f"residual join needs matching channels, got {cur.channels} vs {f_in.channels}"
                )
            cur = MultivectorField(cur.sig, cur.data + f_in.data, cur.spacing)
        else:
            raise ValueError(f"unknown layer {layer!r}")
    return cur
