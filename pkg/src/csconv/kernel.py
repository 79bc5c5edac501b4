"""Steerable kernel generation on pseudo-Euclidean sampling grids.

The kernel pipeline per sampling point v:

1. evaluate the orbital shell s(v), a signed exponential of the squared
   pseudo-distance eta(v, v), constant on every O(p,q)-orbit;
2. embed (s, v) as the scalar/vector grades of a multivector;
3. run the equivariant kernel network, giving a c_out x c_in matrix of
   multivectors;
4. mask each grade with a second, per-(grade, channel-pair) shell;
5. expand to an operator on multivector channels by a partial evaluation of
   the weighted geometric product (the "kernel head").

The head weights come in three flavours: "grade" ties weights within grade
blocks, which keeps the operator field exactly steerable under the full
group; "blade" frees one weight per blade pair, which is strictly more
expressive but only respects group elements that do not mix blades within a
grade; "fixed_one" pins all weights to one (ablation mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .algebra import Signature
from .cgenn import KernelNetConfig, init_net_params, kernel_network_forward, sig_constants

__all__ = [
    "HEAD_MODES",
    "KernelConfig",
    "KernelGrid",
    "SteerableKernel",
    "scalar_shell",
    "init_kernel_params",
    "head_blade_weights",
    "kernel_head_apply",
    "kernel_operator",
    "generate_kernel",
]

HEAD_MODES = ("grade", "blade", "fixed_one")


@dataclass(frozen=True)
class KernelConfig:
    """Everything needed to (re)generate one steerable kernel."""

    sig: Signature
    c_in: int = 1
    c_out: int = 1
    sizes: tuple[int, ...] = (5, 5)
    width: int = 8
    depth: int = 2
    head_weights: str = "grade"
    scalar_bias: bool = False
    seed: int = 0

    def __post_init__(self):
        if len(self.sizes) != self.sig.d:
            raise ValueError(f"expected {self.sig.d} grid sizes, got {self.sizes}")
        if any(s < 1 or s % 2 == 0 for s in self.sizes):
            raise ValueError(f"grid sizes must be odd and positive, got {self.sizes}")
        if self.head_weights not in HEAD_MODES:
            raise ValueError(f"head_weights must be one of {HEAD_MODES}")
        if self.c_in < 1 or self.c_out < 1:
            raise ValueError("channel counts must be >= 1")

    @property
    def net(self) -> KernelNetConfig:
        return KernelNetConfig(
            self.sig, width=self.width, depth=self.depth,
            n_out=self.c_out * self.c_in, seed=self.seed,
        )


@dataclass(frozen=True)
class KernelGrid:
    """Centered sampling grid with per-axis coordinates normalized to [-1, 1]."""

    sig: Signature
    sizes: tuple[int, ...]
    coords: np.ndarray  # (N, d), row-major over the grid

    @classmethod
    def centered(cls, sig: Signature, sizes) -> "KernelGrid":
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) != sig.d:
            raise ValueError(f"expected {sig.d} sizes, got {len(sizes)}")
        if any(s < 1 or s % 2 == 0 for s in sizes):
            raise ValueError(f"grid sizes must be odd so the origin is sampled, got {sizes}")
        axes = []
        for s in sizes:
            half = (s - 1) / 2
            axes.append((np.arange(s) - half) / half if s > 1 else np.zeros(1))
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=-1)
        coords.setflags(write=False)
        return cls(sig, sizes, coords)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.sizes))


@dataclass(frozen=True)
class SteerableKernel:
    """Dense operator field of shape (c_out 2^d, c_in 2^d, X_1..X_d)."""

    sig: Signature
    c_in: int
    c_out: int
    grid: KernelGrid
    data: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)


def _squared_distance(sig: Signature, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return np.einsum("nj,j,nj->n", points, sig.metric_diag, points)


def _shell(eta, sigma):
    """sgn(eta) * exp(-|eta| / (2 sigma^2)) with broadcasting over sigma."""
    inv = ad.reciprocal(ad.multiply(2.0, ad.square(sigma)))
    decay = ad.exp(ad.negative(ad.multiply(ad.absolute(eta), inv)))
    return ad.multiply(ad.sign(eta), decay)


def scalar_shell(sig: Signature, v, sigma):
    """Orbital shell at point(s) v: sgn(eta(v,v)) exp(-|eta(v,v)| / 2 sigma^2).

    ``v`` may be a single point (d,) or a stack (..., d).  The value depends
    on v only through eta(v, v), so it is constant on every O(p,q)-orbit;
    sgn(0) = 0 zeroes the light cone and the origin.
    """
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    eta = _squared_distance(sig, v.reshape(-1, sig.d))
    out = _shell(eta, sigma)
    if isinstance(out, np.ndarray):
        out = float(out[0]) if single else out.reshape(v.shape[:-1])
    return out


def init_kernel_params(cfg: KernelConfig, n_points: int, rng=None) -> dict:
    """Fresh parameter dictionary for one kernel.

    Head weights follow w ~ N(0, 1/sqrt(c_in N)); both shell widths are
    drawn from U(0.4, 0.6).  ``fixed_one`` mode has no head entry at all so
    that the ablation cannot be silently trained away.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    d = cfg.sig.d
    params = init_net_params(cfg.net, rng)
    params["shell.sigma"] = np.array(rng.uniform(0.4, 0.6))
    params["mask.sigma"] = rng.uniform(0.4, 0.6, size=(d + 1, cfg.c_in, cfg.c_out))
    head_std = 1.0 / np.sqrt(cfg.c_in * n_points)
    if cfg.head_weights == "grade":
        params["head.w"] = rng.normal(
            0.0, head_std, size=(cfg.c_out, cfg.c_in, d + 1, d + 1, d + 1)
        )
    elif cfg.head_weights == "blade":
        n = cfg.sig.n_blades
        params["head.w"] = rng.normal(0.0, head_std, size=(cfg.c_out, cfg.c_in, n, n))
    if cfg.scalar_bias:
        params["bias"] = np.zeros(cfg.c_out)
    return params


def head_blade_weights(cfg: KernelConfig, params: dict):
    """Blade-pair weight array (c_out, c_in, 2^d, 2^d) for the configured mode."""
    consts = sig_constants(cfg.sig)
    n = cfg.sig.n_blades
    if cfg.head_weights == "fixed_one":
        return np.ones((cfg.c_out, cfg.c_in, n, n))
    w = params["head.w"]
    if cfg.head_weights == "blade":
        return w
    flat = ad.reshape(w, (cfg.c_out, cfg.c_in, (cfg.sig.d + 1) ** 3))
    return ad.einsum("oiP,Pab->oiab", flat, consts.head_selector)


def weighted_cayley(cfg: KernelConfig, params: dict) -> np.ndarray:
    """Weighted structure constants W[o, i, a, b, c] = Lambda[c, a, b] w[o, i, a, b].

    Zero wherever the Cayley table is zero, for all weight modes.
    """
    consts = sig_constants(cfg.sig)
    n = cfg.sig.n_blades
    blade_w = ad._value(head_blade_weights(cfg, params))
    return blade_w.reshape(cfg.c_out, cfg.c_in, n, n, 1) * consts.cayley_abc


def _head_operator(cfg: KernelConfig, k_mats, blade_w, unstructured=None):
    """Contract kernel-network output with the weighted Cayley table.

    ``k_mats``: (N, c_out, c_in, 2^d) multivector matrix per point.
    Returns (N, c_out, 2^d, c_in, 2^d) operator blocks.  ``unstructured``
    replaces the whole weighted table (negative-control hook).
    """
    consts = sig_constants(cfg.sig)
    n = cfg.sig.n_blades
    if unstructured is not None:
        weighted = unstructured  # (o, i, a, b, c), no Cayley sparsity
    else:
        w5 = ad.reshape(blade_w, (cfg.c_out, cfg.c_in, n, n, 1))
        weighted = ad.multiply(w5, consts.cayley_abc)  # (o, i, a, b, c)
    return ad.einsum("Noia,oiabc->Nocib", k_mats, weighted)


def kernel_head_apply(cfg: KernelConfig, k_mats, params: dict, f_channels) -> np.ndarray:
    """Apply the kernel head H(k)[f] to a stack of input channels.

    ``k_mats``: (c_out, c_in, 2^d); ``f_channels``: (c_in, 2^d).
    Returns (c_out, 2^d).  Linear in ``f_channels``.
    """
    k_mats = np.asarray(k_mats, dtype=np.float64)
    f_channels = np.asarray(f_channels, dtype=np.float64)
    if k_mats.shape != (cfg.c_out, cfg.c_in, cfg.sig.n_blades):
        raise ValueError(f"kernel matrix shape {k_mats.shape} does not match config")
    if f_channels.shape != (cfg.c_in, cfg.sig.n_blades):
        raise ValueError(f"feature shape {f_channels.shape} does not match config")
    blade_w = ad._value(head_blade_weights(cfg, params))
    op = _head_operator(cfg, k_mats[None], blade_w)[0]  # (c_out, 2^d, c_in, 2^d)
    return np.einsum("ocib,ib->oc", op, f_channels)


def kernel_operator(cfg: KernelConfig, params: dict, points, unstructured_head=None):
    """Evaluate the full kernel pipeline at arbitrary points.

    ``points``: (M, d) real coordinates.  Returns (M, c_out 2^d, c_in 2^d)
    with channel-major, blade-minor flattening on both operator axes.
    Accepts taped parameters and is then differentiable.
    """
    sig = cfg.sig
    consts = sig_constants(sig)
    points = np.asarray(points, dtype=np.float64)
    m = points.shape[0]
    n = sig.n_blades
    eta = _squared_distance(sig, points)

    s = _shell(eta, params["shell.sigma"])  # (M,)
    vec_part = points @ consts.vector_embed  # constant, (M, 2^d)
    x = ad.add(ad.einsum("M,b->Mb", s, consts.scalar_onehot), vec_part)
    x = ad.reshape(x, (m, 1, n))

    k = kernel_network_forward(cfg.net, params, x)  # (M, c_out*c_in, 2^d)
    k = ad.reshape(k, (m, cfg.c_out, cfg.c_in, n))

    mask = _shell(eta.reshape(m, 1, 1, 1), params["mask.sigma"])  # (M, d+1, c_in, c_out)
    mask_blades = ad.einsum("Mkio,ka->Moia", mask, consts.grade_onehot)
    k = ad.multiply(k, mask_blades)

    op = _head_operator(cfg, k, head_blade_weights(cfg, params), unstructured_head)
    return ad.reshape(op, (m, cfg.c_out * n, cfg.c_in * n))


def generate_kernel(cfg: KernelConfig, params: dict | None = None,
                    grid: KernelGrid | None = None) -> SteerableKernel:
    """Sample the kernel on its grid and lay it out for convolution.

    Deterministic given (config, seed): omitting ``params`` initializes them
    from ``cfg.seed``.
    """
    if grid is None:
        grid = KernelGrid.centered(cfg.sig, cfg.sizes)
    if params is None:
        params = init_kernel_params(cfg, grid.n_points)
    op = kernel_operator(cfg, params, grid.coords)
    op = ad._value(op)
    n = cfg.sig.n_blades
    data = np.moveaxis(op, 0, -1).reshape(cfg.c_out * n, cfg.c_in * n, *grid.sizes)
    return SteerableKernel(
        sig=cfg.sig,
        c_in=cfg.c_in,
        c_out=cfg.c_out,
        grid=grid,
        data=data,
        provenance={"config": _config_dict(cfg), "seed": cfg.seed},
    )


def _config_dict(cfg: KernelConfig) -> dict:
    return {
        "signature": [cfg.sig.p, cfg.sig.q],
        "c_in": cfg.c_in,
        "c_out": cfg.c_out,
        "sizes": list(cfg.sizes),
        "width": cfg.width,
        "depth": cfg.depth,
        "head_weights": cfg.head_weights,
        "scalar_bias": cfg.scalar_bias,
    }


def with_head_mode(cfg: KernelConfig, mode: str) -> KernelConfig:
    return replace(cfg, head_weights=mode)
