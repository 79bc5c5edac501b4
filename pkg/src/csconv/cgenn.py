"""Equivariant network layers on multivector channels.

All layers act on arrays of shape (N, c, 2^d) with the blade axis last and
commute with the algebra representation of O(p,q) applied channel-wise.
They are written against :mod:`csconv.autodiff` dispatch ops, so the same
code runs on plain arrays and on taped nodes during training.

Grade-dependent weights are expanded to blade resolution through constant
selector tensors cached per signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import autodiff as ad
from .algebra import Signature, blade_grades, build_cayley

__all__ = [
    "KernelNetConfig",
    "sig_constants",
    "linear_layer",
    "geometric_product_layer",
    "mv_activation",
    "init_net_params",
    "kernel_network_forward",
]


@dataclass(frozen=True)
class _SigConstants:
    grade_onehot: np.ndarray  # (d+1, 2^d): G[k, a] = 1 iff |a| = k
    gp_selector: np.ndarray  # ((d+1)^3, 2^d, 2^d, 2^d): grade-resolved Cayley
    head_selector: np.ndarray  # ((d+1)^3, 2^d, 2^d): blade expansion of head weights
    cayley_abc: np.ndarray  # (2^d, 2^d, 2^d): Lambda transposed to [a, b, c]
    scalar_onehot: np.ndarray  # (2^d,)
    vector_embed: np.ndarray  # (d, 2^d): coordinate j -> blade mask 1<<j


@lru_cache(maxsize=None)
def _sig_constants(p: int, q: int) -> _SigConstants:
    sig = Signature(p, q)
    d, n = sig.d, sig.n_blades
    grades = blade_grades(d)
    onehot = np.zeros((d + 1, n))
    onehot[grades, np.arange(n)] = 1.0

    lam = build_cayley(sig).entries  # [C, A, B]
    lam_abc = np.ascontiguousarray(np.transpose(lam, (1, 2, 0)))

    sel = np.zeros((d + 1, d + 1, d + 1, n, n, n))
    head = np.zeros((d + 1, d + 1, d + 1, n, n))
    cgrade = grades[np.arange(n)[:, None] ^ np.arange(n)[None, :]]
    for a in range(n):
        for b in range(n):
            c = a ^ b
            sel[grades[a], grades[b], grades[c], a, b, c] = lam[c, a, b]
            head[grades[a], grades[b], cgrade[a, b], a, b] = 1.0

    consts = _SigConstants(
        grade_onehot=onehot,
        gp_selector=sel.reshape((d + 1) ** 3, n, n, n),
        head_selector=head.reshape((d + 1) ** 3, n, n),
        cayley_abc=lam_abc,
        scalar_onehot=np.eye(n)[0],
        vector_embed=np.eye(n)[[1 << i for i in range(d)]],
    )
    for arr in consts.__dict__.values():
        arr.setflags(write=False)
    return consts


def sig_constants(sig: Signature) -> _SigConstants:
    return _sig_constants(sig.p, sig.q)


def linear_layer(w, x):
    """Mix channels with one weight per grade: out[m] = sum_n w[k,m,n] x[n]^(k).

    ``w`` has shape (d+1, c_out, c_in); ``x`` has shape (N, c_in, 2^d).
    """
    n_blades = np.shape(ad._value(x))[-1]
    d = n_blades.bit_length() - 1
    g = _sig_constants_from_d(d).grade_onehot
    wb = ad.einsum("kmn,kb->mnb", w, g)
    return ad.einsum("mnb,Nnb->Nmb", wb, x)


@lru_cache(maxsize=None)
def _sig_constants_from_d(d: int) -> _SigConstants:
    # the grade layout depends only on d, so any metric split will do
    return _sig_constants(d, 0)


def geometric_product_layer(sig: Signature, w, x1, x2):
    """Channel-wise weighted geometric product.

    ``w`` has shape (c, d+1, d+1, d+1) indexed [channel, m, n, k]; output
    grade k collects sum_{m,n} w[c,m,n,k] (x1^(m) o x2^(n))^(k) per channel.
    """
    consts = sig_constants(sig)
    c = np.shape(ad._value(w))[0]
    wf = ad.reshape(w, (c, (sig.d + 1) ** 3))
    table = ad.einsum("gP,PabC->gabC", wf, consts.gp_selector)
    partial = ad.einsum("gabC,Nga->NgbC", table, x1)
    return ad.einsum("NgbC,Ngb->NgC", partial, x2)


def mv_activation(x):
    """Gate each multivector by the normal CDF of its scalar coefficient."""
    n_blades = np.shape(ad._value(x))[-1]
    d = n_blades.bit_length() - 1
    e0 = _sig_constants_from_d(d).scalar_onehot
    s0 = ad.einsum("Ncb,b->Nc", x, e0)
    gate = ad.norm_cdf(s0)
    shape = np.shape(ad._value(gate))
    return ad.multiply(x, ad.reshape(gate, (*shape, 1)))


@dataclass(frozen=True)
class KernelNetConfig:
    """Shape of the kernel network: depth blocks of product/gate/linear."""

    sig: Signature
    width: int = 8
    depth: int = 2
    n_out: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1 or self.width < 1 or self.n_out < 1:
            raise ValueError("depth, width and n_out must all be >= 1")


def init_net_params(cfg: KernelNetConfig, rng=None, prefix: str = "net.") -> dict:
    """Variance-preserving init: linear weights ~ N(0, 1/sqrt(c_in)),
    product weights ~ N(0, 1/sqrt(c_in (d+1)))."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    d = cfg.sig.d
    params = {}
    params[f"{prefix}lin0.w"] = rng.normal(0.0, 1.0, size=(d + 1, cfg.width, 1))
    for t in range(cfg.depth):
        c_out = cfg.n_out if t == cfg.depth - 1 else cfg.width
        params[f"{prefix}gp{t}.w"] = rng.normal(
            0.0, 1.0 / np.sqrt(cfg.width * (d + 1)), size=(cfg.width, d + 1, d + 1, d + 1)
        )
        params[f"{prefix}lin{t + 1}.w"] = rng.normal(
            0.0, 1.0 / np.sqrt(cfg.width), size=(d + 1, c_out, cfg.width)
        )
    return params


def kernel_network_forward(cfg: KernelNetConfig, params: dict, x, prefix: str = "net."):
    """Run the kernel network on embedded points.

    ``x`` has shape (N, 1, 2^d); the result has shape (N, n_out, 2^d).
    Blocks alternate a self-interaction product layer, the scalar-gated
    activation, and a linear layer; the final linear layer emits ``n_out``
    channels.
    """
    h = linear_layer(params[f"{prefix}lin0.w"], x)
    for t in range(cfg.depth):
        h = geometric_product_layer(cfg.sig, params[f"{prefix}gp{t}.w"], h, h)
        h = mv_activation(h)
        h = linear_layer(params[f"{prefix}lin{t + 1}.w"], h)
    return h
