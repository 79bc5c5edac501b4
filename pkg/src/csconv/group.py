"""O(p,q) matrix elements and their induced action on Cl(R^{p,q}).

Group elements are stored as explicit d x d matrices so that any element,
including reflections, has one canonical encoding.  The algebra
representation maps each basis blade through the products of transformed
basis vectors; the resulting 2^d x 2^d matrix acts on blade-coefficient
vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import (
    Multivector,
    Signature,
    blade_grades,
    cl_embed,
    geometric_product,
)

__all__ = [
    "GroupElement",
    "CliffordRep",
    "identity",
    "inverse",
    "compose",
    "rotation",
    "reflection",
    "boost",
    "sample_rotation",
    "sample_boost",
    "rho_cl_matrix",
    "rho_cl_channel_matrix",
    "rho_hom_apply",
]

METRIC_TOL = 1e-10


@dataclass(frozen=True)
class GroupElement:
    """Element of O(p,q): a matrix g with g^T Delta g = Delta and |det g| = 1."""

    sig: Signature
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (self.sig.d, self.sig.d):
            raise ValueError(f"expected {self.sig.d}x{self.sig.d} matrix, got {m.shape}")
        delta = np.diag(self.sig.metric_diag)
        defect = np.linalg.norm(m.T @ delta @ m - delta)
        if defect > METRIC_TOL:
            raise ValueError(f"matrix violates the metric constraint (defect {defect:.3e})")
        if abs(abs(np.linalg.det(m)) - 1.0) > METRIC_TOL:
            raise ValueError("matrix determinant is not of unit magnitude")
        object.__setattr__(self, "matrix", m)

    def to_json(self) -> str:
        return json.dumps(
            {"signature": [self.sig.p, self.sig.q], "matrix": self.matrix.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "GroupElement":
        obj = json.loads(text)
        p, q = obj["signature"]
        return cls(Signature(int(p), int(q)), np.array(obj["matrix"]))


@dataclass(frozen=True)
class CliffordRep:
    """Matrix of the induced algebra representation in the blade basis."""

    sig: Signature
    matrix: np.ndarray  # (2^d, 2^d)


def identity(sig: Signature) -> GroupElement:
    return GroupElement(sig, np.eye(sig.d))


def inverse(g: GroupElement) -> GroupElement:
    # g^{-1} = Delta g^T Delta, exact for metric-preserving matrices
    delta = np.diag(g.sig.metric_diag)
    return GroupElement(g.sig, delta @ g.matrix.T @ delta)


def compose(g2: GroupElement, g1: GroupElement) -> GroupElement:
    if g2.sig != g1.sig:
        raise ValueError("signature mismatch")
    return GroupElement(g2.sig, g2.matrix @ g1.matrix)


def rotation(sig: Signature, i: int, j: int, angle: float) -> GroupElement:
    """Givens rotation by ``angle`` in the (i, j) plane; axes must share a metric sign."""
    if i == j:
        raise ValueError("rotation plane needs two distinct axes")
    same_sign = (i < sig.p) == (j < sig.p)
    if not same_sign:
        raise ValueError("rotation axes must have equal metric signs; use boost() instead")
    m = np.eye(sig.d)
    c, s = np.cos(angle), np.sin(angle)
    m[i, i] = c
    m[j, j] = c
    m[j, i] = s
    m[i, j] = -s
    return GroupElement(sig, m)


def reflection(sig: Signature, axes) -> GroupElement:
    """Sign flip of the listed axes."""
    diag = np.ones(sig.d)
    for ax in axes:
        diag[ax] = -1.0
    return GroupElement(sig, np.diag(diag))


def _expm_taylor(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a plain Taylor series."""
    norm = np.linalg.norm(a, ord=np.inf)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25))) if norm > 0.25 else 0)
    b = a / (1 << squarings)
    term = np.eye(a.shape[0])
    result = np.eye(a.shape[0])
    for k in range(1, 40):
        term = term @ b / k
        result = result + term
        if np.max(np.abs(term)) < 1e-17:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def boost(sig: Signature, i: int, j: int, rapidity: float) -> GroupElement:
    """Hyperbolic rotation mixing positive-metric axis i and negative-metric axis j."""
    if not (i < sig.p <= j < sig.d):
        raise ValueError("boost needs one positive-metric and one negative-metric axis")
    gen = np.zeros((sig.d, sig.d))
    gen[i, j] = rapidity
    gen[j, i] = rapidity
    return GroupElement(sig, _expm_taylor(gen))


def sample_rotation(sig: Signature, rng, reflections: bool = True) -> GroupElement:
    """Random element of the compact block: Givens rotations within the first p
    axes and within the last q axes, optionally composed with axis reflections."""
    m = np.eye(sig.d)
    for lo, hi in ((0, sig.p), (sig.p, sig.d)):
        for i in range(lo, hi):
            for j in range(i + 1, hi):
                m = rotation(sig, i, j, rng.uniform(0.0, 2.0 * np.pi)).matrix @ m
    if reflections:
        flips = [ax for ax in range(sig.d) if rng.random() < 0.5]
        m = reflection(sig, flips).matrix @ m
    return GroupElement(sig, m)


def sample_boost(sig: Signature, rng, max_rapidity: float = 2.0) -> GroupElement:
    """Random boost between one +axis and one -axis, rapidity in [-max, max]."""
    if sig.p == 0 or sig.q == 0:
        raise ValueError("boosts need a mixed signature (p >= 1 and q >= 1)")
    i = int(rng.integers(0, sig.p))
    j = int(rng.integers(sig.p, sig.d))
    rapidity = float(rng.uniform(-max_rapidity, max_rapidity))
    return boost(sig, i, j, rapidity)


def rho_cl_matrix(g: GroupElement) -> CliffordRep:
    """Blade-basis matrix of the algebra representation induced by g.

    The column for blade e_A is the geometric product of the transformed
    basis vectors (g e_{i1}) o ... o (g e_{ik}); the empty product is the
    algebra unit.
    """
    sig = g.sig
    n = sig.n_blades
    columns = np.zeros((n, n))
    vec_images = [
        cl_embed(0.0, g.matrix[:, i], sig) for i in range(sig.d)
    ]
    for a in range(n):
        acc = Multivector.unit(sig)
        for i in range(sig.d):
            if a >> i & 1:
                acc = geometric_product(acc, vec_images[i])
        columns[:, a] = acc.coeffs
    # the representation never mixes grades; cross-grade entries are pure
    # cancellation noise from the products above and are pinned to zero
    grades = blade_grades(sig.d)
    off_block = grades[:, None] != grades[None, :]
    noise = np.max(np.abs(columns[off_block])) if n > 1 else 0.0
    if noise > 1e-9 * max(np.max(np.abs(columns)), 1.0):
        raise ValueError("group element does not act grade-block-diagonally")
    columns[off_block] = 0.0
    return CliffordRep(sig, columns)


def rho_cl_channel_matrix(g: GroupElement, channels: int) -> np.ndarray:
    """Block-diagonal representation acting on ``channels`` stacked multivectors."""
    return np.kron(np.eye(channels), rho_cl_matrix(g).matrix)


def rho_hom_apply(g: GroupElement, k_op: np.ndarray) -> np.ndarray:
    """Conjugate an operator on multivector channels: rho_out(g) K rho_in(g)^{-1}.

    ``k_op`` has shape (c_out * 2^d, c_in * 2^d) with channel-major rows and
    columns; channel counts are inferred from the shape.
    """
    n = g.sig.n_blades
    k_op = np.asarray(k_op, dtype=np.float64)
    if k_op.ndim != 2 or k_op.shape[0] % n or k_op.shape[1] % n:
        raise ValueError(f"operator shape {k_op.shape} is not a multiple of 2^d={n}")
    c_out = k_op.shape[0] // n
    c_in = k_op.shape[1] // n
    r_out = rho_cl_channel_matrix(g, c_out)
    r_in_inv = rho_cl_channel_matrix(inverse(g), c_in)
    return r_out @ k_op @ r_in_inv
