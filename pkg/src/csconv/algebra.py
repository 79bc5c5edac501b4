"""Clifford algebra Cl(R^{p,q}) over dense blade-coefficient arrays.

Basis blades are labelled by d-bit masks: bit ``i`` of a mask selects the
basis vector ``e_{i+1}``.  Coefficient vectors are ordered by ascending mask
value, and every array in this package that carries a blade axis uses that
ordering.  For example, in Cl(R^{2,0}) the order is ``1, e1, e2, e12``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Signature",
    "Multivector",
    "CayleyTable",
    "blade_grade",
    "blade_label",
    "blade_grades",
    "blade_norms",
    "build_cayley",
    "geometric_product",
    "grade_projection",
    "extended_inner_product",
    "cl_embed",
]


@dataclass(frozen=True)
class Signature:
    """Metric signature (p, q): p positive and q negative squared basis vectors."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise ValueError(f"signature counts must be non-negative, got ({self.p},{self.q})")
        if self.p + self.q < 1:
            raise ValueError("signature needs at least one dimension")

    @property
    def d(self) -> int:
        return self.p + self.q

    @property
    def n_blades(self) -> int:
        return 1 << self.d

    @property
    def metric_diag(self) -> np.ndarray:
        """Diagonal of the metric: +1 for the first p axes, -1 for the last q."""
        return np.concatenate([np.ones(self.p), -np.ones(self.q)])

    def as_tuple(self) -> tuple[int, int]:
        return (self.p, self.q)


def blade_grade(mask: int) -> int:
    """Grade of a blade, i.e. the number of basis vectors it contains."""
    return int(mask).bit_count()


def blade_label(mask: int) -> str:
    """Human-readable blade name: '1' for the scalar, else e.g. 'e13'."""
    if mask == 0:
        return "1"
    return "e" + "".join(str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1)


def blade_grades(d: int) -> np.ndarray:
    """Array of grades for all 2^d blades in mask order."""
    return np.array([blade_grade(a) for a in range(1 << d)], dtype=np.int64)


def blade_norms(sig: Signature) -> np.ndarray:
    """Squared norms eta_A = prod_{i in A} eta(e_i, e_i), one per blade."""
    metric = sig.metric_diag
    norms = np.ones(sig.n_blades)
    for a in range(sig.n_blades):
        for i in range(sig.d):
            if a >> i & 1:
                norms[a] *= metric[i]
    return norms


def _reorder_swaps(a_mask: int, b_mask: int) -> int:
    """Adjacent swaps needed to sort the concatenation of two sorted index tuples.

    Equal indices are not counted; they end up adjacent and are contracted
    by the metric afterwards.
    """
    total = 0
    for j in range(b_mask.bit_length()):
        if b_mask >> j & 1:
            total += (a_mask >> (j + 1)).bit_count()
    return total


@dataclass(frozen=True)
class CayleyTable:
    """Structure constants of the geometric product in the blade basis.

    ``entries[C, A, B]`` is the coefficient of blade C in the product
    ``e_A o e_B``; it is nonzero only for C = A xor B.
    """

    sig: Signature
    entries: np.ndarray  # (2^d, 2^d, 2^d), values in {-1, 0, +1}
    blade_norms: np.ndarray  # (2^d,), values in {-1, +1}


@lru_cache(maxsize=None)
def _cached_cayley(p: int, q: int) -> CayleyTable:
    sig = Signature(p, q)
    n = sig.n_blades
    metric = sig.metric_diag
    entries = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            c = a ^ b
            sign = -1.0 if _reorder_swaps(a, b) % 2 else 1.0
            shared = a & b
            for i in range(sig.d):
                if shared >> i & 1:
                    sign *= metric[i]
            entries[c, a, b] = sign
    norms = blade_norms(sig)
    entries.setflags(write=False)
    norms.setflags(write=False)
    return CayleyTable(sig, entries, norms)


def build_cayley(sig: Signature) -> CayleyTable:
    """Dense Cayley table for Cl(R^{p,q}); cached and shared read-only."""
    return _cached_cayley(sig.p, sig.q)


class Multivector:
    """Element of Cl(R^{p,q}) as a dense length-2^d coefficient vector."""

    __slots__ = ("sig", "coeffs")

    def __init__(self, sig: Signature, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape != (sig.n_blades,):
            raise ValueError(f"expected {sig.n_blades} coefficients, got shape {coeffs.shape}")
        self.sig = sig
        self.coeffs = coeffs

    def __repr__(self):
        terms = [
            f"{c:+g}*{blade_label(a)}"
            for a, c in enumerate(self.coeffs)
            if c != 0.0
        ]
        body = " ".join(terms) if terms else "0"
        return f"Multivector({self.sig.p},{self.sig.q}: {body})"

    def __add__(self, other: "Multivector") -> "Multivector":
        _check_same_sig(self, other)
        return Multivector(self.sig, self.coeffs + other.coeffs)

    def __sub__(self, other: "Multivector") -> "Multivector":
        _check_same_sig(self, other)
        return Multivector(self.sig, self.coeffs - other.coeffs)

    def __rmul__(self, scalar: float) -> "Multivector":
        return Multivector(self.sig, float(scalar) * self.coeffs)

    def __neg__(self) -> "Multivector":
        return Multivector(self.sig, -self.coeffs)

    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def vector_part(self) -> np.ndarray:
        return np.array([self.coeffs[1 << i] for i in range(self.sig.d)])

    def to_json(self) -> str:
        return json.dumps(
            {"signature": [self.sig.p, self.sig.q], "coeffs": self.coeffs.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "Multivector":
        obj = json.loads(text)
        p, q = obj["signature"]
        return cls(Signature(int(p), int(q)), obj["coeffs"])

    @classmethod
    def zero(cls, sig: Signature) -> "Multivector":
        return cls(sig, np.zeros(sig.n_blades))

    @classmethod
    def unit(cls, sig: Signature) -> "Multivector":
        coeffs = np.zeros(sig.n_blades)
        coeffs[0] = 1.0
        return cls(sig, coeffs)

    @classmethod
    def blade(cls, sig: Signature, mask: int, value: float = 1.0) -> "Multivector":
        coeffs = np.zeros(sig.n_blades)
        coeffs[mask] = value
        return cls(sig, coeffs)


def _check_same_sig(x: Multivector, y: Multivector) -> None:
    if x.sig != y.sig:
        raise ValueError(f"signature mismatch: {x.sig.as_tuple()} vs {y.sig.as_tuple()}")


def geometric_product(x: Multivector, y: Multivector) -> Multivector:
    """Geometric product x o y via the Cayley table."""
    _check_same_sig(x, y)
    table = build_cayley(x.sig)
    out = np.einsum("cab,a,b->c", table.entries, x.coeffs, y.coeffs)
    return Multivector(x.sig, out)


def grade_projection(x: Multivector, k: int) -> Multivector:
    """Keep the coefficients of grade-k blades, zero everything else."""
    if not 0 <= k <= x.sig.d:
        raise ValueError(f"grade {k} out of range for d={x.sig.d}")
    keep = blade_grades(x.sig.d) == k
    return Multivector(x.sig, np.where(keep, x.coeffs, 0.0))


def extended_inner_product(x: Multivector, y: Multivector) -> float:
    """Inner product on Cl(R^{p,q}): sum_A eta_A x_A y_A.

    The basis blades are orthonormal under it, with squared norms eta_A.
    """
    _check_same_sig(x, y)
    norms = build_cayley(x.sig).blade_norms
    return float(np.sum(norms * x.coeffs * y.coeffs))


def cl_embed(s: float, v, sig: Signature) -> Multivector:
    """Embed a scalar and a length-d vector as the grade-0/1 parts of a multivector."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (sig.d,):
        raise ValueError(f"expected vector of length {sig.d}, got shape {v.shape}")
    coeffs = np.zeros(sig.n_blades)
    coeffs[0] = s
    for i in range(sig.d):
        coeffs[1 << i] = v[i]
    return Multivector(sig, coeffs)
