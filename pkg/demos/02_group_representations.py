"""How O(p,q) acts on multivectors: rotations, boosts, and conjugation.

Run:  python demos/02_group_representations.py
"""

import numpy as np

from csconv import (
    Multivector,
    Signature,
    boost,
    compose,
    extended_inner_product,
    geometric_product,
    inverse,
    rho_cl_matrix,
    rho_hom_apply,
    rotation,
    sample_boost,
    sample_rotation,
)

# ---------------------------------------------------------------------------
# A quarter turn of the Euclidean plane, lifted to the algebra.
# ---------------------------------------------------------------------------
sig = Signature(2, 0)
g = rotation(sig, 0, 1, np.pi / 2)
rep = rho_cl_matrix(g)
print("quarter turn on R^{2,0}, blade-space matrix:")
print(np.round(rep.matrix, 12))
print("scalar and bivector stay fixed; the vector block rotates.\n")

# ---------------------------------------------------------------------------
# A Lorentz boost in R^{1,1}: hyperbolic rotation, e12 invariant.
# ---------------------------------------------------------------------------
m = Signature(1, 1)
b = boost(m, 0, 1, 1.0)
print("boost rapidity 1.0:")
print(np.round(b.matrix, 6))
rep_b = rho_cl_matrix(b)
print("e12 component under the boost:", rep_b.matrix[3, 3], "(cosh^2 - sinh^2 = 1)\n")

# ---------------------------------------------------------------------------
# The representation respects products and the extended metric.
# ---------------------------------------------------------------------------
rng = np.random.default_rng(1)
sig = Signature(1, 2)
g = compose(sample_rotation(sig, rng), sample_boost(sig, rng))
rep = rho_cl_matrix(g).matrix
x = Multivector(sig, rng.standard_normal(8))
y = Multivector(sig, rng.standard_normal(8))

lhs = rep @ geometric_product(x, y).coeffs
rhs = geometric_product(Multivector(sig, rep @ x.coeffs),
                        Multivector(sig, rep @ y.coeffs)).coeffs
print("acts multiplicatively:     max dev", f"{np.max(np.abs(lhs - rhs)):.2e}")

before = extended_inner_product(x, y)
after = extended_inner_product(Multivector(sig, rep @ x.coeffs),
                               Multivector(sig, rep @ y.coeffs))
print("preserves the inner product: dev ", f"{abs(before - after):.2e}")

# ---------------------------------------------------------------------------
# Conjugation moves operators between frames; g then g^{-1} is a no-op.
# ---------------------------------------------------------------------------
k_op = rng.standard_normal((2 * 8, 3 * 8))  # 3 input channels, 2 output channels
back = rho_hom_apply(inverse(g), rho_hom_apply(g, k_op))
print("conjugate by g then g^-1:    max dev", f"{np.max(np.abs(back - k_op)):.2e}")
