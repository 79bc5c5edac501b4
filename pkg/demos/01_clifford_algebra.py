"""Tour of the Clifford algebra core: blades, products, grades.

Run:  python demos/01_clifford_algebra.py
"""

import numpy as np

from csconv import (
    Multivector,
    Signature,
    blade_label,
    build_cayley,
    cl_embed,
    extended_inner_product,
    geometric_product,
    grade_projection,
)

# ---------------------------------------------------------------------------
# The Euclidean plane: Cl(R^{2,0}) has basis 1, e1, e2, e12.
# ---------------------------------------------------------------------------
sig = Signature(2, 0)
e1 = Multivector.blade(sig, 0b01)
e2 = Multivector.blade(sig, 0b10)

print("e1 o e2 =", geometric_product(e1, e2))
print("e2 o e1 =", geometric_product(e2, e1), " (anticommutes)")
print("e1 o e1 =", geometric_product(e1, e1), " (squares to the metric)")

# A vector squared collapses to its squared length.
v = cl_embed(0.0, [3.0, 4.0], sig)
print("\n(3 e1 + 4 e2)^2 =", geometric_product(v, v), " -> 25")

# ---------------------------------------------------------------------------
# Minkowski plane (1,1): the negative axis flips signs.
# ---------------------------------------------------------------------------
m = Signature(1, 1)
t_axis = Multivector.blade(m, 0b01)
x_axis = Multivector.blade(m, 0b10)
print("\nIn R^{1,1}: e1 o e1 =", geometric_product(t_axis, t_axis))
print("            e2 o e2 =", geometric_product(x_axis, x_axis))

lightlike = cl_embed(0.0, [1.0, 1.0], m)
print("lightlike (e1+e2)^2 =", geometric_product(lightlike, lightlike))

# ---------------------------------------------------------------------------
# Grade structure and the extended inner product on Cl(R^{1,2}).
# ---------------------------------------------------------------------------
sig = Signature(1, 2)
rng = np.random.default_rng(0)
x = Multivector(sig, rng.standard_normal(sig.n_blades))
parts = [grade_projection(x, k) for k in range(sig.d + 1)]
total = parts[0]
for part in parts[1:]:
    total = total + part
print("\nrandom x reassembles from its grades exactly:",
      np.array_equal(total.coeffs, x.coeffs))

print("\nblade squared norms in Cl(R^{1,2}):")
for mask in range(sig.n_blades):
    blade = Multivector.blade(sig, mask)
    print(f"  {blade_label(mask):>5s}: {extended_inner_product(blade, blade):+.0f}")

# ---------------------------------------------------------------------------
# The full multiplication table, straight from the structure constants.
# ---------------------------------------------------------------------------
table = build_cayley(Signature(2, 0))
print("\nCl(R^{2,0}) multiplication table:")
labels = [blade_label(a) for a in range(4)]
print("      " + "".join(f"{l:>6s}" for l in labels))
for a in range(4):
    row = []
    for b in range(4):
        c = a ^ b
        sign = "-" if table.entries[c, a, b] < 0 else ""
        row.append(f"{sign + labels[c]:>6s}")
    print(f"{labels[a]:>6s}" + "".join(row))
