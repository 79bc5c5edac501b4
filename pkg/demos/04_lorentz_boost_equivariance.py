"""Boost equivariance on spacetime signatures, checked at the kernel level.

Boosts do not preserve any finite grid, so they are validated where no
discretization intervenes: the kernel as a function on R^{p,q}.  The
residual stays at float precision up to rapidity 2 on both (1,1) and (1,2).

Run:  python demos/04_lorentz_boost_equivariance.py
"""

import numpy as np

from csconv import (
    KernelConfig,
    Signature,
    boost,
    init_kernel_params,
    kernel_operator,
    steerability_error,
)

for p, q in ((1, 1), (1, 2)):
    sig = Signature(p, q)
    sizes = (5,) * sig.d if sig.d == 2 else (3,) * sig.d
    cfg = KernelConfig(sig, c_in=1, c_out=1, sizes=sizes, width=6, depth=2, seed=3)
    params = init_kernel_params(cfg, int(np.prod(sizes)), rng=np.random.default_rng(3))
    k_fn = lambda pts: np.asarray(kernel_operator(cfg, params, pts))
    rng = np.random.default_rng(0)

    print(f"signature ({p},{q}):")
    for rapidity in (0.25, 0.5, 1.0, 1.5, 2.0):
        g = boost(sig, 0, int(rng.integers(sig.p, sig.d)), rapidity)
        pts = rng.uniform(-1.0, 1.0, size=(5, sig.d))
        err = steerability_error(k_fn, g, pts)
        print(f"  rapidity {rapidity:4.2f}: residual {err:.3e}")
    print()

print("the same check with an unstructured head is the negative control;")
print("see csconv.verify.suite_steerability, which pushes it above 0.1.")
