"""Generate an implicit steerable kernel and verify its defining property.

The kernel is produced point by point: an orbit-invariant shell scalar and
the coordinates are embedded into a multivector, pushed through an
equivariant network, masked per grade, and expanded into an operator by a
weighted partial geometric product.  The result satisfies
K(g v) = rho_out(g) K(v) rho_in(g)^{-1} at arbitrary points.

Run:  python demos/03_steerable_kernels.py
"""

import numpy as np

from csconv import (
    KernelConfig,
    Signature,
    compose,
    generate_kernel,
    init_kernel_params,
    kernel_operator,
    sample_boost,
    sample_rotation,
    scalar_shell,
    steerability_error,
)
from csconv.serialization import kernel_to_pgms

# ---------------------------------------------------------------------------
# The orbital shell: constant on every group orbit, signed by the metric.
# ---------------------------------------------------------------------------
m = Signature(1, 1)
for v in ([0.5, 0.0], [0.0, 0.5], [0.5, 0.5]):
    print(f"shell at {v}: {scalar_shell(m, v, 0.5):+.4f}")
print("timelike positive, spacelike negative, lightlike zero.\n")

# ---------------------------------------------------------------------------
# Generate a kernel on a 7x7 grid and test steerability off-grid.
# ---------------------------------------------------------------------------
for p, q in ((2, 0), (1, 1)):
    sig = Signature(p, q)
    cfg = KernelConfig(sig, c_in=2, c_out=1, sizes=(7, 7), width=6, depth=2, seed=11)
    params = init_kernel_params(cfg, 49, rng=np.random.default_rng(11))
    kernel = generate_kernel(cfg, params=params)
    print(f"({p},{q}) kernel: operator field of shape {kernel.data.shape}")

    rng = np.random.default_rng(5)
    k_fn = lambda pts: np.asarray(kernel_operator(cfg, params, pts))
    worst = 0.0
    for _ in range(50):
        g = sample_rotation(sig, rng)
        if p and q:
            g = compose(g, sample_boost(sig, rng))
        pts = rng.uniform(-1.0, 1.0, size=(2, sig.d))
        worst = max(worst, steerability_error(k_fn, g, pts))
    print(f"  steerability residual over 50 random group elements: {worst:.2e}\n")

# ---------------------------------------------------------------------------
# Export the blade-pair blocks of the Euclidean kernel as PGM images.
# ---------------------------------------------------------------------------
sig = Signature(2, 0)
cfg = KernelConfig(sig, sizes=(15, 15), width=6, depth=2, seed=0)
kernel = generate_kernel(cfg)
files = kernel_to_pgms(kernel, "demo_output/kernel_blocks")
print(f"wrote {len(files)} block images under demo_output/kernel_blocks/")
