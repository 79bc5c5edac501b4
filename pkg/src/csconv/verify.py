"""Executable checks for every equivariance and steerability claim.

Field-level checks are restricted to grid-preserving isometries (integer
translations, quarter turns within same-sign axis pairs, axis reflections):
those act by exact index bookkeeping, so no interpolation error can mask a
real equivariance error.  Continuous group elements, including boosts, are
validated at the kernel-function level where no discretization intervenes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import Signature, blade_grades
from .conv import MultivectorField, model_forward
from .group import GroupElement, compose, rho_cl_matrix, rho_hom_apply, sample_boost, sample_rotation
from .kernel import (
    KernelConfig,
    KernelGrid,
    SteerableKernel,
    generate_kernel,
    init_kernel_params,
    kernel_head_apply,
    kernel_operator,
)

__all__ = [
    "IsometryAction",
    "CheckReport",
    "transform_field",
    "relative_equivariance_error",
    "steerability_error",
    "grid_point_group",
    "angular_spectrum",
    "compose_kernels",
    "run_suite",
    "SUITES",
]

VERIFY_SIGS = [Signature(2, 0), Signature(1, 1), Signature(3, 0), Signature(1, 2)]


@dataclass(frozen=True)
class IsometryAction:
    """Grid-preserving isometry: integer translation plus a signed permutation."""

    sig: Signature
    translation: tuple[int, ...]
    element: GroupElement

    def __post_init__(self):
        m = self.element.matrix
        if not np.all(np.isin(m, (-1.0, 0.0, 1.0))):
            raise ValueError("action matrix must be a signed permutation")
        if np.any(np.sum(m != 0.0, axis=0) != 1) or np.any(np.sum(m != 0.0, axis=1) != 1):
            raise ValueError("action matrix must have one nonzero entry per row and column")
        if len(self.translation) != self.sig.d:
            raise ValueError("one translation component per axis required")
        object.__setattr__(self, "translation", tuple(int(t) for t in self.translation))


def transform_field(act: IsometryAction, f: MultivectorField) -> MultivectorField:
    """[(t,g) . f](x) = rho(g) f(g^{-1}(x - t)) with circular indexing."""
    if act.sig != f.sig:
        raise ValueError("signature mismatch")
    d = f.sig.d
    sizes = f.sizes
    ginv = np.rint(np.linalg.inv(act.element.matrix)).astype(np.int64)
    # permuted axes must have equal sizes for the index map to be a bijection
    for j in range(d):
        src_axis = int(np.nonzero(ginv[j])[0][0])
        if sizes[src_axis] != sizes[j]:
            raise ValueError("action permutes axes of unequal grid size")

    idx = np.indices(sizes)  # (d, *sizes)
    shifted = idx - np.reshape(np.array(act.translation), (d,) + (1,) * d)
    source = np.einsum("ij,j...->i...", ginv, shifted)
    source = tuple(np.mod(source[j], sizes[j]) for j in range(d))
    gathered = f.data[(slice(None), *source, slice(None))]
    rep = rho_cl_matrix(act.element).matrix
    out = np.einsum("PQ,c...Q->c...P", rep, gathered)
    return MultivectorField(f.sig, out, f.spacing)


def relative_equivariance_error(model, act: IsometryAction, f: MultivectorField) -> float:
    """|| model(g.f) - g.model(f) || / || model(g.f) + g.model(f) || over the grid."""
    a = model(transform_field(act, f))
    b = transform_field(act, model(f))
    num = np.linalg.norm(a.data - b.data)
    den = np.linalg.norm(a.data + b.data)
    if den == 0.0:
        warnings.warn("equivariance error undefined: zero denominator")
        return float("nan")
    return float(num / den)


def steerability_error(k_fn, g: GroupElement, points) -> float:
    """max_v ||K(g v) - rho_Hom(g)(K(v))||_F / ||.||_F at analytic points."""
    points = np.asarray(points, dtype=np.float64)
    k_v = k_fn(points)
    k_gv = k_fn(points @ g.matrix.T)
    worst = 0.0
    for t in range(points.shape[0]):
        expected = rho_hom_apply(g, k_v[t])
        denom = np.linalg.norm(expected)
        err = np.linalg.norm(k_gv[t] - expected) / max(denom, 1e-300)
        worst = max(worst, err)
    return float(worst)


def grid_point_group(sig: Signature) -> list[GroupElement]:
    """All signed permutations preserving the grid: closure of quarter turns
    within same-sign axis pairs and single-axis reflections."""
    d = sig.d
    gens = []
    for ax in range(d):
        diag = np.ones(d)
        diag[ax] = -1.0
        gens.append(np.diag(diag))
    for i in range(d):
        for j in range(i + 1, d):
            if (i < sig.p) == (j < sig.p):
                m = np.eye(d)
                m[i, i] = m[j, j] = 0.0
                m[j, i] = 1.0
                m[i, j] = -1.0
                gens.append(m)
    seen = {tuple(np.eye(d).astype(np.int64).ravel())}
    frontier = [np.eye(d)]
    elements = [np.eye(d)]
    while frontier:
        nxt = []
        for m in frontier:
            for gen in gens:
                prod = gen @ m
                key = tuple(np.rint(prod).astype(np.int64).ravel())
                if key not in seen:
                    seen.add(key)
                    nxt.append(prod)
                    elements.append(prod)
        frontier = nxt
    return [GroupElement(sig, m) for m in elements]


# ---------------------------------------------------------------------------
# angular spectra on (2,0)
# ---------------------------------------------------------------------------

def _bilinear_sample(plane: np.ndarray, coords_x: np.ndarray, coords_y: np.ndarray,
                     xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample a 2-D array given per-axis coordinate vectors (uniformly spaced)."""
    def frac_index(c, pts):
        step = c[1] - c[0]
        return (pts - c[0]) / step

    fx = frac_index(coords_x, xs)
    fy = frac_index(coords_y, ys)
    x0 = np.clip(np.floor(fx).astype(int), 0, plane.shape[0] - 2)
    y0 = np.clip(np.floor(fy).astype(int), 0, plane.shape[1] - 2)
    tx = fx - x0
    ty = fy - y0
    p00 = plane[x0, y0]
    p10 = plane[x0 + 1, y0]
    p01 = plane[x0, y0 + 1]
    p11 = plane[x0 + 1, y0 + 1]
    return (
        p00 * (1 - tx) * (1 - ty)
        + p10 * tx * (1 - ty)
        + p01 * (1 - tx) * ty
        + p11 * tx * ty
    )


def angular_spectrum(kernel: SteerableKernel, grade_out: int, grade_in: int,
                     channel_out: int = 0, channel_in: int = 0,
                     n_angles: int = 256, n_radii: int = 8) -> np.ndarray:
    """Energy per integer angular frequency of one operator block on (2,0).

    The block selected by (grade_out, grade_in) is resampled on rings by
    bilinear interpolation; a discrete Fourier transform over the angle per
    ring gives the energy, aggregated over rings and block entries.
    Returns an array of length n_angles // 2 + 1 indexed by frequency.
    """
    if kernel.sig.as_tuple() != (2, 0):
        raise ValueError("angular spectra are defined for signature (2,0) only")
    n = kernel.sig.n_blades
    grades = blade_grades(kernel.sig.d)
    rows = [channel_out * n + a for a in range(n) if grades[a] == grade_out]
    cols = [channel_in * n + a for a in range(n) if grades[a] == grade_in]
    sizes = kernel.data.shape[2:]
    axes = [np.unique(kernel.grid.coords[:, j]) for j in range(2)]
    rmax = min(axes[0].max(), axes[1].max())
    radii = np.linspace(rmax / n_radii, rmax, n_radii)
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)

    energy = np.zeros(n_angles // 2 + 1)
    for r in radii:
        xs = r * np.cos(angles)
        ys = r * np.sin(angles)
        for ri in rows:
            for ci in cols:
                plane = kernel.data[ri, ci].reshape(sizes)
                signal = _bilinear_sample(plane, axes[0], axes[1], xs, ys)
                coef = np.fft.rfft(signal) / n_angles
                mag = np.abs(coef) ** 2
                mag[1:] *= 2.0  # fold the conjugate half
                if n_angles % 2 == 0:
                    mag[-1] /= 2.0
                energy += mag
    return energy


def frequency_fraction(energy: np.ndarray, freq: int) -> float:
    total = float(np.sum(energy))
    return float(energy[freq] / total) if total > 0 else 0.0


def compose_kernels(k1: SteerableKernel, k2: SteerableKernel) -> SteerableKernel:
    """Kernel of the composed convolution: conv(k2, conv(k1, f)) = conv(k2*k1, f).

    ``k1`` is applied first.  The output support is the sum of the supports;
    grid spacings must agree.
    """
    if k1.sig != k2.sig:
        raise ValueError("signature mismatch")
    if k2.c_in != k1.c_out:
        raise ValueError(f"channel chain mismatch: k1 out {k1.c_out}, k2 in {k2.c_in}")
    d = k1.sig.d
    sizes1 = k1.data.shape[2:]
    sizes2 = k2.data.shape[2:]
    out_sizes = tuple(a + b - 1 for a, b in zip(sizes1, sizes2))
    out = np.zeros((k2.data.shape[0], k1.data.shape[1], *out_sizes))
    for offset in np.ndindex(*sizes2):
        block = np.einsum("ab,bc...->ac...", k2.data[(slice(None), slice(None), *offset)], k1.data)
        dest = tuple(slice(o, o + s) for o, s in zip(offset, sizes1))
        out[(slice(None), slice(None), *dest)] += block

    # coordinates: same spacing, support extended to the sum of extents
    steps = []
    for j in range(d):
        ax = np.unique(k1.grid.coords[:, j])
        steps.append(ax[1] - ax[0] if len(ax) > 1 else 1.0)
    axes = [
        (np.arange(s) - (s - 1) / 2) * st for s, st in zip(out_sizes, steps)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=-1)
    grid = KernelGrid(k1.sig, out_sizes, coords)
    return SteerableKernel(k1.sig, k1.c_in, k2.c_out, grid, out,
                           provenance={"composed": True})


# ---------------------------------------------------------------------------
# named suites with JSON reports
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    check: str
    signature: tuple[int, int]
    n_samples: int
    max_err: float
    mean_err: float
    passed: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "check": self.check,
                "signature": list(self.signature),
                "n_samples": self.n_samples,
                "max_err": self.max_err,
                "mean_err": self.mean_err,
                "pass": self.passed,
            }
        )


def _report(check, sig, errors, tol) -> CheckReport:
    errors = np.asarray(errors, dtype=np.float64)
    return CheckReport(
        check=check,
        signature=sig.as_tuple(),
        n_samples=int(errors.size),
        max_err=float(errors.max()) if errors.size else 0.0,
        mean_err=float(errors.mean()) if errors.size else 0.0,
        passed=bool(errors.size and errors.max() < tol),
    )


def _random_elements(sig, rng, count, max_rapidity=2.0):
    out = []
    for _ in range(count):
        g = sample_rotation(sig, rng)
        if sig.p and sig.q:
            g = compose(g, sample_boost(sig, rng, max_rapidity=max_rapidity))
        out.append(g)
    return out


def suite_steerability(sig: Signature, seed: int = 0, n_samples: int = 100,
                       tol: float = 1e-9) -> list[CheckReport]:
    """K(gv) = rho_Hom(g) K(v) at analytic points, boosts up to rapidity 2."""
    rng = np.random.default_rng(seed)
    cfg = KernelConfig(sig, c_in=2, c_out=1, sizes=(5,) * sig.d if sig.d <= 2 else (3,) * sig.d,
                       width=4, depth=2, seed=seed)
    params = init_kernel_params(cfg, 25, rng=np.random.default_rng(seed + 1))
    k_fn = lambda pts: np.asarray(kernel_operator(cfg, params, pts))
    errors = []
    for g in _random_elements(sig, rng, n_samples):
        v = rng.uniform(-1.0, 1.0, size=(1, sig.d))
        errors.append(steerability_error(k_fn, g, v))
    reports = [_report("steerability", sig, errors, tol)]

    # negative control: replace the weighted Cayley table by unstructured noise
    control_errors = []
    rng_c = np.random.default_rng(seed + 2)
    raw = rng_c.standard_normal((cfg.c_out, cfg.c_in) + (sig.n_blades,) * 3)
    broken_fn = lambda pts: np.asarray(
        kernel_operator(cfg, params, pts, unstructured_head=raw)
    )
    for g in _random_elements(sig, np.random.default_rng(seed + 3), 10):
        v = rng_c.uniform(0.3, 1.0, size=(1, sig.d))
        control_errors.append(steerability_error(broken_fn, g, v))
    reports.append(
        CheckReport(
            check="steerability_negative_control",
            signature=sig.as_tuple(),
            n_samples=len(control_errors),
            max_err=float(np.max(control_errors)),
            mean_err=float(np.mean(control_errors)),
            passed=bool(np.max(control_errors) > 0.1),
        )
    )
    return reports


def suite_kernel_head(sig: Signature, seed: int = 0, n_samples: int = 100,
                      tol: float = 1e-9) -> list[CheckReport]:
    """Equivariance of the kernel head on random (g, k, f) triples."""
    from .group import rho_cl_channel_matrix

    rng = np.random.default_rng(seed)
    cfg = KernelConfig(sig, c_in=2, c_out=2, sizes=(3,) * sig.d, width=3, depth=1, seed=seed)
    params = init_kernel_params(cfg, 9, rng=np.random.default_rng(seed + 1))
    errors = []
    n = sig.n_blades
    for g in _random_elements(sig, rng, n_samples):
        rep = rho_cl_channel_matrix(g, 1)
        k = rng.standard_normal((cfg.c_out, cfg.c_in, n))
        f = rng.standard_normal((cfg.c_in, n))
        gk = np.einsum("PQ,oiQ->oiP", rep, k)
        gf = np.einsum("PQ,iQ->iP", rep, f)
        lhs = kernel_head_apply(cfg, gk, params, gf)
        rhs = np.einsum("PQ,oQ->oP", rep, kernel_head_apply(cfg, k, params, f))
        errors.append(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))
    return [_report("kernel_head_equivariance", sig, errors, tol)]


def suite_representation(sig: Signature, seed: int = 0, n_samples: int = 200,
                         tol: float = 1e-9) -> list[CheckReport]:
    """Homomorphism, multiplicativity, orthogonality and grade preservation."""
    from .algebra import Multivector, extended_inner_product, geometric_product

    rng = np.random.default_rng(seed)
    hom, mult, orth = [], [], []
    grade_ok = True
    grades = blade_grades(sig.d)
    off = grades[:, None] != grades[None, :]
    for _ in range(n_samples):
        g1, g2 = _random_elements(sig, rng, 2)
        r1 = rho_cl_matrix(g1).matrix
        r2 = rho_cl_matrix(g2).matrix
        r21 = rho_cl_matrix(compose(g2, g1)).matrix
        hom.append(np.max(np.abs(r21 - r2 @ r1)) / max(np.max(np.abs(r21)), 1.0))

        x = Multivector(sig, rng.standard_normal(sig.n_blades))
        y = Multivector(sig, rng.standard_normal(sig.n_blades))
        lhs = r1 @ geometric_product(x, y).coeffs
        rhs = geometric_product(
            Multivector(sig, r1 @ x.coeffs), Multivector(sig, r1 @ y.coeffs)
        ).coeffs
        mult.append(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), 1.0))

        before = extended_inner_product(x, y)
        after = extended_inner_product(
            Multivector(sig, r1 @ x.coeffs), Multivector(sig, r1 @ y.coeffs)
        )
        orth.append(abs(before - after) / max(abs(before), 1.0))
        grade_ok = grade_ok and bool(np.all(r1[off] == 0.0))

    reports = [
        _report("representation_homomorphism", sig, hom, tol),
        _report("representation_multiplicativity", sig, mult, tol),
        _report("representation_orthogonality", sig, orth, tol),
        CheckReport("representation_grade_preservation", sig.as_tuple(),
                    n_samples, 0.0 if grade_ok else 1.0, 0.0 if grade_ok else 1.0, grade_ok),
    ]
    return reports


def _two_layer_model(sig: Signature, seed: int, kernel_sizes) -> list:
    c = 2
    cfg1 = KernelConfig(sig, c_in=c, c_out=c, sizes=kernel_sizes, width=4, depth=1, seed=seed)
    cfg2 = KernelConfig(sig, c_in=c, c_out=c, sizes=kernel_sizes, width=4, depth=1, seed=seed + 1)
    return [generate_kernel(cfg1), "activation", generate_kernel(cfg2), "residual"]


def suite_equivariance(sig: Signature, seed: int = 0, tol: float = 1e-6,
                       field_sizes=None, n_translations: int = 3) -> list[CheckReport]:
    """Grid-level E(p,q) equivariance of a two-layer model, plus controls."""
    rng = np.random.default_rng(seed)
    if field_sizes is None:
        field_sizes = (16,) * sig.d if sig.d == 2 else (8,) * sig.d
    kernel_sizes = (5,) * sig.d if sig.d == 2 else (3,) * sig.d
    layers = _two_layer_model(sig, seed, kernel_sizes)
    model = lambda f: model_forward(layers, f, padding="circular")
    f = MultivectorField(
        sig, rng.standard_normal((2, *field_sizes, sig.n_blades))
    )

    errors = []
    point_group = grid_point_group(sig)
    for idx, g in enumerate(point_group):
        t = tuple(int(rng.integers(0, s)) for s in field_sizes) if idx % 2 else (0,) * sig.d
        act = IsometryAction(sig, t, g)
        errors.append(relative_equivariance_error(model, act, f))
    reports = [_report("grid_equivariance_point_group", sig, errors, tol)]

    trans_errors = []
    for _ in range(n_translations):
        t = tuple(int(rng.integers(0, s)) for s in field_sizes)
        act = IsometryAction(sig, t, GroupElement(sig, np.eye(sig.d)))
        trans_errors.append(relative_equivariance_error(model, act, f))
    reports.append(_report("grid_equivariance_translations", sig, trans_errors, 1e-12))

    # negative control: an unconstrained random kernel of the same shape
    n = sig.n_blades
    bad_data = np.random.default_rng(seed + 7).standard_normal(
        (2 * n, 2 * n, *kernel_sizes)
    )
    bad = SteerableKernel(sig, 2, 2, KernelGrid.centered(sig, kernel_sizes), bad_data)
    bad_model = lambda f: model_forward([bad], f, padding="circular")
    ctrl = []
    for g in point_group:
        if np.allclose(g.matrix, np.eye(sig.d)):
            continue
        act = IsometryAction(sig, (0,) * sig.d, g)
        ctrl.append(relative_equivariance_error(bad_model, act, f))
    reports.append(
        CheckReport(
            "grid_equivariance_negative_control", sig.as_tuple(), len(ctrl),
            float(np.max(ctrl)), float(np.mean(ctrl)), bool(np.max(ctrl) > 0.05),
        )
    )
    return reports


def suite_spectrum(sig: Signature = Signature(2, 0), seed: int = 0) -> list[CheckReport]:
    """Frequency content of single and composed kernels on (2,0)."""
    if sig.as_tuple() != (2, 0):
        raise ValueError("spectrum suite runs on signature (2,0)")
    cfg = KernelConfig(sig, c_in=1, c_out=1, sizes=(15, 15), width=6, depth=2, seed=seed)
    kernel = generate_kernel(cfg)

    e_vv = angular_spectrum(kernel, 1, 1)
    frac2 = frequency_fraction(e_vv, 2)
    reports = [
        CheckReport("single_kernel_vector_vector_freq2", sig.as_tuple(),
                    int(e_vv.size), frac2, frac2, bool(frac2 < 0.02)),
    ]

    e_sv = angular_spectrum(kernel, 0, 1)
    dom = int(np.argmax(e_sv))
    reports.append(
        CheckReport("single_kernel_vector_to_scalar_dominant_freq1", sig.as_tuple(),
                    int(e_sv.size), float(dom), float(dom), bool(dom == 1))
    )

    e_ss = angular_spectrum(kernel, 0, 0)
    frac0 = frequency_fraction(e_ss, 0)
    reports.append(
        CheckReport("single_kernel_scalar_scalar_freq0", sig.as_tuple(),
                    int(e_ss.size), 1.0 - frac0, 1.0 - frac0, bool(frac0 > 0.99))
    )

    diff = frequency2_composed_kernel(sizes=(15, 15))
    e_diff = angular_spectrum(diff, 1, 1)
    frac2c = frequency_fraction(e_diff, 2)
    reports.append(
        CheckReport("composed_kernel_freq2_recovery", sig.as_tuple(),
                    int(e_diff.size), frac2c, frac2c, bool(frac2c > 0.5))
    )
    return reports


def _handmade_frequency1_kernel(sizes, grade_from: int, grade_to: int,
                                radial_sigma: float = 0.35) -> SteerableKernel:
    """Single-channel (2,0) kernel with one hand-set frequency-1 block.

    grade pairs: (1, 0) vector->scalar uses (-sin, cos); (0, 1)
    scalar->vector its transpose; (1, 2) vector->pseudoscalar uses
    (cos, sin); (2, 1) pseudoscalar->vector its transpose.
    """
    sig = Signature(2, 0)
    grid = KernelGrid.centered(sig, sizes)
    n = sig.n_blades
    data = np.zeros((n, n, *sizes))
    pts = grid.coords.reshape(*sizes, 2)
    r = np.hypot(pts[..., 0], pts[..., 1])
    phi = np.arctan2(pts[..., 1], pts[..., 0])
    radial = r * np.exp(-(r ** 2) / (2 * radial_sigma ** 2))
    minus_sin, cos_, sin_ = -np.sin(phi) * radial, np.cos(phi) * radial, np.sin(phi) * radial
    if (grade_from, grade_to) == (1, 0):
        data[0, 1] = minus_sin
        data[0, 2] = cos_
    elif (grade_from, grade_to) == (0, 1):
        data[1, 0] = minus_sin
        data[2, 0] = cos_
    elif (grade_from, grade_to) == (1, 2):
        data[3, 1] = cos_
        data[3, 2] = sin_
    elif (grade_from, grade_to) == (2, 1):
        data[1, 3] = cos_
        data[2, 3] = sin_
    else:
        raise ValueError("unsupported block")
    return SteerableKernel(sig, 1, 1, grid, data)


def frequency2_composed_kernel(sizes=(15, 15)) -> SteerableKernel:
    """Difference of vector->pseudoscalar->vector and vector->scalar->vector
    compositions; its vector->vector block carries angular frequency 2."""
    k_sv = _handmade_frequency1_kernel(sizes, 1, 0)
    k_vs = _handmade_frequency1_kernel(sizes, 0, 1)
    k_pv = _handmade_frequency1_kernel(sizes, 1, 2)
    k_vp = _handmade_frequency1_kernel(sizes, 2, 1)
    sigma = compose_kernels(k_sv, k_vs)
    pi = compose_kernels(k_pv, k_vp)
    return SteerableKernel(
        pi.sig, pi.c_in, pi.c_out, pi.grid, pi.data - sigma.data,
        provenance={"composed": "pi_minus_sigma"},
    )


SUITES = {
    "steerability": suite_steerability,
    "kernel-head": suite_kernel_head,
    "representation": suite_representation,
    "equivariance": suite_equivariance,
    "spectrum": suite_spectrum,
}


def run_suite(name: str, sig: Signature, seed: int = 0) -> list[CheckReport]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
    return SUITES[name](sig, seed=seed)
