import numpy as np
import pytest

from csconv.algebra import Multivector, Signature, geometric_product
from csconv.cgenn import (
    KernelNetConfig,
    geometric_product_layer,
    init_net_params,
    kernel_network_forward,
    linear_layer,
    mv_activation,
)
from csconv.group import compose, rho_cl_matrix, sample_boost, sample_rotation

SIGS = [Signature(2, 0), Signature(1, 1), Signature(3, 0), Signature(1, 2)]


def random_elements(sig, rng, count):
    out = []
    for _ in range(count):
        g = sample_rotation(sig, rng)
        if sig.p and sig.q:
            g = compose(g, sample_boost(sig, rng))
        out.append(g)
    return out


def apply_rep(g, x):
    """Apply rho_cl channel-wise to a (N, c, 2^d) stack."""
    rep = rho_cl_matrix(g).matrix
    return np.einsum("PQ,NcQ->NcP", rep, x)


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-30)


def test_linear_layer_identity_and_grade_scaling():
    sig = Signature(2, 0)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 1, 4))
    w = np.ones((3, 1, 1))
    assert np.allclose(linear_layer(w, x), x)

    w = np.zeros((3, 1, 1))
    w[0] = 2.0  # scalars x2
    w[1] = 3.0  # vectors x3
    w[2] = 1.0
    out = linear_layer(w, x)
    assert np.allclose(out[..., 0], 2.0 * x[..., 0])
    assert np.allclose(out[..., 1:3], 3.0 * x[..., 1:3])
    assert np.allclose(out[..., 3], x[..., 3])


def test_gp_layer_unit_weights_is_geometric_product():
    rng = np.random.default_rng(1)
    for sig in SIGS:
        x1 = rng.standard_normal((3, 2, sig.n_blades))
        x2 = rng.standard_normal((3, 2, sig.n_blades))
        w = np.ones((2, sig.d + 1, sig.d + 1, sig.d + 1))
        out = geometric_product_layer(sig, w, x1, x2)
        for n in range(3):
            for c in range(2):
                ref = geometric_product(
                    Multivector(sig, x1[n, c]), Multivector(sig, x2[n, c])
                ).coeffs
                assert np.max(np.abs(out[n, c] - ref)) < 1e-12


def test_gp_layer_vector_square():
    # e1 o e1 = +1 in (2,0)
    sig = Signature(2, 0)
    e1 = np.zeros((1, 1, 4))
    e1[0, 0, 1] = 1.0
    w = np.ones((1, 3, 3, 3))
    out = geometric_product_layer(sig, w, e1, e1)
    assert np.allclose(out[0, 0], [1.0, 0.0, 0.0, 0.0])


def test_mv_activation_gate():
    sig = Signature(2, 0)
    x = np.array([[[0.0, 1.0, -2.0, 0.5]]])
    out = mv_activation(x)
    assert np.allclose(out, 0.5 * x)  # Phi(0) = 1/2

    x = np.array([[[10.0, 1.0, -2.0, 0.5]]])
    out = mv_activation(x)
    assert np.max(np.abs(out - x)) < 1e-15  # Phi(10) ~ 1


@pytest.mark.parametrize("sig", SIGS, ids=lambda s: f"{s.p}{s.q}")
def test_layer_equivariance(sig):
    rng = np.random.default_rng(7)
    n, c_in, c_out = 5, 3, 2
    x = rng.standard_normal((n, c_in, sig.n_blades))
    x2 = rng.standard_normal((n, c_in, sig.n_blades))
    w_lin = rng.standard_normal((sig.d + 1, c_out, c_in))
    w_gp = rng.standard_normal((c_in, sig.d + 1, sig.d + 1, sig.d + 1))
    for g in random_elements(sig, rng, 10):
        gx, gx2 = apply_rep(g, x), apply_rep(g, x2)

        lhs = linear_layer(w_lin, gx)
        rhs = apply_rep(g, linear_layer(w_lin, x))
        assert rel_err(lhs, rhs) < 1e-9

        lhs = geometric_product_layer(sig, w_gp, gx, gx2)
        rhs = apply_rep(g, geometric_product_layer(sig, w_gp, x, x2))
        assert rel_err(lhs, rhs) < 1e-9

        lhs = mv_activation(gx)
        rhs = apply_rep(g, mv_activation(x))
        assert rel_err(lhs, rhs) < 1e-12


@pytest.mark.parametrize("sig", SIGS, ids=lambda s: f"{s.p}{s.q}")
def test_kernel_network_equivariance(sig):
    cfg = KernelNetConfig(sig, width=6, depth=2, n_out=4, seed=3)
    params = init_net_params(cfg)
    rng = np.random.default_rng(11)
    x = rng.standard_normal((4, 1, sig.n_blades))
    for g in random_elements(sig, rng, 10):
        lhs = kernel_network_forward(cfg, params, apply_rep(g, x))
        rhs = apply_rep(g, kernel_network_forward(cfg, params, x))
        assert rel_err(lhs, rhs) < 1e-9


def test_kernel_network_deterministic():
    sig = Signature(1, 1)
    cfg = KernelNetConfig(sig, width=4, depth=1, n_out=2, seed=9)
    x = np.random.default_rng(0).standard_normal((3, 1, 4))
    out1 = kernel_network_forward(cfg, init_net_params(cfg), x)
    out2 = kernel_network_forward(cfg, init_net_params(cfg), x)
    assert np.array_equal(out1, out2)


def test_config_validation():
    with pytest.raises(ValueError):
        KernelNetConfig(Signature(2, 0), width=0)
    with pytest.raises(ValueError):
        KernelNetConfig(Signature(2, 0), depth=0)
