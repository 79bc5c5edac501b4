import numpy as np
import pytest

from csconv.algebra import (
    Multivector,
    Signature,
    blade_grades,
    blade_label,
    blade_norms,
    build_cayley,
    cl_embed,
    extended_inner_product,
    geometric_product,
    grade_projection,
)

from oracles import cayley_oracle

ALL_SIGS_D4 = [
    Signature(p, q)
    for d in range(1, 5)
    for p in range(d + 1)
    for q in [d - p]
]


def random_mv(sig, rng):
    return Multivector(sig, rng.standard_normal(sig.n_blades))


def random_vector_mv(sig, rng):
    coeffs = np.zeros(sig.n_blades)
    v = rng.standard_normal(sig.d)
    for i in range(sig.d):
        coeffs[1 << i] = v[i]
    return Multivector(sig, coeffs), v


def test_signature_validation():
    with pytest.raises(ValueError):
        Signature(0, 0)
    with pytest.raises(ValueError):
        Signature(-1, 2)
    sig = Signature(1, 2)
    assert sig.d == 3
    assert sig.n_blades == 8
    assert sig.metric_diag.tolist() == [1.0, -1.0, -1.0]


def test_blade_labels_and_grades():
    assert blade_label(0) == "1"
    assert blade_label(0b101) == "e13"
    assert blade_grades(2).tolist() == [0, 1, 1, 2]
    # binom(d, k) blades of grade k
    for d in range(1, 5):
        grades = blade_grades(d)
        for k in range(d + 1):
            from math import comb

            assert int(np.sum(grades == k)) == comb(d, k)


def test_cayley_one_generator():
    # single generator: 1*1=1, 1*e1=e1, e1*1=e1, e1*e1=+1
    table = build_cayley(Signature(1, 0))
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1
    expected[1, 0, 1] = 1
    expected[1, 1, 0] = 1
    expected[0, 1, 1] = 1
    assert np.array_equal(table.entries, expected)


def test_cayley_swap_sign():
    # (2,0): e2 o e1 = -e12, one adjacent swap
    table = build_cayley(Signature(2, 0))
    assert table.entries[0b11, 0b10, 0b01] == -1.0
    assert table.entries[0b11, 0b01, 0b10] == 1.0


def test_cayley_negative_axis():
    # (1,1): e2 o e2 = -1
    table = build_cayley(Signature(1, 1))
    assert table.entries[0, 0b10, 0b10] == -1.0


@pytest.mark.parametrize("sig", ALL_SIGS_D4, ids=lambda s: f"{s.p}{s.q}")
def test_cayley_matches_string_oracle(sig):
    table = build_cayley(sig)
    assert np.array_equal(table.entries, cayley_oracle(sig))


@pytest.mark.parametrize("sig", ALL_SIGS_D4, ids=lambda s: f"{s.p}{s.q}")
def test_cayley_unit_and_uniqueness(sig):
    table = build_cayley(sig)
    n = sig.n_blades
    for a in range(n):
        assert table.entries[a, 0, a] == 1.0
        assert table.entries[a, a, 0] == 1.0
        for b in range(n):
            nonzero = np.nonzero(table.entries[:, a, b])[0]
            assert nonzero.tolist() == [a ^ b]


@pytest.mark.parametrize("sig", ALL_SIGS_D4, ids=lambda s: f"{s.p}{s.q}")
def test_associativity_and_unitality(sig):
    rng = np.random.default_rng(7)
    one = Multivector.unit(sig)
    for _ in range(10):
        x, y, z = (random_mv(sig, rng) for _ in range(3))
        left = geometric_product(geometric_product(x, y), z)
        right = geometric_product(x, geometric_product(y, z))
        scale = max(np.max(np.abs(left.coeffs)), 1.0)
        assert np.max(np.abs(left.coeffs - right.coeffs)) / scale < 1e-12
        assert np.allclose(geometric_product(one, x).coeffs, x.coeffs)
        assert np.allclose(geometric_product(x, one).coeffs, x.coeffs)


@pytest.mark.parametrize("sig", ALL_SIGS_D4, ids=lambda s: f"{s.p}{s.q}")
def test_fundamental_relation(sig):
    rng = np.random.default_rng(11)
    metric = sig.metric_diag
    for _ in range(10):
        x, v = random_vector_mv(sig, rng)
        sq = geometric_product(x, x)
        expected = float(np.sum(metric * v * v))
        assert abs(sq.coeffs[0] - expected) < 1e-12 * max(abs(expected), 1.0)
        assert np.all(sq.coeffs[1:] == 0.0)


@pytest.mark.parametrize("sig", ALL_SIGS_D4, ids=lambda s: f"{s.p}{s.q}")
def test_anticommutation(sig):
    rng = np.random.default_rng(13)
    metric = sig.metric_diag
    for _ in range(10):
        x1, v1 = random_vector_mv(sig, rng)
        x2, v2 = random_vector_mv(sig, rng)
        lhs = geometric_product(x2, x1)
        inner = float(np.sum(metric * v1 * v2))
        rhs = -geometric_product(x1, x2) + 2.0 * inner * Multivector.unit(sig)
        assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) < 1e-12


def test_geometric_product_examples():
    sig = Signature(2, 0)
    e1 = Multivector.blade(sig, 0b01)
    e2 = Multivector.blade(sig, 0b10)
    assert geometric_product(e1, e2).coeffs.tolist() == [0, 0, 0, 1]
    assert geometric_product(e2, e1).coeffs.tolist() == [0, 0, 0, -1]

    # (1,1): (a e1 + b e2)^2 = a^2 - b^2
    sig = Signature(1, 1)
    a, b = 1.7, 0.4
    v = Multivector(sig, [0.0, a, b, 0.0])
    sq = geometric_product(v, v)
    assert abs(sq.coeffs[0] - (a * a - b * b)) < 1e-14
    assert np.all(sq.coeffs[1:] == 0.0)


def test_signature_mismatch_raises():
    x = Multivector.unit(Signature(2, 0))
    y = Multivector.unit(Signature(1, 1))
    with pytest.raises(ValueError):
        geometric_product(x, y)
    with pytest.raises(ValueError):
        extended_inner_product(x, y)


def test_grade_projection():
    sig = Signature(2, 0)
    x = Multivector(sig, [3.0, 2.0, 0.0, 5.0])
    assert grade_projection(x, 1).coeffs.tolist() == [0, 2, 0, 0]
    bivec = Multivector.blade(sig, 0b11, 4.0)
    assert np.all(grade_projection(bivec, 0).coeffs == 0.0)
    with pytest.raises(ValueError):
        grade_projection(x, 3)

    # projections are idempotent and sum back to x
    rng = np.random.default_rng(3)
    for sig in ALL_SIGS_D4:
        x = random_mv(sig, rng)
        total = np.zeros(sig.n_blades)
        for k in range(sig.d + 1):
            proj = grade_projection(x, k)
            assert np.array_equal(grade_projection(proj, k).coeffs, proj.coeffs)
            total += proj.coeffs
        assert np.array_equal(total, x.coeffs)


def test_extended_inner_product_table():
    # norm column for (1,2): scalar +1, e1 +1, e2/e3 -1, e12/e13 -1, e23 +1, e123 +1
    sig = Signature(1, 2)
    expected = {
        "1": 1.0,
        "e1": 1.0,
        "e2": -1.0,
        "e3": -1.0,
        "e12": -1.0,
        "e13": -1.0,
        "e23": 1.0,
        "e123": 1.0,
    }
    norms = blade_norms(sig)
    for mask in range(sig.n_blades):
        assert norms[mask] == expected[blade_label(mask)]
        blade = Multivector.blade(sig, mask)
        assert extended_inner_product(blade, blade) == expected[blade_label(mask)]

    e1 = Multivector.blade(sig, 0b001)
    e2 = Multivector.blade(sig, 0b010)
    assert extended_inner_product(e1, e2) == 0.0

    for sig in ALL_SIGS_D4:
        one = Multivector.unit(sig)
        assert extended_inner_product(one, one) == 1.0


def test_cl_embed():
    sig = Signature(2, 0)
    zero = cl_embed(0.0, np.zeros(2), sig)
    assert np.all(zero.coeffs == 0.0)

    x = cl_embed(1.0, [1.0, 0.0], sig)
    assert x.coeffs.tolist() == [1.0, 1.0, 0.0, 0.0]

    rng = np.random.default_rng(5)
    for sig in ALL_SIGS_D4:
        s = rng.standard_normal()
        v = rng.standard_normal(sig.d)
        m = cl_embed(s, v, sig)
        assert grade_projection(m, 0).coeffs[0] == s
        assert np.allclose(m.vector_part(), v)
        for k in range(2, sig.d + 1):
            assert np.all(grade_projection(m, k).coeffs == 0.0)


def test_multivector_json_roundtrip():
    sig = Signature(1, 2)
    rng = np.random.default_rng(17)
    x = random_mv(sig, rng)
    y = Multivector.from_json(x.to_json())
    assert y.sig == sig
    assert np.array_equal(y.coeffs, x.coeffs)
