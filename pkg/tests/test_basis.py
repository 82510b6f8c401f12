import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from fracspec.basis import (
    CoeffVec,
    JfpBasis,
    chebyshev_points,
    coeffs_to_values,
    eval_jfp,
    eval_series,
    mapped_grid,
    values_to_coeffs,
)
from fracspec.errors import DomainError, SingularityError

bases = st.builds(JfpBasis, st.floats(-0.9, 2.0), st.floats(0.1, 2.0))


def test_basis_validation():
    with pytest.raises(DomainError):
        JfpBasis(-1.0, 0.5)
    with pytest.raises(DomainError):
        JfpBasis(0.0, 0.0)


def test_eval_jfp_examples():
    assert eval_jfp(JfpBasis(0, 0.5), 0, 0.3) == 1.0
    assert eval_jfp(JfpBasis(0.5, 1.5), 0, 0.0) == pytest.approx(0.7071067811865476, rel=1e-15)


@given(bases, st.integers(0, 10_000))
def test_eval_jfp_at_one(basis, n):
    assert eval_jfp(basis, n, 1.0) == pytest.approx(1.0, abs=1e-13)


@given(bases, st.integers(0, 200), st.floats(-0.999, 1.0))
def test_weight_split(basis, n, x):
    plain = eval_jfp(JfpBasis(0.0, basis.beta), n, x)
    assert eval_jfp(basis, n, x) == pytest.approx(((1 + x) / 2) ** basis.alpha * plain, rel=1e-14, abs=1e-300)


def test_eval_jfp_singular_endpoint():
    with pytest.raises(SingularityError):
        eval_jfp(JfpBasis(-0.5, 0.5), 2, -1.0)
    assert eval_jfp(JfpBasis(0.5, 0.5), 2, -1.0) == 0.0


def test_eval_jfp_rejects_outside():
    with pytest.raises(DomainError):
        eval_jfp(JfpBasis(), 1, 1.5)


def test_eval_jfp_high_degree_against_numpy():
    basis = JfpBasis(0.0, 1.0)
    xs = np.linspace(-1, 1, 37)
    for n in (10, 1000, 10_000):
        ref = C.chebval(xs, np.eye(n + 1)[n])
        assert np.max(np.abs(eval_jfp(basis, n, xs) - ref)) <= 1e-13 * max(1, n / 100)


def test_eval_series_examples():
    for basis in (JfpBasis(0.3, 0.5), JfpBasis(1.5, 2)):
        assert eval_series(CoeffVec(basis, [1.0]), 0.5) == pytest.approx(0.75**basis.alpha)
    u = CoeffVec(JfpBasis(0, 0.5), [0.8838834764831844, 1.3258252147247767, 0.5303300858899107, 0.08838834764831845])
    assert eval_series(u, 1.0) == pytest.approx(2**1.5, rel=1e-15)
    assert np.all(eval_series(CoeffVec(JfpBasis(), []), np.linspace(-1, 1, 5)) == 0)


@given(bases, st.lists(st.floats(-1, 1), min_size=100, max_size=100))
def test_clenshaw_matches_direct(basis, cs):
    u = CoeffVec(basis, cs)
    xs = np.linspace(-0.99, 1, 23)
    direct = sum(c * eval_jfp(basis, n, xs) for n, c in enumerate(cs))
    assert np.max(np.abs(eval_series(u, xs) - direct)) <= 1e-12 * max(1, np.abs(direct).max())


def test_mapped_grid_examples():
    assert np.allclose(mapped_grid(JfpBasis(0, 1), 3), [1, 0, -1], atol=0)
    assert np.allclose(mapped_grid(JfpBasis(0, 0.5), 3), [1, -0.5, -1], rtol=0, atol=1e-16)


@given(st.floats(0.05, 3), st.integers(2, 300))
def test_mapped_grid_endpoints_exact(beta, n):
    g = mapped_grid(JfpBasis(0, beta), n)
    assert g[0] == 1.0 and g[-1] == -1.0
    # small beta squeezes points onto -1 in double precision
    assert np.all(np.diff(g) <= 0)


def test_chebyshev_points_symmetric():
    x = chebyshev_points(9)
    assert np.array_equal(x, -x[::-1])


def test_values_to_coeffs_examples():
    basis = JfpBasis(0, 0.5)
    c = values_to_coeffs(basis, np.full(6, 2.5)).coeffs
    assert np.allclose(c, [2.5, 0, 0, 0, 0, 0], atol=1e-15)
    x = mapped_grid(basis, 8)
    c = values_to_coeffs(basis, (1 + x) ** 1.5).coeffs
    assert np.allclose(c, [0.8838835, 1.3258252, 0.5303301, 0.0883883, 0, 0, 0, 0], atol=5e-8)
    assert np.max(np.abs(c[4:])) < 1e-15


def test_values_to_coeffs_unit_vector():
    # weight-free samples of Q_5 are T_5 at the Chebyshev points
    y = chebyshev_points(16)
    c = values_to_coeffs(JfpBasis(0, 0.25), np.cos(5 * np.arccos(y))).coeffs
    assert np.max(np.abs(c - np.eye(16)[5])) <= 1e-13


def test_values_to_coeffs_sampled_jfp():
    basis = JfpBasis(0, 0.5)
    x = mapped_grid(basis, 16)
    c = values_to_coeffs(basis, eval_jfp(basis, 5, x)).coeffs
    assert np.max(np.abs(c - np.eye(16)[5])) <= 1e-13


@pytest.mark.parametrize("fast", [True, False])
@pytest.mark.parametrize("n", [8, 64, 512])
def test_round_trip(n, fast):
    rng = np.random.default_rng(n)
    v = rng.standard_normal(n)
    basis = JfpBasis(0, 0.5)
    back = coeffs_to_values(values_to_coeffs(basis, v, fast=fast), n, fast=fast)
    assert np.max(np.abs(back - v)) <= 1e-13 * np.abs(v).max()


def test_fast_and_direct_transforms_agree():
    v = np.random.default_rng(1).standard_normal(40) + 1j * np.random.default_rng(2).standard_normal(40)
    a = values_to_coeffs(JfpBasis(), v, fast=True).coeffs
    b = values_to_coeffs(JfpBasis(), v, fast=False).coeffs
    assert np.max(np.abs(a - b)) <= 1e-14


def test_coeffs_to_values_examples():
    assert np.allclose(coeffs_to_values(CoeffVec(JfpBasis(), [1.0, 0, 0]), 4), 1.0)
    assert np.allclose(coeffs_to_values(CoeffVec(JfpBasis(), [0, 1.0, 0]), 3), [1, 0, -1], atol=1e-16)
    with pytest.raises(DomainError):
        coeffs_to_values(CoeffVec(JfpBasis(), np.ones(5)), 4)
    with pytest.raises(DomainError):
        values_to_coeffs(JfpBasis(), [1.0])


def test_coeffvec_json_round_trip():
    u = CoeffVec(JfpBasis(-0.5, 0.5), [1 + 2j, 3.0, -0.5j])
    obj = json.loads(json.dumps(u.to_json()))
    assert obj["coeffs"][0] == [1.0, 2.0]
    v = CoeffVec.from_json(obj)
    assert v.basis == u.basis and np.array_equal(v.coeffs, u.coeffs)


def test_coeffvec_immutable_and_finite():
    u = CoeffVec(JfpBasis(), [1.0, 2.0])
    with pytest.raises(ValueError):
        u.coeffs[0] = 3.0
    with pytest.raises(DomainError):
        CoeffVec(JfpBasis(), [np.nan])
