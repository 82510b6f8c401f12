import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from fracspec import quad
from fracspec.basis import CoeffVec, JfpBasis, eval_series
from fracspec.errors import DomainError
from fracspec.opcore import (
    apply_fio_exact_oracle,
    build_fio,
    conv_matrix,
    diff_matrix,
    fio_columns,
    initial_columns,
    integer_ratio,
    mul_matrix,
    power_multiplier_coeffs,
    recurse_column,
)

ORACLE_PARAMS = [(0.5, 0.0, 0.5), (1 / 3, 0.0, 1 / 6), (1.5, 0.5, 1.5), (1.5, -0.5, 0.5)]


def test_diff_and_conv_structure():
    d = diff_matrix(6)
    c = conv_matrix(6)
    assert d.shape == (7, 8) and d.bandwidths == (0, 2)
    assert c.shape == (7, 8) and c.bandwidths == (0, 2)
    dd = d.to_dense()
    n = 5
    assert list(dd[n - 2 : n + 1, n]) == [n / 2, n, n / 2]
    cc = c.to_dense()
    assert np.array_equal(cc[:, 0], np.eye(7)[0])
    for n in range(2, 7):
        assert np.array_equal(cc[:, n], (np.eye(7)[n] - np.eye(7)[n - 2]) / 2)


def test_initial_columns_example():
    r0, r1, r2 = initial_columns(0.5, 0.0, 0.5)
    assert r0[0] == quad.moment_h(0, 0.5, 0.0, 0.5)
    assert r1 == pytest.approx([math.pi / math.sqrt(2) - 2 * math.sqrt(2), math.pi / math.sqrt(2)], rel=1e-15)
    assert r1 == pytest.approx([-0.6069857, 2.2214415], abs=5e-8)
    assert math.fsum(r1) == pytest.approx(1.6144558, abs=5e-8)
    assert r2.size == 3


def test_recurrence_needs_n_at_least_two():
    # R_2 cannot come from the recurrence; it is a closed form
    r0, r1, _ = initial_columns(0.5, 0.0, 0.5)
    with pytest.raises(DomainError):
        recurse_column(1, r0, r1, 1.0)


@pytest.mark.parametrize("params", ORACLE_PARAMS)
def test_recurrence_equations(params):
    op = build_fio(*params, 200, keep_r=True)
    rs = op.r_columns
    for n in (2, 3, 17, 120, 198):
        phi = quad.boundary_phi_block(n + 1, 1, *params)[0] if n + 1 >= 3 else None
        col = recurse_column(n, rs[n - 1], rs[n], phi)
        assert np.array_equal(col, rs[n + 1])
        assert abs(math.fsum(col) - phi) <= 1e-12 * max(1.0, abs(phi))
        d, c = diff_matrix(n).to_dense(), conv_matrix(n).to_dense()
        pad = lambda v: np.pad(v, (0, n + 2 - v.size))
        g = 2 * c @ pad(rs[n]) + (c + d / (n - 1)) @ pad(rs[n - 1])
        assert np.abs((d / (n + 1) - c) @ col - g).max() <= 1e-12 * np.abs(g).max()


def test_recurrence_checks_lengths():
    with pytest.raises(DomainError):
        recurse_column(3, np.ones(2), np.ones(4), 0.0)


def test_power_multiplier_examples():
    assert power_multiplier_coeffs(0).tolist() == [1.0]
    assert power_multiplier_coeffs(1).tolist() == [0.5, 0.5]
    assert power_multiplier_coeffs(2).tolist() == [0.375, 0.5, 0.125]


@given(st.integers(0, 40))
def test_power_multiplier_matches_numpy(k):
    ref = C.chebpow([0.5, 0.5], k, maxpower=64)
    assert np.max(np.abs(power_multiplier_coeffs(k) - ref)) <= 1e-15


def test_mul_matrix_examples():
    m = mul_matrix([0.5, 0.5])
    assert np.array_equal(m.matrix(4, 1)[:, 0], [0.5, 0.5, 0, 0])
    assert np.array_equal(mul_matrix([3.0]).matrix(5, 5), 3 * np.eye(5))
    x = mul_matrix([-0.25, 1.0, 0.25])
    assert np.array_equal(x.matrix(5, 1)[:, 0], [-0.25, 1, 0.25, 0, 0])
    assert x.bandwidths == (2, 2)


@given(
    st.lists(st.floats(-1, 1), min_size=1, max_size=9),
    st.lists(st.floats(-1, 1), min_size=1, max_size=30),
)
def test_mul_matches_chebyshev_product(c, v):
    m = mul_matrix(c)
    got = m.matvec(np.array(v))
    ref = C.chebmul(c, v)
    n = max(got.size, ref.size)
    assert np.max(np.abs(np.pad(got, (0, n - got.size)) - np.pad(ref, (0, n - ref.size)))) <= 1e-14
    i, j = 3, 1
    assert m.entry(i, j) == pytest.approx(m.matrix(8, 4)[i, j], abs=1e-16)


def test_mul_bandwidths_exact():
    c = np.arange(1.0, 5.0)
    a = mul_matrix(c).matrix(20, 20)
    rows, cols = np.nonzero(a)
    assert np.max(rows - cols) == 3 and np.max(cols - rows) == 3


def test_build_column_zero():
    op = build_fio(0.5, 0.0, 0.5, 4)
    col = op.column(0)
    assert col == pytest.approx([math.sqrt(2 / math.pi)] * 2, rel=1e-15)
    assert np.array_equal(op.matrix(4, 4)[2:, 0], [0, 0])


def test_build_integer_order():
    op = build_fio(1.0, 0.0, 1.0, 3)
    assert op.apply([1.0])[:2] == pytest.approx([1.0, 1.0], rel=1e-15)


@pytest.mark.parametrize("params", ORACLE_PARAMS)
def test_structure(params):
    op = build_fio(*params, 80)
    for j in range(80):
        assert op.column(j).size == j + op.k + 1


def test_ratio_validation():
    with pytest.raises(DomainError, match="mu must be an integer multiple of beta"):
        build_fio(0.5, 0.0, 0.3, 4)
    assert integer_ratio(0.5, 1 / 6) == 3
    assert integer_ratio(1 / 3 + 1e-14, 1 / 6) == 2
    with pytest.raises(DomainError):
        build_fio(0.5, -1.0, 0.5, 4)
    with pytest.raises(DomainError):
        build_fio(0.5, 0.0, 0.5, 0)


def test_large_k_warns():
    with pytest.warns(UserWarning, match="large"):
        build_fio(65 * 0.01, 0.0, 0.01, 2)


@pytest.mark.parametrize("params", ORACLE_PARAMS)
def test_oracle_equivalence(params, backend):
    op = build_fio(*params, 11)
    for n in range(11):
        ref = apply_fio_exact_oracle(*params, n).coeffs
        col = op.column(n)
        assert ref.size == n + op.k + 1
        assert np.max(np.abs(col - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_oracle_limits():
    with pytest.raises(DomainError):
        apply_fio_exact_oracle(0.5, 0.0, 0.5, 13)


def test_semigroup():
    n = 40
    quarter = build_fio(0.25, 0.0, 0.25, n + 2)
    half = build_fio(0.5, 0.0, 0.25, n)
    a = quarter.matrix(n + 2, n)
    prod = quarter.matrix(n, n + 2) @ a
    m = n - 2
    assert np.max(np.abs(prod[:m, :m] - half.matrix(m, m))) <= 1e-10


def test_grow_bit_identical(backend):
    params = (1 / 3, 0.0, 1 / 6)
    fresh = build_fio(*params, 300)
    grown = build_fio(*params, 50).grow(100).grow(300)
    assert all(np.array_equal(a, b) for a, b in zip(fresh.columns, grown.columns))
    op = build_fio(*params, 10)
    assert op.grow(10) is op
    with pytest.raises(DomainError):
        op.grow(5)


def test_grow_keeps_original():
    op = build_fio(0.5, 0.0, 0.5, 20)
    big = op.grow(40)
    assert op.n_cols == 20 and big.n_cols == 40
    assert big.columns[:20] == op.columns


def test_deterministic_rebuild():
    a = build_fio(1.5, -0.5, 0.5, 500)
    b = build_fio(1.5, -0.5, 0.5, 500)
    assert np.array_equal(a.matrix(), b.matrix())


def test_threaded_phi_is_bit_identical(monkeypatch):
    ref = build_fio(0.5, 0.0, 0.5, 700)
    monkeypatch.setenv("FRACSPEC_THREADS", "3")
    par = build_fio(0.5, 0.0, 0.5, 700)
    assert np.array_equal(ref.matrix(), par.matrix())


def test_backends_agree():
    from fracspec import kernels

    if len(kernels.available_backends()) < 2:
        pytest.skip("compiled backend not built")
    with kernels.use_backend("python"):
        py = build_fio(1.5, 0.5, 1.5, 600)
    with kernels.use_backend("compiled"):
        cy = build_fio(1.5, 0.5, 1.5, 600)
    scale = max(np.abs(c).max() for c in py.columns)
    assert max(np.abs(a - b).max() for a, b in zip(py.columns, cy.columns)) <= 1e-13 * scale


@pytest.mark.parametrize("params", ORACLE_PARAMS)
def test_boundary_consistency(params):
    op = build_fio(*params, 400)
    assert max(op.diagnostics["boundary_residual"]) <= 1e-12
    assert min(op.diagnostics["min_pivot"]) > 0.1


def test_streaming_matches_cached():
    op = build_fio(0.5, 0.0, 0.5, 150)
    for n, col in fio_columns(0.5, 0.0, 0.5, 150, n_start=100):
        assert np.array_equal(col, op.column(n))


def test_boundary_row_is_column_sums():
    op = build_fio(0.5, 0.0, 0.5, 30)
    v = np.random.default_rng(3).standard_normal(30)
    assert np.dot(op.boundary_row(), v) == pytest.approx(math.fsum(op.apply(v)), rel=1e-13)


def test_apply_unweighted_matches_apply():
    op = build_fio(1.5, -0.5, 0.5, 20, keep_r=True)
    v = np.random.default_rng(4).standard_normal(20) / np.arange(1, 21) ** 2
    xs = np.linspace(-0.9, 1, 15)
    a = eval_series(CoeffVec(JfpBasis(-0.5, 0.5), op.apply(v)), xs)
    b = eval_series(op.apply_unweighted(v), xs)
    assert np.max(np.abs(a - b)) <= 1e-13
    with pytest.raises(DomainError):
        build_fio(0.5, 0.0, 0.5, 4).apply_unweighted([1.0])


def test_integral_of_power_against_closed_form():
    # I^{1/2} (1+x)^{3/2} = Gamma(5/2)/Gamma(3) (1+x)^2
    from fracspec.feq import power_coeffs

    basis = JfpBasis(0.0, 0.5)
    u = power_coeffs([(1.0, 1.5)], basis)
    op = build_fio(0.5, 0.0, 0.5, u.size)
    xs = np.linspace(-1, 1, 9)
    got = eval_series(CoeffVec(basis, op.apply(u)), xs)
    assert np.max(np.abs(got - math.gamma(2.5) / 2 * (1 + xs) ** 2)) <= 1e-14


def test_exports():
    op = build_fio(0.5, 0.0, 0.5, 5)
    doc = json.loads(json.dumps(op.to_json()))
    assert doc["schema_version"] == 1 and doc["N"] == 5
    assert np.array_equal(np.array(doc["columns"][3]), op.column(3))
    rows = [list(map(float, r.split(","))) for r in op.to_csv(5).strip().split("\n")]
    assert np.array_equal(np.array(rows), op.matrix(5, 5))
