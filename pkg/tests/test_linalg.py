import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracspec import opcore, quad
from fracspec.errors import DomainError, NonConvergenceError, SingularityError
from fracspec.linalg import (
    BandedMatrix,
    LowerBandedSystem,
    adaptive_qr_solve,
    largest_eigenpairs,
    solve_almost_banded,
)


def random_banded(rng, n, lower, upper, complex_=False):
    a = rng.standard_normal((n, n))
    if complex_:
        a = a + 1j * rng.standard_normal((n, n))
    i, j = np.indices(a.shape)
    a[(i - j > lower) | (j - i > upper)] = 0
    return a


@given(st.integers(0, 6), st.integers(0, 6), st.booleans(), st.integers(0, 2**31))
def test_banded_matvec_matches_dense(lower, upper, complex_, seed):
    rng = np.random.default_rng(seed)
    a = random_banded(rng, 50, lower, upper, complex_)
    b = BandedMatrix.from_dense(a, lower, upper)
    x = rng.standard_normal(50)
    assert np.array_equal(b.to_dense(), a)
    assert np.max(np.abs(b @ x - a @ x)) <= 1e-14 * max(1, np.abs(a @ x).max())
    assert b.bandwidths == (lower, upper)


def test_banded_rectangular_and_indexing():
    b = BandedMatrix.from_diagonals({0: np.ones(3), 2: np.arange(1.0, 4.0)}, (3, 5))
    assert b.shape == (3, 5)
    assert b[1, 3] == 2.0 and b[2, 0] == 0.0
    assert np.array_equal(b.matvec(np.ones(5)), [2, 3, 4])


def test_almost_banded_identity():
    band = BandedMatrix.from_dense(np.eye(5), 0, 0)
    x = solve_almost_banded([], band, np.eye(5)[2])
    assert np.array_equal(x, np.eye(5)[2])


def test_almost_banded_reproduces_recurrence_column():
    """The n = 2 boundary-anchored system, against a dense LU oracle."""
    mu, alpha, beta = 0.5, 0.0, 0.5
    r0, r1, r2 = opcore.initial_columns(mu, alpha, beta)
    n = 2
    d = opcore.diff_matrix(n).to_dense()
    c = opcore.conv_matrix(n).to_dense()
    pad = lambda v: np.pad(v, (0, n + 2 - v.size))
    g = 2 * c @ pad(r2) + (c + d / (n - 1)) @ pad(r1)
    phi = quad.boundary_phi(3, mu, alpha, beta)
    band = d / (n + 1) - c
    top = np.ones((1, n + 2))
    x = solve_almost_banded(top, BandedMatrix.from_dense(band, 0, 2), np.concatenate([[phi], g]))
    dense = np.linalg.solve(np.vstack([top, band]), np.concatenate([[phi], g]))
    assert np.max(np.abs(x - dense)) <= 1e-13 * np.abs(dense).max()
    col = opcore.recurse_column(2, r1, r2, phi)
    assert np.max(np.abs(x - col)) <= 1e-13 * np.abs(col).max()


def test_almost_banded_random_residual():
    rng = np.random.default_rng(7)
    n = 40
    band = random_banded(rng, n, 1, 1)[: n - 2]
    band += 4 * np.eye(n)[: n - 2]
    top = rng.standard_normal((2, n))
    b = rng.standard_normal(n)
    bm = BandedMatrix.from_dense(band, 1, 1)
    x = solve_almost_banded(top, bm, b)
    a = np.vstack([top, band])
    assert np.abs(a @ x - b).max() <= 1e-12 * (np.abs(a).sum(1).max() * np.abs(x).max() + np.abs(b).max())


def test_almost_banded_singular():
    band = BandedMatrix.from_dense(np.zeros((2, 3)), 0, 0)
    with pytest.raises(SingularityError):
        solve_almost_banded(np.ones((1, 3)), band, np.ones(3))


def test_adaptive_identity():
    rhs = np.array([1.0, -2.0, 3.0, 0.5, 4.0])
    sol = adaptive_qr_solve(LowerBandedSystem.from_dense(np.eye(1), rhs), tol=1e-13)
    assert sol.n_used <= 5
    assert np.array_equal(sol.coeffs, rhs)


def _abel_system(lam=2.0):
    from fracspec.feq import abel_problem, assemble

    return assemble(abel_problem(lam))


def test_adaptive_tolerance_monotone():
    loose = adaptive_qr_solve(_abel_system(), tol=1e-8)
    tight = adaptive_qr_solve(_abel_system(), tol=1e-13)
    assert tight.n_used >= loose.n_used
    assert tight.residual_history[-1][1] < 1e-13


def test_adaptive_growth_consistency():
    a = adaptive_qr_solve(_abel_system(), tol=1e-13, n_max=128, n_min=128, chop=False)
    b = adaptive_qr_solve(_abel_system(), tol=1e-13, n_max=256, n_min=256, chop=False)
    # the first 64 columns see the same reflectors either way
    assert np.max(np.abs(a.coeffs[:64] - b.coeffs[:64])) <= 1e-15


def test_adaptive_residual_independent():
    sys_ = _abel_system()
    sol = adaptive_qr_solve(sys_, tol=1e-13)
    n = sol.n_used
    a = sys_.dense(n + sys_.lower, n)
    b = np.zeros(n + sys_.lower)
    b[: min(b.size, sys_.rhs.size)] = sys_.rhs[: b.size]
    assert np.linalg.norm(a @ sol.coeffs - b) / np.linalg.norm(b) <= 1e-12


def test_adaptive_nonconvergence():
    # I + lam^2 S with a huge lam needs far more than 64 columns
    with pytest.raises(NonConvergenceError) as err:
        adaptive_qr_solve(_abel_system(60.0), tol=1e-13, n_max=64)
    assert err.value.history and err.value.partial is not None


def test_adaptive_validation():
    sys_ = LowerBandedSystem.from_dense(np.eye(2), np.ones(2))
    with pytest.raises(DomainError):
        adaptive_qr_solve(sys_, tol=0)
    with pytest.raises(DomainError):
        adaptive_qr_solve(sys_, n_max=0)


def test_adaptive_complex_lower_hessenberg():
    rng = np.random.default_rng(11)
    n = 150
    a = random_banded(rng, n, 3, n, complex_=True) * 0.05 / np.sqrt(n) + np.eye(n)
    rhs = np.zeros(n, dtype=complex)
    rhs[:4] = [1, 1j, -0.5, 0.25]
    sol = adaptive_qr_solve(LowerBandedSystem.from_dense(a, rhs), tol=1e-13, n_max=n, n_min=n, chop=False)
    ref = np.linalg.solve(a, rhs)
    assert np.max(np.abs(sol.coeffs - ref)) <= 1e-13


def test_eigs_diagonal():
    a = np.diag(np.arange(30, 0, -1.0))
    (theta, v), *_ = largest_eigenpairs(a, 1)
    assert theta == pytest.approx(30)
    assert abs(abs(v[0]) - 1) < 1e-12 and np.abs(v[1:]).max() < 1e-10


def test_eigs_rotation():
    pairs = largest_eigenpairs(np.array([[0.0, -1.0], [1.0, 0.0]]), 2)
    assert sorted(p[0].imag for p in pairs) == pytest.approx([-1, 1])


def test_eigs_residuals_and_pairs():
    rng = np.random.default_rng(5)
    n = 200
    a = rng.standard_normal((n, n)) / np.sqrt(n)
    pairs = largest_eigenpairs(a, 6, tol=1e-12)
    ref = np.linalg.eigvals(a)
    ref = ref[np.argsort(-np.abs(ref))]
    got = np.array([p[0] for p in pairs])
    for th in got[:6]:
        assert np.min(np.abs(ref - th)) <= 1e-10
    for th, v in pairs:
        assert np.linalg.norm(a @ v - th * v) / np.linalg.norm(v) <= 1e-12 * np.abs(got).max() * 10
    for th in got:
        if abs(th.imag) > 1e-8:
            assert np.min(np.abs(got - th.conjugate())) <= 1e-12


def test_eigs_callable_and_deterministic():
    a = np.diag(np.linspace(1, 2, 60)) + np.diag(np.full(59, 0.1), -1)
    p1 = largest_eigenpairs(lambda v: a @ v, 3, v0=np.ones(60))
    p2 = largest_eigenpairs(lambda v: a @ v, 3, v0=np.ones(60))
    assert [x[0] for x in p1] == [x[0] for x in p2]
    with pytest.raises(DomainError):
        largest_eigenpairs(lambda v: v, 2)
    with pytest.raises(DomainError):
        largest_eigenpairs(np.ones((2, 3)), 1)
