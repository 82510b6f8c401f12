import json
import math

import mpmath
import numpy as np
import pytest

from fracspec import feq
from fracspec.basis import CoeffVec, JfpBasis, mapped_grid
from fracspec.errors import DomainError
from fracspec.opcore import build_fio


def abel_error(rep, lam=2.0, n=1001):
    xs = mapped_grid(JfpBasis(0, 0.5), n)
    return np.max(np.abs(rep(xs) - feq.abel_exact(xs, lam)))


def test_assemble_abel_is_identity_plus_scaled_operator():
    sys_ = feq.assemble(feq.abel_problem(2.0))
    n = 30
    s = build_fio(0.5, 0.0, 0.5, n).matrix(n, n)
    assert np.max(np.abs(sys_.dense(n, n) - (np.eye(n) + 4 * s))) <= 1e-15


def test_assemble_identity_only():
    basis = JfpBasis(0, 0.5)
    prob = feq.FieProblem(basis, (feq.FieTerm(0.0),), CoeffVec(basis, [1.0, 2.0]))
    sys_ = feq.assemble(prob)
    assert np.array_equal(sys_.dense(12, 12), np.eye(12))
    assert sys_.lower == 0


def test_assemble_var_structure():
    sys_ = feq.assemble(feq.var_problem())
    n = 40
    a = feq.power_coeffs([(1.0, 0.5)], JfpBasis(0, 1 / 6))
    b = feq.power_coeffs([(1.0, 1 / 3)], JfpBasis(0, 1 / 6))
    from fracspec.opcore import mul_matrix

    big = n + 20
    s3 = build_fio(1 / 3, 0, 1 / 6, big).matrix(big, big)
    s2 = build_fio(0.5, 0, 1 / 6, big).matrix(big, big)
    ref = np.eye(big) + mul_matrix(a).matrix(big, big) @ s3 + s2 @ mul_matrix(b).matrix(big, big)
    assert np.max(np.abs(sys_.dense(n, n) - ref[:n, :n])) <= 1e-14
    assert sys_.lower == a.size - 1 + 2


def test_problem_validation():
    basis = JfpBasis(0, 0.5)
    with pytest.raises(DomainError):
        feq.FieProblem(basis, (feq.FieTerm(0.3),), CoeffVec(basis, [1.0]))
    with pytest.raises(DomainError):
        feq.FieProblem(basis, (feq.FieTerm(0.0),), CoeffVec(JfpBasis(0, 1), [1.0]))


def test_constant_multipliers_bit_identical():
    basis = JfpBasis(0, 0.5)
    rhs = CoeffVec(basis, [1.0])
    p1 = feq.FieProblem(basis, (feq.FieTerm(0.0), feq.FieTerm(0.5, 4.0, 1.0)), rhs)
    p2 = feq.FieProblem(basis, (feq.FieTerm(0.0), feq.FieTerm(0.5, np.array([4.0]), np.array([1.0]))), rhs)
    assert np.array_equal(feq.assemble(p1).dense(70, 64), feq.assemble(p2).dense(70, 64))


def test_power_coeffs_exact():
    basis = JfpBasis(0, 0.5)
    c = feq.power_coeffs([(1.0, 1.5)], basis)
    assert c == pytest.approx([0.8838834764831844, 1.3258252147247767, 0.5303300858899107, 0.08838834764831845], rel=1e-15)
    w = feq.power_coeffs([(1.0, -0.5)], JfpBasis(-0.5, 0.5))
    assert w == pytest.approx([2**-0.5], rel=1e-15)
    with pytest.raises(DomainError):
        feq.power_coeffs([(1.0, 0.3)], basis)


def test_expand_function():
    c = feq.expand_function(lambda x: np.exp(x), 1.0)
    assert c.size < 30
    xs = np.linspace(-1, 1, 11)
    assert np.max(np.abs(CoeffVec(JfpBasis(0, 1), c)(xs) - np.exp(xs))) <= 1e-14


def test_abel_values():
    rep = feq.solve(feq.abel_problem(2.0))
    assert rep(np.array([-1.0]))[0] == pytest.approx(1.0, abs=1e-13)
    assert rep(np.array([1.0]))[0] == pytest.approx(0.098245, abs=5e-7)
    assert abel_error(rep) < 1e-12
    assert rep.n_used <= 64


@pytest.mark.parametrize("lam", [1.0, 2.0, 4.0])
def test_abel_coefficients_bounded(lam):
    rep = feq.solve(feq.abel_problem(lam))
    assert np.abs(rep.solution.coeffs).max() <= 1
    assert abel_error(rep, lam) < 1e-12


def test_abel_no_error_bounce():
    rep = feq.solve(feq.abel_problem(2.0), n_min=2000, n_max=2000)
    assert rep.extras["n_processed"] == 2000
    assert abel_error(rep) <= 1e-11


def test_residual_reproduced_independently():
    for prob in (feq.abel_problem(2.0), feq.var_problem()):
        rep = feq.solve(prob)
        asm = rep.extras["assembly"]
        applied = asm.apply_terms(rep.solution.coeffs)
        f = prob.rhs.padded(applied.size)
        r = np.linalg.norm(applied - f) / np.linalg.norm(prob.rhs.coeffs)
        assert r <= 10 * max(rep.residual, 1e-16)
        assert rep.residual <= 1e-12


def test_residual_history_shape():
    rep = feq.solve(feq.abel_problem(2.0))
    h = [r for _, r in rep.residual_history]
    peak = int(np.argmax(h))
    assert all(b <= a for a, b in zip(h[peak:], h[peak + 1 :]))


def test_var_solution():
    rep = feq.solve(feq.var_problem())
    assert rep.n_used <= 10
    xs = mapped_grid(JfpBasis(0, 1 / 6), 1001)
    assert np.max(np.abs(rep(xs) - (1 + xs) ** 1.5)) < 1e-13
    assert rep(np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-14)


def test_bbo():
    rep = feq.solve_bbo()
    assert rep(np.array([-1.0]))[0] == pytest.approx(1.0, abs=1e-14)
    ts = np.linspace(0.01, 2, 400)
    assert np.max(np.abs(rep(ts - 1) - feq.bbo_exact(ts))) <= 1e-10
    u = rep.extras["u"].coeffs
    assert abs(u[-1]) < 1e-12 and abs(u[-1]) < 1e-6 * abs(u[0])


def test_bbo_closed_form_series_is_trusted():
    from fracspec.special import mittag_leffler

    z = (-1 + 1j * math.sqrt(3)) / 2 * math.sqrt(2.0)
    assert mittag_leffler(0.5, 0.5, z).cancellation < 1e2


def airy_oracle(eps, xs, dps=40):
    """Power series in (1+x)**(1/2) for the Caputo problem, solved to u(1) = 1."""
    with mpmath.workdps(dps):
        kappa = mpmath.mpf(eps) * (-1 + 1j) / mpmath.sqrt(2)
        nterm = 400
        c = [mpmath.mpc(0)] * (nterm + 3)
        c[2] = mpmath.mpc(1)
        for p in range(0, nterm):
            prev = c[p - 2] if p >= 2 else 0
            c[p + 3] = (prev - c[p]) / kappa * mpmath.gamma(mpmath.mpf(p + 2) / 2) / mpmath.gamma(mpmath.mpf(p + 5) / 2)

        def u(t):
            s = mpmath.sqrt(t)
            return mpmath.fsum(ci * s**m for m, ci in enumerate(c))

        scale = 1 / u(mpmath.mpf(2))
        return np.array([complex(scale * u(mpmath.mpf(1 + x))) for x in xs])


@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_airy_against_series(eps):
    rep = feq.solve_airy(eps)
    xs = np.linspace(-1, 1, 21)
    assert np.max(np.abs(rep(xs) - airy_oracle(eps, xs))) <= 1e-13


def test_airy_desk_scale():
    rep = feq.solve_airy(1e-3)
    ends = rep(np.array([-1.0, 1.0]))
    assert abs(ends[0]) <= 1e-10 and abs(ends[1] - 1) <= 1e-10
    assert rep.cauchy_errors[-1][1] <= 1e-12
    assert rep.solution.is_complex


def test_airy_literal_border_has_null_vector():
    """Adding the Riemann-Liouville image of a(1+x) makes the system singular."""
    eps = 1e-3
    kappa = eps * feq.I32
    prob = feq.airy_problem(eps)
    g_lit = prob.aux_columns[0].copy()
    lead = kappa * 2**-0.5 / math.gamma(0.5)
    g_lit[0] += lead
    lit = feq.FieProblem(prob.basis, prob.terms, prob.rhs, prob.extra_rows, (g_lit,))
    sys_ = feq.assemble(lit)
    n = 40
    x0 = np.zeros(n, dtype=complex)
    x0[0] = 1.0
    x0[1] = -(2**-0.5) / math.gamma(0.5)
    r = sys_.dense(n + sys_.lower, n) @ x0
    assert np.abs(r).max() <= 1e-15
    # the Caputo border used by the solver does not annihilate it
    r2 = feq.assemble(prob).dense(n + sys_.lower, n) @ x0
    assert np.abs(r2).max() > 1e-4


def test_airy_multiplier_degree_two():
    terms = feq.airy_problem(1.0).terms
    assert np.asarray(terms[1].a).size == 3


def test_airy_rejects_bad_epsilon():
    with pytest.raises(DomainError):
        feq.airy_problem(0.0)


def test_bundled_problems_round_trip():
    for name, bound in (("abel_lambda2.json", 1e-12), ("var_coeff.json", 1e-13)):
        prob, settings = feq.load_problem(feq.bundled_problem_path(name))
        rep = feq.solve(prob, settings["tol"], settings["n_max"])
        xs = mapped_grid(prob.basis, 1001)
        doc = json.loads(json.dumps(feq.report_to_json(rep, xs, feq.exact_from_spec(settings["exact"]))))
        assert doc["schema_version"] == 1
        assert doc["max_error"] < bound
        assert len(doc["values"]["x"]) == 1001
    _, settings = feq.load_problem(feq.bundled_problem_path("var_coeff.json"))
    assert feq.load_problem(feq.bundled_problem_path("var_coeff.json"))[0].basis.beta == pytest.approx(1 / 6)


def test_problem_json_errors():
    with pytest.raises(DomainError):
        feq.problem_from_json({"beta": 0.5, "terms": [], "rhs": 1.0, "bogus": 1})
    with pytest.raises(DomainError):
        feq.problem_from_json({"beta": 0.5, "terms": [{"mu": 0.5, "c": 1}], "rhs": 1.0})
    with pytest.raises(DomainError):
        feq.problem_from_json({"terms": [], "rhs": 1.0})


def test_problem_json_grid_values_and_complex():
    basis = JfpBasis(0, 0.5)
    xs = mapped_grid(basis, 9)
    prob, _ = feq.problem_from_json(
        {
            "beta": 0.5,
            "terms": [{"mu": 0.0}, {"mu": 0.5, "a": {"grid_values": list(1 + xs)}}],
            "rhs": [[1.0, 0.5]],
        }
    )
    assert prob.rhs.coeffs[0] == 1 + 0.5j
    rep = feq.solve(prob)
    assert rep.residual < 1e-12
