"""Fractional integral equations and the boundary value showcases.

A problem

.. math::

    a_0(x) u(x) + \\sum_j a_j(x)\\, \\mathcal{I}^{\\mu_j}[b_j u](x) = f(x)

is assembled term by term as ``M[a_j] S^{(mu_j)} M[b_j]`` on a common
``(alpha, beta)`` basis, optionally bordered by functional rows (boundary
conditions) and auxiliary unknowns, and solved by the adaptive QR solver.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from fracspec.basis import CoeffVec, JfpBasis, eval_series, mapped_grid, values_to_coeffs
from fracspec.errors import DomainError, NonConvergenceError
from fracspec.linalg import LowerBandedSystem, adaptive_qr_solve
from fracspec.opcore import FioOperator, build_fio, integer_ratio, power_multiplier_coeffs
from fracspec.special import erfcx, gamma, mittag_leffler

logger = logging.getLogger(__name__)

__all__ = [
    "ExtraRow",
    "FieProblem",
    "FieTerm",
    "SolveReport",
    "abel_exact",
    "abel_problem",
    "assemble",
    "bbo_exact",
    "expand_function",
    "load_problem",
    "power_coeffs",
    "problem_from_json",
    "report_to_json",
    "sample_solution",
    "solve",
    "solve_airy",
    "solve_bbo",
    "var_problem",
]

SCHEMA_VERSION = 1
#: i**(3/2) on the principal branch
I32 = complex(-1.0, 1.0) / math.sqrt(2.0)
_GROW_STEP = 64


def expand_function(f: Callable, beta: float, tol: float = 1e-14, max_points: int = 4097) -> np.ndarray:
    """Chebyshev-in-``y`` coefficients of ``f(x)`` on the ``(0, beta)`` basis.

    The grid is doubled until the last three coefficients fall below ``tol``
    times the largest one; trailing negligible coefficients are dropped.
    """
    basis = JfpBasis(0.0, beta)
    n = 9
    while True:
        xs = mapped_grid(basis, n)
        c = values_to_coeffs(basis, np.asarray(f(xs))).coeffs
        scale = np.abs(c).max(initial=0.0)
        if scale == 0.0:
            return np.zeros(1)
        if np.abs(c[-3:]).max() <= tol * scale:
            keep = np.nonzero(np.abs(c) > tol * scale)[0]
            return c[: keep[-1] + 1].copy()
        if n >= max_points:
            raise NonConvergenceError(f"function expansion did not resolve with {n} points", partial=c)
        n = 2 * n - 1


def power_coeffs(terms: Sequence[tuple[complex, float]], basis: JfpBasis) -> np.ndarray:
    """Exact coefficients of ``sum c * (1+x)**gamma`` in ``basis``.

    Each ``(gamma - alpha) / beta`` must be a nonnegative integer.
    """
    out = np.zeros(1, dtype=np.result_type(*[np.asarray(c) for c, _ in terms], float))
    for c, g in terms:
        m = (g - basis.alpha) / basis.beta
        mi = round(m)
        if mi < 0 or abs(m - mi) > 1e-12 * max(1, mi):
            raise DomainError(f"(1+x)**{g} is not a power of ((1+x)/2)**beta times the weight")
        pc = c * 2.0**g * power_multiplier_coeffs(mi)
        if pc.size > out.size:
            out = np.concatenate([out, np.zeros(pc.size - out.size, dtype=out.dtype)])
        out[: pc.size] = out[: pc.size] + pc
    return out


def _as_multiplier(value, beta: float) -> np.ndarray:
    """Normalise a multiplier to a 1-D coefficient array on ``(0, beta)``."""
    if isinstance(value, CoeffVec):
        if value.basis.alpha != 0 or value.basis.beta != beta:
            raise DomainError("multiplier expansions must be on the (0, beta) basis of the problem")
        return np.array(value.coeffs)
    if callable(value):
        return expand_function(value, beta)
    arr = np.atleast_1d(np.asarray(value))
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("multiplier must be a scalar or a coefficient list")
    if arr.dtype.kind not in "fc":
        arr = arr.astype(float)
    return arr


@dataclass(frozen=True)
class FieTerm:
    """One term ``a(x) I^mu [b u](x)``; ``mu = 0`` means ``a(x) b(x) u(x)``.

    ``a`` and ``b`` are scalars, coefficient lists on the ``(0, beta)``
    basis, :class:`CoeffVec` objects, or callables sampled on demand.
    """

    mu: float = 0.0
    a: object = 1.0
    b: object = 1.0


@dataclass(frozen=True)
class ExtraRow:
    """Functional row ``(I^mu u)(x) + aux . extra = value`` placed on top."""

    x: float = 1.0
    mu: float = 0.0
    value: complex = 0.0
    aux: tuple = ()


@dataclass(frozen=True)
class FieProblem:
    basis: JfpBasis
    terms: tuple
    rhs: CoeffVec
    extra_rows: tuple = ()
    aux_columns: tuple = ()

    def __post_init__(self):
        if self.rhs.basis != self.basis:
            raise DomainError("right-hand side must use the solution basis")
        if len(self.extra_rows) != len(self.aux_columns):
            raise DomainError("need as many functional rows as auxiliary unknowns")
        for row in self.extra_rows:
            if len(row.aux) != len(self.aux_columns):
                raise DomainError("each functional row needs one entry per auxiliary unknown")
        for t in self.terms:
            if t.mu < 0:
                raise DomainError("orders must be nonnegative")
            if t.mu > 0:
                integer_ratio(t.mu, self.basis.beta)


@dataclass
class SolveReport:
    """Outcome of a solve.

    ``residual`` is the relative residual of the returned (chopped) solution,
    recomputed by applying the operators directly; ``residual_history`` is
    the least squares residual after each block of the QR factorisation.
    """

    solution: CoeffVec
    aux_values: list
    n_used: int
    residual: float
    residual_history: list
    wall_time: float
    cauchy_errors: list = field(default_factory=list)
    evaluator: Callable | None = field(default=None, repr=False)
    extras: dict = field(default_factory=dict, repr=False)

    def __call__(self, xs):
        return sample_solution(self, xs)


class _Assembly:
    """Column source for an :class:`FieProblem`, growing operators on demand."""

    def __init__(self, problem: FieProblem, keep_r: bool = False):
        self.problem = problem
        b = problem.basis
        self.basis = b
        self.keep_r = keep_r
        self.terms = []
        dtypes = [problem.rhs.coeffs.dtype]
        lower = 0
        for t in problem.terms:
            a = _as_multiplier(t.a, b.beta)
            bb = _as_multiplier(t.b, b.beta)
            k = integer_ratio(t.mu, b.beta) if t.mu > 0 else 0
            self.terms.append((float(t.mu), k, a, bb))
            dtypes += [a.dtype, bb.dtype]
            lower = max(lower, k + a.size - 1 + bb.size - 1)
        self.aux = [np.asarray(c.coeffs if isinstance(c, CoeffVec) else c) for c in problem.aux_columns]
        for row in problem.extra_rows:
            dtypes += [np.asarray(row.value).dtype] + [np.asarray(v).dtype for v in row.aux]
        dtypes += [c.dtype for c in self.aux]
        self.dtype = np.result_type(*dtypes, float)
        self.op_lower = lower
        self.n_top = len(problem.extra_rows)
        self.n_aux = len(self.aux)
        low = self.n_top - self.n_aux + lower
        for i, c in enumerate(self.aux):
            low = max(low, self.n_top + c.size - 1 - i)
        self.lower = max(low, 0)
        self.ops: dict[float, FioOperator] = {}
        self._basis_vals: dict[float, np.ndarray] = {}

    def op(self, mu: float, ncols: int) -> FioOperator:
        op = self.ops.get(mu)
        if op is None or op.n_cols < ncols:
            target = max(ncols, _GROW_STEP) if op is None else max(ncols, op.n_cols + _GROW_STEP)
            target = -(-target // _GROW_STEP) * _GROW_STEP
            if op is None:
                op = build_fio(mu, self.basis.alpha, self.basis.beta, target, keep_r=self.keep_r)
            else:
                op = op.grow(target)
            self.ops[mu] = op
        return op

    def apply_terms(self, v: np.ndarray) -> np.ndarray:
        """Operator (without border) applied to a finite coefficient vector."""
        from fracspec import kernels

        out = np.zeros(0, dtype=np.result_type(self.dtype, v))
        for mu, k, a, b in self.terms:
            w = v if (b.size == 1 and b[0] == 1) else kernels.mul_cheb(b, v)
            if mu > 0:
                w = self.op(mu, w.size).apply(w)
            w = kernels.mul_cheb(a, w) if not (a.size == 1 and a[0] == 1) else w
            if w.size > out.size:
                out = np.concatenate([out, np.zeros(w.size - out.size, dtype=out.dtype)])
            out[: w.size] += w
        return out

    def operator_column(self, j: int) -> np.ndarray:
        e = np.zeros(j + 1)
        e[j] = 1.0
        return self.apply_terms(e)

    def _basis_at(self, x: float, n: int) -> np.ndarray:
        """``Q_i(x)`` for ``i < n``."""
        vals = self._basis_vals.get(x)
        if vals is None or vals.size < n:
            y = float(self.basis.to_y(np.array([x]))[0])
            w = float(self.basis.weight(np.array([x]))[0]) if x != 1.0 else 1.0
            size = max(n, 2 * (0 if vals is None else vals.size), 64)
            t = np.zeros(size)
            t[0] = 1.0
            if size > 1:
                t[1] = y
            for i in range(2, size):
                t[i] = 2 * y * t[i - 1] - t[i - 2]
            vals = w * t
            self._basis_vals[x] = vals
        return vals[:n]

    def row_entries(self, row: ExtraRow, j0: int, j1: int) -> np.ndarray:
        out = np.zeros(j1 - j0, dtype=self.dtype)
        for j in range(j0, j1):
            if row.mu > 0:
                col = self.op(row.mu, j + 1).column(j)
            else:
                col = np.eye(1, j + 1, j).ravel()
            if row.x == 1.0:
                # every basis function equals 1 at x = 1
                out[j - j0] = math.fsum(col)
            else:
                out[j - j0] = np.dot(self._basis_at(row.x, col.size), col)
        return out

    def block(self, c0: int, c1: int) -> np.ndarray:
        """Rows ``0 .. c1-1+lower`` of global columns ``c0 .. c1-1``."""
        rows = c1 + self.lower
        out = np.zeros((rows, c1 - c0), dtype=self.dtype)
        na, nt = self.n_aux, self.n_top
        for c in range(c0, c1):
            if c < na:
                for r, row in enumerate(self.problem.extra_rows):
                    out[r, c - c0] = row.aux[c]
                col = self.aux[c]
                n = min(col.size, rows - nt)
                out[nt : nt + n, c - c0] = col[:n]
        j0, j1 = max(c0 - na, 0), c1 - na
        if j1 > j0:
            for r, row in enumerate(self.problem.extra_rows):
                out[r, j0 + na - c0 :] = self.row_entries(row, j0, j1)
            for j in range(j0, j1):
                col = self.operator_column(j)
                n = min(col.size, rows - nt)
                out[nt : nt + n, j + na - c0] = col[:n]
        return out

    def rhs(self) -> np.ndarray:
        top = np.array([row.value for row in self.problem.extra_rows], dtype=self.dtype)
        return np.concatenate([top, np.asarray(self.problem.rhs.coeffs, dtype=self.dtype)])

    def residual(self, x: np.ndarray) -> float:
        """Relative residual of the full unknown vector, by direct operator application."""
        na = self.n_aux
        aux, v = x[:na], x[na:]
        top = np.array(
            [
                sum(row.aux[i] * aux[i] for i in range(na)) + np.dot(self.row_entries(row, 0, v.size), v)
                - row.value
                for row in self.problem.extra_rows
            ],
            dtype=self.dtype,
        )
        body = self.apply_terms(v)
        for i, col in enumerate(self.aux):
            if col.size > body.size:
                body = np.concatenate([body, np.zeros(col.size - body.size, dtype=body.dtype)])
            body[: col.size] += aux[i] * col
        f = np.asarray(self.problem.rhs.coeffs)
        size = max(body.size, f.size)
        diff = np.zeros(size, dtype=self.dtype)
        diff[: body.size] += body
        diff[: f.size] -= f
        r = math.hypot(np.linalg.norm(top), np.linalg.norm(diff))
        return r / max(np.linalg.norm(self.rhs()), 1e-300)

    def system(self) -> LowerBandedSystem:
        def dense(nr, nc):
            blk = self.block(0, nc)
            out = np.zeros((nr, nc), dtype=self.dtype)
            r = min(nr, blk.shape[0])
            out[:r] = blk[:r]
            return out

        return LowerBandedSystem(self.block, self.rhs(), self.lower, self.dtype, self.n_top, dense)


def assemble(problem: FieProblem) -> LowerBandedSystem:
    """Lower-banded system for ``problem`` (functional rows and auxiliary
    unknowns first)."""
    return _Assembly(problem).system()


def solve(
    problem: FieProblem,
    tol: float = 1e-13,
    n_max: int = 4096,
    *,
    n_min: int = 0,
    keep_r: bool = False,
    keep_checkpoints: bool = False,
    extra_blocks: int = 0,
) -> SolveReport:
    """Adaptive solve of an assembled problem."""
    t0 = time.perf_counter()
    asm = _Assembly(problem, keep_r=keep_r)
    sol = adaptive_qr_solve(
        asm.system(), tol, n_max, n_min=n_min, keep_checkpoints=keep_checkpoints, extra_blocks=extra_blocks
    )
    x = sol.coeffs
    na = asm.n_aux
    if x.size < na + 1:
        x = np.concatenate([x, np.zeros(na + 1 - x.size, dtype=x.dtype)])
    res = asm.residual(x)
    coeffs = x[na:]
    cauchy = []
    if keep_checkpoints:
        prev = None
        for n, xc in sol.checkpoints:
            if prev is not None:
                size = max(prev[1].size, xc.size)
                d = np.zeros(size, dtype=xc.dtype)
                d[: xc.size] += xc
                d[: prev[1].size] -= prev[1]
                cauchy.append((n, float(np.abs(d).max())))
            prev = (n, xc)
    report = SolveReport(
        CoeffVec(problem.basis, coeffs),
        [complex(a) if np.iscomplexobj(x) else float(a) for a in x[:na]],
        coeffs.size,
        float(res),
        sol.residual_history,
        time.perf_counter() - t0,
        cauchy,
    )
    report.extras["assembly"] = asm
    report.extras["n_processed"] = sol.n_processed
    logger.info("solve: N_used=%d residual=%.3g", report.n_used, res)
    return report


def sample_solution(report: SolveReport, xs) -> np.ndarray:
    """Values of the solved function at ``xs``."""
    if report.evaluator is not None:
        return report.evaluator(np.asarray(xs, dtype=float))
    return eval_series(report.solution, xs)


# showcases


def abel_problem(lam: float = 2.0) -> FieProblem:
    """``u + lam**2 I^{1/2} u = 1`` on the ``(0, 1/2)`` basis."""
    basis = JfpBasis(0.0, 0.5)
    return FieProblem(basis, (FieTerm(0.0), FieTerm(0.5, lam**2)), CoeffVec(basis, np.array([1.0])))


def abel_exact(xs, lam: float = 2.0) -> np.ndarray:
    """``E_{1/2,1}(-lam**2 sqrt(1+x)) = erfcx(lam**2 sqrt(1+x))``."""
    return np.array([erfcx(lam**2 * math.sqrt(1.0 + x)) for x in np.atleast_1d(xs)])


_VAR_CONST = gamma(2.5) / gamma(17 / 6) + gamma(17 / 6) / gamma(10 / 3)


def var_problem() -> FieProblem:
    """``u + sqrt(1+x) I^{1/3} u + I^{1/2}[(1+.)^{1/3} u] = f`` with exact
    solution ``(1+x)**(3/2)`` on the ``(0, 1/6)`` basis."""
    basis = JfpBasis(0.0, 1 / 6)
    sqrt_term = power_coeffs([(1.0, 0.5)], basis)
    cube_term = power_coeffs([(1.0, 1 / 3)], basis)
    rhs = power_coeffs([(1.0, 1.5), (_VAR_CONST, 7 / 3)], basis)
    terms = (FieTerm(0.0), FieTerm(1 / 3, a=sqrt_term), FieTerm(0.5, b=cube_term))
    return FieProblem(basis, terms, CoeffVec(basis, rhs))


def bbo_exact(t) -> np.ndarray:
    """Closed form of ``v' + D^{1/2} v + v = 0, v(0) = 1`` for ``t > 0``."""
    c = (3 + 1j * math.sqrt(3)) / 6
    z0 = (-1 + 1j * math.sqrt(3)) / 2
    out = []
    for ti in np.atleast_1d(t):
        e = mittag_leffler(0.5, 0.5, z0 * math.sqrt(ti)).value
        out.append((1 / math.sqrt(math.pi) - 2 * (c * e).real) / math.sqrt(ti))
    return np.array(out)


def solve_bbo(tol: float = 1e-13, n_max: int = 2048) -> SolveReport:
    """Solve ``u + I^{1/2} u + I^1 u = -1`` and return ``v = I^1 u + 1``.

    Time is ``t = 1 + x``, so ``t`` runs over ``[0, 2]``. The returned
    report's solution holds the coefficients of ``v``; those of ``u`` are in
    ``extras["u"]``.
    """
    basis = JfpBasis(0.0, 0.5)
    problem = FieProblem(basis, (FieTerm(0.0), FieTerm(0.5), FieTerm(1.0)), CoeffVec(basis, np.array([-1.0])))
    rep = solve(problem, tol, n_max)
    asm = rep.extras["assembly"]
    u = rep.solution
    v = asm.op(1.0, len(u)).apply(u.coeffs)
    v[0] += 1.0
    rep.extras["u"] = u
    rep.solution = CoeffVec(basis, v)
    rep.n_used = len(u)
    return rep


def airy_problem(epsilon: float) -> FieProblem:
    """Bordered system for ``eps i^{3/2} D^{3/2} u - x u = 0``, ``u(-1) = 0``,
    ``u(1) = 1`` with ``u = I^{3/2} v + a (1+x)``, on the ``(-1/2, 1/2)`` basis.

    The derivative is taken in the Caputo sense, which annihilates
    ``a (1+x)``, so the auxiliary column holds the coefficients of
    ``-x (1+x)`` only. Adding the Riemann-Liouville image
    ``eps i^{3/2} a / (Gamma(1/2) sqrt(1+x))`` would make
    ``(v, a) = (-(1+x)**(-1/2) / Gamma(1/2), 1)`` an exact null vector of the
    bordered system, because that ``v`` integrates to ``1 + x``.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    basis = JfpBasis(-0.5, 0.5)
    c = epsilon * I32
    xmul = np.array([-0.25, 1.0, 0.25])  # x = 2 p**2 - 1 with p = (1+y)/2
    # x (1+x) = w(x) (4 p**5 - 2 p**3) with w the (-1/2) weight
    g = power_coeffs([(-1.0, 2.0), (1.0, 1.0)], basis).astype(complex)
    terms = (FieTerm(0.0, a=c), FieTerm(1.5, a=-xmul))
    row = ExtraRow(x=1.0, mu=1.5, value=1.0, aux=(2.0,))
    return FieProblem(basis, terms, CoeffVec(basis, np.zeros(1, dtype=complex)), (row,), (g,))


def solve_airy(epsilon: float = 1e-3, tol: float = 1e-13, n_max: int = 8000, extra_blocks: int = 3) -> SolveReport:
    """Fractional Airy showcase. ``report(xs)`` evaluates ``u``;
    ``report.solution`` holds ``v`` and ``report.aux_values[0]`` is ``a``.

    ``extra_blocks`` more column blocks are factored after convergence so
    that the Cauchy errors show their plateau. ``u`` is evaluated from the
    unweighted expansion of ``I^{3/2} v`` so that ``x = -1`` is exact.
    """
    problem = airy_problem(epsilon)
    rep = solve(problem, tol, n_max, keep_r=True, keep_checkpoints=True, extra_blocks=extra_blocks)
    asm = rep.extras["assembly"]
    a = rep.aux_values[0]
    iv = asm.op(1.5, len(rep.solution)).apply_unweighted(rep.solution.coeffs)
    lin = power_coeffs([(1.0, 1.0)], iv.basis)  # (1+x) on the (1, 1/2) basis
    uc = np.array(iv.coeffs, dtype=complex)
    uc[: lin.size] += a * lin
    u = CoeffVec(iv.basis, uc)
    rep.extras["u"] = u
    rep.evaluator = lambda xs: eval_series(u, xs)
    return rep


# problem files


def _coeff_spec(spec, basis: JfpBasis, weight_free: bool) -> np.ndarray:
    b = JfpBasis(0.0, basis.beta) if weight_free else basis
    if isinstance(spec, (int, float)):
        return np.array([float(spec)])
    if isinstance(spec, list):
        # complex entries are written as [re, im]
        return np.array([complex(*v) if isinstance(v, list) else v for v in spec])
    if not isinstance(spec, dict):
        raise DomainError(f"cannot read coefficients from {spec!r}")
    keys = set(spec)
    if keys == {"coeffs"}:
        return _coeff_spec(spec["coeffs"], basis, weight_free)
    if keys == {"grid_values"}:
        vals = np.asarray(spec["grid_values"], dtype=float)
        return values_to_coeffs(b, vals).coeffs
    if keys == {"powers"}:
        return power_coeffs([(float(c), float(g)) for c, g in spec["powers"]], b)
    raise DomainError(f"unknown coefficient keys {sorted(keys)}")


_PROBLEM_KEYS = {"schema_version", "alpha", "beta", "terms", "rhs", "bcs", "aux_columns", "tol", "n_max", "exact"}


def problem_from_json(obj: dict) -> tuple[FieProblem, dict]:
    """Parse a problem file; returns the problem and the solver settings."""
    unknown = set(obj) - _PROBLEM_KEYS
    if unknown:
        raise DomainError(f"unknown problem keys {sorted(unknown)}")
    try:
        basis = JfpBasis(float(obj.get("alpha", 0.0)), float(obj["beta"]))
        terms = []
        for t in obj["terms"]:
            extra = set(t) - {"mu", "a", "b"}
            if extra:
                raise DomainError(f"unknown term keys {sorted(extra)}")
            terms.append(
                FieTerm(
                    float(t.get("mu", 0.0)),
                    _coeff_spec(t.get("a", 1.0), basis, True),
                    _coeff_spec(t.get("b", 1.0), basis, True),
                )
            )
        rhs = CoeffVec(basis, _coeff_spec(obj["rhs"], basis, False))
        rows = tuple(
            ExtraRow(float(r.get("x", 1.0)), float(r.get("mu", 0.0)), r["value"], tuple(r.get("aux", ())))
            for r in obj.get("bcs", [])
        )
        aux = tuple(_coeff_spec(c, basis, False) for c in obj.get("aux_columns", []))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed problem: {exc}") from exc
    settings = {"tol": float(obj.get("tol", 1e-13)), "n_max": int(obj.get("n_max", 4096))}
    if "exact" in obj:
        settings["exact"] = obj["exact"]
    return FieProblem(basis, tuple(terms), rhs, rows, aux), settings


def load_problem(path) -> tuple[FieProblem, dict]:
    with open(path) as fh:
        return problem_from_json(json.load(fh))


def bundled_problem_path(name: str):
    """Path of a problem file shipped with the package."""
    return resources.files("fracspec") / "data" / name


def exact_from_spec(spec: dict) -> Callable:
    """Closed form named in a problem file's ``exact`` block."""
    kind = spec.get("kind")
    if kind == "abel":
        lam = float(spec["lambda"])
        return lambda xs: abel_exact(xs, lam)
    if kind == "powers":
        terms = [(float(c), float(g)) for c, g in spec["powers"]]
        return lambda xs: sum(c * (1 + np.asarray(xs)) ** g for c, g in terms)
    raise DomainError(f"unknown exact solution kind {kind!r}")


def _scalar_json(v):
    if isinstance(v, complex) or np.iscomplexobj(v):
        return [float(np.real(v)), float(np.imag(v))]
    return float(v)


def report_to_json(report: SolveReport, xs=None, exact: Callable | None = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "basis": {"alpha": report.solution.basis.alpha, "beta": report.solution.basis.beta},
        "coefficients": [_scalar_json(c) for c in report.solution.coeffs],
        "N_used": report.n_used,
        "aux_values": [_scalar_json(a) for a in report.aux_values],
        "residual": report.residual,
        "residual_history": [[n, r] for n, r in report.residual_history],
        "wall_time": report.wall_time,
    }
    if report.cauchy_errors:
        out["cauchy_errors"] = [[n, e] for n, e in report.cauchy_errors]
    if xs is not None:
        xs = np.asarray(xs, dtype=float)
        u = sample_solution(report, xs)
        out["values"] = {"x": xs.tolist(), "u": [_scalar_json(v) for v in u]}
        if exact is not None:
            err = np.abs(u - exact(xs))
            out["values"]["error"] = err.tolist()
            out["max_error"] = float(err.max())
    return out
