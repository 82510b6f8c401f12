"""Matrix representation of the Riemann-Liouville integral on JFP series.

For ``mu = k * beta`` the integral of order ``mu`` maps ``Q^{alpha,beta}``
series to ``Q^{alpha,beta}`` series. Column ``n`` of the matrix is

.. math::

    \\mathcal{S}_{:,n} = \\frac{2^{-\\alpha}}{\\Gamma(\\mu)}
        \\mathcal{M}\\, R_{:,n},

where ``R_{:,n}`` holds the ``Q^{0,beta}`` coefficients of the auxiliary
function ``phi_n`` and ``M`` multiplies by ``((1+y)/2)**k``. The ``R``
columns come from closed forms for ``n <= 2`` and a three-term recurrence in
``n`` afterwards, each step an O(n) almost-banded solve anchored at ``x = 1``.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

import numpy as np

from fracspec import kernels, quad
from fracspec.basis import CoeffVec, JfpBasis
from fracspec.errors import DomainError
from fracspec.linalg import BandedMatrix
from fracspec.special import gamma

logger = logging.getLogger(__name__)

__all__ = [
    "FioOperator",
    "MulOp",
    "apply_fio_exact_oracle",
    "build_fio",
    "conv_matrix",
    "diff_matrix",
    "fio_columns",
    "initial_columns",
    "integer_ratio",
    "mul_matrix",
    "power_multiplier_coeffs",
    "recurse_column",
]

SCHEMA_VERSION = 1
#: k above which a warning is issued (valid, just wasteful).
LARGE_K = 64


def diff_matrix(n: int) -> BandedMatrix:
    """``(n+1) x (n+2)`` matrix with ``D[m,m] = m/2, D[m,m+1] = m+1,
    D[m,m+2] = (m+2)/2``."""
    m = np.arange(n + 1, dtype=float)
    return BandedMatrix.from_diagonals({0: m / 2, 1: m + 1, 2: (m + 2) / 2}, (n + 1, n + 2))


def conv_matrix(n: int) -> BandedMatrix:
    """``(n+1) x (n+2)`` conversion matrix: diagonal ``(1, 1/2, 1/2, ...)``,
    second superdiagonal ``-1/2``."""
    d0 = np.full(n + 1, 0.5)
    d0[0] = 1.0
    return BandedMatrix.from_diagonals({0: d0, 2: np.full(n + 1, -0.5)}, (n + 1, n + 2))


def _check_params(mu: float, alpha: float, beta: float) -> None:
    if not (math.isfinite(mu) and mu > 0):
        raise DomainError(f"mu must be positive, got {mu}")
    if not (math.isfinite(alpha) and alpha > -1):
        raise DomainError(f"alpha must exceed -1, got {alpha}")
    if not (math.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be positive, got {beta}")


def integer_ratio(mu: float, beta: float) -> int:
    """``k = mu / beta`` snapped to an integer; raises if it is not one."""
    if not (beta > 0 and mu > 0):
        raise DomainError("mu and beta must be positive")
    r = mu / beta
    k = round(r)
    if k < 1 or abs(r - k) > 1e-12 * max(k, 1):
        raise DomainError("mu must be an integer multiple of beta")
    return int(k)


def initial_columns(mu: float, alpha: float, beta: float):
    """Closed forms for ``R_0``, ``R_1`` and ``R_2``."""
    _check_params(mu, alpha, beta)
    h0, h1, h2 = (quad.moment_h(n, mu, alpha, beta) for n in range(3))
    t1 = h1 / 2.0**beta
    t2 = h2 / 2.0 ** (2 * beta)
    r0 = np.array([h0])
    r1 = np.array([t1 - h0, t1])
    r2 = np.array([3 * t2 - 4 * t1 + h0, 4 * (t2 - t1), t2])
    return r0, r1, r2


def recurse_column(n: int, r_prev, r_cur, bc_value: float) -> np.ndarray:
    """``R_{n+1}`` from ``R_{n-1}``, ``R_n`` and ``phi_{n+1}(1)``, for ``n >= 2``."""
    if n < 2:
        raise DomainError("the recurrence holds for n >= 2")
    r_prev = np.ascontiguousarray(r_prev, dtype=float)
    r_cur = np.ascontiguousarray(r_cur, dtype=float)
    if r_prev.size != n or r_cur.size != n + 1:
        raise DomainError(f"expected columns of length {n} and {n + 1}")
    col, _ = kernels.recurse_column(r_prev, r_cur, float(bc_value), n)
    return col


@lru_cache(maxsize=256)
def _power_cheb_exact(k: int) -> tuple[Fraction, ...]:
    """Chebyshev coefficients of ``((1+y)/2)**k`` as exact fractions."""
    if k == 0:
        return (Fraction(1),)
    prev = _power_cheb_exact(k - 1)
    out = [Fraction(0)] * (k + 1)
    half = Fraction(1, 2)
    for j, c in enumerate(prev):
        out[j] += half * c
        # T_1 T_j = (T_{j+1} + T_{|j-1|}) / 2
        out[j + 1] += half * half * c
        out[abs(j - 1)] += half * half * c
    return tuple(out)


def power_multiplier_coeffs(k: int, beta: float = 1.0) -> np.ndarray:
    """Chebyshev-in-``y`` coefficients of ``((1+x)/2)**(k*beta) = ((1+y)/2)**k``.

    ``beta`` does not enter the coefficients; it is accepted so call sites
    read naturally.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    return np.array([float(c) for c in _power_cheb_exact(int(k))])


class MulOp:
    """Multiplication by ``sum_j c_j T_j(y)`` on Chebyshev-type coefficients.

    Entries are ``(T + H) / 2`` with ``T`` the symmetric Toeplitz matrix of
    ``(2 c_0, c_1, ..., c_k)`` and ``H[i, j] = c_{i+j}`` for ``i >= 1``.
    The weight ``((1+x)/2)**alpha`` commutes with the multiplier, so the same
    matrix serves every ``alpha``.
    """

    def __init__(self, coeffs):
        c = np.array(coeffs)
        if c.ndim != 1 or c.size == 0:
            raise DomainError("need a nonempty coefficient list")
        self.coeffs = c
        self.coeffs.setflags(write=False)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def bandwidths(self) -> tuple[int, int]:
        return self.degree, self.degree

    def entry(self, i: int, j: int):
        c = self.coeffs
        k = self.degree
        d = abs(i - j)
        t = 2 * c[0] if d == 0 else (c[d] if d <= k else 0.0)
        hk = c[i + j] if (i >= 1 and i + j <= k) else 0.0
        return 0.5 * (t + hk)

    def matrix(self, nrows: int, ncols: int) -> np.ndarray:
        out = np.zeros((nrows, ncols), dtype=self.coeffs.dtype)
        for j in range(ncols):
            col = self.matvec(np.eye(1, j + 1, j).ravel())
            r = min(nrows, col.size)
            out[:r, j] = col[:r]
        return out

    def matvec(self, v) -> np.ndarray:
        """Product with a finite coefficient vector; length grows by ``k``."""
        return kernels.mul_cheb(self.coeffs, np.asarray(v))

    __matmul__ = matvec

    def __repr__(self) -> str:
        return f"MulOp(degree={self.degree})"


def mul_matrix(coeffs) -> MulOp:
    return MulOp(coeffs)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FRACSPEC_THREADS", "1")))
    except ValueError:
        return 1


def _phi_batches(n0: int, n1: int, mu: float, alpha: float, beta: float) -> list[np.ndarray]:
    """``phi_n(1)`` for ``n0 <= n < n1`` in block-aligned batches."""
    edges = [n0]
    nxt = (n0 // quad.BLOCK + 1) * quad.BLOCK
    while nxt < n1:
        edges.append(nxt)
        nxt += quad.BLOCK
    edges.append(n1)
    spans = list(zip(edges[:-1], edges[1:]))

    def run(span):
        a, b = span
        return quad.boundary_phi_block(a, b - a, mu, alpha, beta)

    threads = _threads()
    if threads > 1 and len(spans) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, spans))
    return [run(s) for s in spans]


@dataclass
class _RecState:
    """What the recurrence needs to continue: the last two ``R`` columns."""

    n_next: int
    r_prev: np.ndarray | None = None
    r_cur: np.ndarray | None = None


def _r_columns(mu, alpha, beta, state: _RecState, n_end: int, diag: dict | None = None):
    """Yield ``(n, R_n)`` for ``state.n_next <= n < n_end`` and advance ``state``."""
    if state.n_next < 3:
        init = initial_columns(mu, alpha, beta)
        while state.n_next < min(3, n_end):
            n = state.n_next
            state.r_prev, state.r_cur = state.r_cur, init[n]
            state.n_next += 1
            yield n, init[n]
    if state.n_next >= n_end:
        return
    # batches of boundary values, one aligned block at a time, prefetched
    start = state.n_next
    chunk = max(quad.BLOCK * _threads(), quad.BLOCK)
    pos = start
    while pos < n_end:
        stop = min(n_end, (pos // quad.BLOCK) * quad.BLOCK + chunk)
        phis = np.concatenate(_phi_batches(pos, stop, mu, alpha, beta))
        for i, n in enumerate(range(pos, stop)):
            col, piv = kernels.recurse_column(state.r_prev, state.r_cur, float(phis[i]), n - 1)
            if diag is not None:
                diag["min_pivot"].append(piv)
                diag["boundary_residual"].append(abs(math.fsum(col) - phis[i]) / max(1.0, abs(phis[i])))
            state.r_prev, state.r_cur = state.r_cur, col
            state.n_next = n + 1
            yield n, col
        pos = stop


def fio_columns(mu: float, alpha: float, beta: float, n_end: int, n_start: int = 0) -> Iterator[tuple[int, np.ndarray]]:
    """Stream columns of the matrix without retaining them.

    Only the last two ``R`` columns are held, so working memory is
    ``O(n + k)`` on top of whatever the caller keeps.
    """
    _check_params(mu, alpha, beta)
    k = integer_ratio(mu, beta)
    mop = MulOp(power_multiplier_coeffs(k))
    scale = 2.0**-alpha / gamma(mu)
    state = _RecState(0)
    for n, r in _r_columns(mu, alpha, beta, state, n_end):
        if n >= n_start:
            yield n, scale * mop.matvec(r)


@dataclass(frozen=True)
class FioOperator:
    """Columns ``0 .. n_cols-1`` of the integral-of-order-``mu`` matrix.

    Treat instances as immutable: :meth:`grow` returns a new operator that
    shares the already built columns.
    """

    mu: float
    alpha: float
    beta: float
    k: int
    columns: tuple = ()
    keep_r: bool = False
    r_columns: tuple = ()
    _state: _RecState = field(default=None, repr=False, compare=False)
    diagnostics: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    N = n_cols

    @property
    def basis(self) -> JfpBasis:
        return JfpBasis(self.alpha, self.beta)

    @property
    def scale(self) -> float:
        return 2.0**-self.alpha / gamma(self.mu)

    @property
    def multiplier(self) -> MulOp:
        return MulOp(power_multiplier_coeffs(self.k))

    def grow(self, n_new: int) -> FioOperator:
        """Operator with ``n_new`` columns; only the new ones are computed."""
        if n_new < self.n_cols:
            raise DomainError(f"cannot shrink from {self.n_cols} to {n_new} columns")
        if n_new == self.n_cols:
            return self
        state = _RecState(self._state.n_next, self._state.r_prev, self._state.r_cur)
        diag = {key: list(v) for key, v in self.diagnostics.items()}
        mop = self.multiplier
        scale = self.scale
        cols = list(self.columns)
        rcols = list(self.r_columns)
        for _, r in _r_columns(self.mu, self.alpha, self.beta, state, n_new, diag):
            s = scale * mop.matvec(r)
            s.setflags(write=False)
            cols.append(s)
            if self.keep_r:
                r = r.copy()
                r.setflags(write=False)
                rcols.append(r)
        return FioOperator(self.mu, self.alpha, self.beta, self.k, tuple(cols), self.keep_r, tuple(rcols), state, diag)

    def column(self, j: int) -> np.ndarray:
        """Column ``j`` with its ``j + k + 1`` stored entries."""
        return self.columns[j]

    def matrix(self, nrows: int | None = None, ncols: int | None = None) -> np.ndarray:
        """Dense ``nrows x ncols`` truncation (both default to ``n_cols``)."""
        ncols = self.n_cols if ncols is None else ncols
        nrows = ncols if nrows is None else nrows
        if ncols > self.n_cols:
            raise DomainError(f"only {self.n_cols} columns built, asked for {ncols}")
        out = np.zeros((nrows, ncols))
        for j in range(ncols):
            c = self.columns[j]
            r = min(nrows, c.size)
            out[:r, j] = c[:r]
        return out

    def apply(self, v) -> np.ndarray:
        """Coefficients of the integral of the series ``v`` (length ``len(v)+k``)."""
        v = np.asarray(v)
        if v.size > self.n_cols:
            raise DomainError(f"vector of length {v.size} exceeds {self.n_cols} built columns")
        out = np.zeros(v.size + self.k, dtype=np.result_type(v, float))
        for j in np.nonzero(v)[0]:
            c = self.columns[j]
            out[: c.size] += v[j] * c
        return out

    def apply_unweighted(self, v) -> CoeffVec:
        """The integral of ``v`` expanded in the ``(alpha + mu, beta)`` basis.

        Useful where the ``(alpha, beta)`` weight is singular at ``x = -1``
        but the integral is not. Requires ``keep_r``.
        """
        if not self.keep_r:
            raise DomainError("build with keep_r=True to use apply_unweighted")
        v = np.asarray(v)
        if v.size > self.n_cols:
            raise DomainError(f"vector of length {v.size} exceeds {self.n_cols} built columns")
        out = np.zeros(max(v.size, 1), dtype=np.result_type(v, float))
        for j in np.nonzero(v)[0]:
            r = self.r_columns[j]
            out[: r.size] += v[j] * r
        return CoeffVec(JfpBasis(self.alpha + self.mu, self.beta), self.scale * out)

    def boundary_row(self, ncols: int | None = None) -> np.ndarray:
        """Values at ``x = 1`` of the integrated basis functions (column sums).

        Each ``Q_n`` is 1 at ``x = 1``, so this is the row ``(1, 1, ...)``
        applied to the matrix.
        """
        ncols = self.n_cols if ncols is None else ncols
        return np.array([math.fsum(self.columns[j]) for j in range(ncols)])

    def to_json(self, ncols: int | None = None) -> dict:
        ncols = self.n_cols if ncols is None else ncols
        return {
            "schema_version": SCHEMA_VERSION,
            "mu": self.mu,
            "alpha": self.alpha,
            "beta": self.beta,
            "N": ncols,
            "columns": [self.columns[j].tolist() for j in range(ncols)],
        }

    def to_csv(self, n: int | None = None) -> str:
        """Dense ``n x n`` truncation, row-major, shortest round-trip floats."""
        a = self.matrix(n, n)
        return "\n".join(",".join(repr(float(x)) for x in row) for row in a) + "\n"


def build_fio(mu: float, alpha: float, beta: float, N: int, *, keep_r: bool = False) -> FioOperator:
    """Build columns ``0 .. N-1`` of the integral-of-order-``mu`` matrix.

    ``mu`` must be an integer multiple ``k * beta``; the ratio is accepted
    within ``1e-12 * k`` and snapped.

    Examples
    --------
    >>> op = build_fio(0.5, 0.0, 0.5, 4)
    >>> op.column(0).round(7)
    array([0.7978846, 0.7978846])
    """
    _check_params(mu, alpha, beta)
    k = integer_ratio(mu, beta)
    if N < 1:
        raise DomainError("N must be at least 1")
    if k > LARGE_K:
        warnings.warn(f"mu/beta = {k} is large; the matrix has lower bandwidth {k}", stacklevel=2)
    empty = FioOperator(
        float(mu), float(alpha), float(beta), k, (), keep_r, (), _RecState(0),
        {"min_pivot": [], "boundary_residual": []},
    )
    return empty.grow(N)


def _shifted_chebyshev_monomials(n: int) -> list[int]:
    """Integer ``a_m`` with ``T_n(2p - 1) = sum_m a_m p**m``."""
    prev, cur = [1], [-1, 2]
    if n == 0:
        return prev
    for _ in range(n - 1):
        nxt = [0] * (len(cur) + 1)
        for m, a in enumerate(cur):
            nxt[m + 1] += 4 * a
            nxt[m] -= 2 * a
        for m, a in enumerate(prev):
            nxt[m] -= a
        prev, cur = cur, nxt
    return cur


def apply_fio_exact_oracle(mu: float, alpha: float, beta: float, n: int, dps: int = 40) -> CoeffVec:
    """Column ``n`` of the matrix by term-wise integration of powers.

    Expands ``Q_n`` in powers ``((1+x)/2)**(alpha + m*beta)``, applies
    ``I^mu (1+x)**g = Gamma(g+1)/Gamma(g+1+mu) (1+x)**(g+mu)`` to each, and
    re-expands in the basis with exact Chebyshev power coefficients. Sums run
    in ``dps``-digit arithmetic. Meant for ``n <= 12``.
    """
    import mpmath

    _check_params(mu, alpha, beta)
    k = integer_ratio(mu, beta)
    if not 0 <= n <= 12:
        raise DomainError("the exact oracle is limited to n <= 12")
    with mpmath.workdps(dps):
        mmu, ma, mb = mpmath.mpf(mu), mpmath.mpf(alpha), mpmath.mpf(beta)
        # mu is k*beta exactly here; use the snapped value
        mmu = k * mb
        out = [mpmath.mpf(0)] * (n + k + 1)
        for m, a in enumerate(_shifted_chebyshev_monomials(n)):
            if a == 0:
                continue
            g = ma + m * mb
            factor = a * mpmath.gamma(g + 1) / mpmath.gamma(g + 1 + mmu) * mpmath.power(2, mmu)
            for j, c in enumerate(_power_cheb_exact(m + k)):
                out[j] += factor * mpmath.mpf(c.numerator) / c.denominator
        vals = np.array([float(v) for v in out])
    return CoeffVec(JfpBasis(alpha, beta), vals)
