"""Fractional eigenvalue problem with a Riemann-Liouville derivative.

``-D^{mu1} u = lam u`` on ``[-1, 1]`` with ``u^{(j)}(-1) = 0`` for
``j <= l - 2`` and ``D^{mu2} u(1) = 0`` is rewritten through integration as

.. math::

    c\\,(1+x)^{\\mu_1-1}\\, \\mathcal{I}^{\\mu_1-\\mu_2}u(1)
        - \\mathcal{I}^{\\mu_1}u(x) = \\frac{1}{\\lambda} u(x),

and the eigenvalues of largest ``|1/lam|`` of the truncated matrix are
found by Arnoldi on successively doubled truncations.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from fracspec.basis import CoeffVec, JfpBasis
from fracspec.errors import AccuracyWarning, DomainError, NonConvergenceError
from fracspec.feq import power_coeffs
from fracspec.linalg import largest_eigenpairs
from fracspec.opcore import build_fio, integer_ratio
from fracspec.special import gamma, mittag_leffler

logger = logging.getLogger(__name__)

__all__ = [
    "EigOperator",
    "EigProblem",
    "EigReport",
    "TABLE",
    "assemble_eig",
    "boundary_constant",
    "eig_solve",
    "refine_pairs",
    "ml_zero_residual",
    "showcase_problem",
]

#: The six eigenvalues of smallest modulus for ``mu1 = 3/2, mu2 = 0``.
TABLE = (
    1.794435495663993,
    6.177290302782617,
    11.359485354309392,
    19.740438605284737,
    22.834767521795890,
    complex(35.255579686924854, 7.532188956823454),
    complex(35.255579686924854, -7.532188956823454),
)

#: Cancellation ratio of the double precision series above which the
#: Mittag-Leffler check is not trusted.
ML_TRUST_RATIO = 1e6


@dataclass(frozen=True)
class EigProblem:
    mu1: float = 1.5
    mu2: float = 0.0
    basis: JfpBasis = field(default_factory=lambda: JfpBasis(0.5, 1.5))
    m: int = 6
    tol: float = 1e-13
    cauchy_tol: float = 1e-10
    tail_tol: float = 1e-12
    n_start: int = 64
    n_cap: int = 4096
    plateau_runs: int = 2

    def __post_init__(self):
        ell = math.floor(self.mu1) + 1
        if not (ell >= 2 and ell - 1 < self.mu1 < ell):
            raise DomainError("mu1 must lie strictly between l - 1 and l for an integer l >= 2")
        if not (0 <= self.mu2 < ell - 1):
            raise DomainError("mu2 must lie in [0, l - 1)")
        b = self.basis.beta
        integer_ratio(self.mu1, b)
        if self.mu1 != self.mu2:
            integer_ratio(self.mu1 - self.mu2, b)
        if self.n_start < 16:
            raise DomainError("n_start must be at least 16")


def showcase_problem(**kw) -> EigProblem:
    """``mu1 = 3/2``, ``mu2 = 0`` on the ``(1/2, 3/2)`` basis."""
    return EigProblem(**kw)


def boundary_constant(mu1: float, mu2: float) -> float:
    """``c = 1 / D^{mu2}[(1+.)^{mu1-1}](1) = Gamma(mu1-mu2) / Gamma(mu1) * 2**(1-mu1+mu2)``.

    It comes from eliminating the kernel coefficient with ``D^{mu2} u(1) = 0``.
    """
    return gamma(mu1 - mu2) / gamma(mu1) * 2.0 ** (1 - mu1 + mu2)


class EigOperator:
    """Truncated ``c v B S_dagger - S_ddagger`` (rank one plus lower-banded)."""

    def __init__(self, problem: EigProblem, N: int):
        if N < 16:
            raise DomainError("N must be at least 16")
        b = problem.basis
        self.N = N
        self.c = boundary_constant(problem.mu1, problem.mu2)
        self.v = CoeffVec(b, power_coeffs([(1.0, problem.mu1 - 1)], b))
        self.s_dd = build_fio(problem.mu1, b.alpha, b.beta, N)
        if problem.mu2 == 0:
            self.s_d = self.s_dd
        else:
            self.s_d = build_fio(problem.mu1 - problem.mu2, b.alpha, b.beta, N)
        self.brow = self.s_d.boundary_row(N)
        self.vpad = self.v.padded(N)

    def matvec(self, u):
        u = np.asarray(u)
        out = -self.s_dd.apply(u)[: self.N]
        return out + self.c * self.vpad * np.dot(self.brow, u)

    __matmul__ = matvec

    def dense(self) -> np.ndarray:
        return self.c * np.outer(self.vpad, self.brow) - self.s_dd.matrix(self.N, self.N)


def assemble_eig(problem: EigProblem, N: int) -> EigOperator:
    return EigOperator(problem, N)


@dataclass
class EigReport:
    eigenvalues: list
    eigenvectors: list
    truncations: list
    cauchy_errors: list
    residuals: list
    ml_values: list
    history: list = field(default_factory=list, repr=False)

    def table(self) -> list[dict]:
        rows = []
        for i, lam in enumerate(self.eigenvalues):
            val, trust = self.ml_values[i]
            rows.append(
                {
                    "index": i + 1,
                    "eigenvalue": lam,
                    "ml_value": val,
                    "ml_trusted": trust,
                    "eigen_residual": self.residuals[i],
                }
            )
        return rows


def refine_pairs(a: np.ndarray, pairs, steps: int = 2):
    """Polish Ritz pairs by shifted inverse iteration and a Rayleigh quotient.

    Arnoldi Ritz values scatter at about ``1e-13`` in ``theta``, which is
    ``1e-10`` in ``lam = 1/theta`` for the sixth eigenvalue; the plateau test
    needs them tighter than that. A pair is kept unrefined if polishing does
    not lower its residual. For a real matrix only the member of a conjugate
    pair with positive imaginary part is polished and its partner is set to
    the exact conjugate.
    """
    n = a.shape[0]
    real = not np.iscomplexobj(a)
    out = []
    for th, v0 in pairs:
        if real and th.imag < 0:
            out.append(None)
            continue
        v0 = np.asarray(v0, dtype=complex)
        v0 = v0 / np.linalg.norm(v0)
        r0 = np.linalg.norm(a @ v0 - th * v0)
        # the small offset keeps the shifted matrix away from exact singularity
        lu = sla.lu_factor(a - th * (1 + 1e-12) * np.eye(n), check_finite=False)
        v = v0
        for _ in range(steps):
            y = sla.lu_solve(lu, v, check_finite=False)
            v = y / np.linalg.norm(y)
        th1 = complex(np.vdot(v, a @ v))
        if np.isfinite(th1) and np.linalg.norm(a @ v - th1 * v) <= r0:
            out.append((th1, v))
        else:
            out.append((th, v0))
    for i, (th, v0) in enumerate(pairs):
        if out[i] is not None:
            continue
        mates = [p for p in out if p is not None and abs(p[0] - np.conj(th)) <= 1e-8 * abs(th)]
        if mates:
            out[i] = (np.conj(mates[0][0]), np.conj(mates[0][1]))
        else:
            out[i] = (th, np.asarray(v0, dtype=complex) / np.linalg.norm(v0))
    return out


def _sort_lams(pairs):
    lams = [1 / th for th, _ in pairs]
    # increasing modulus; conjugate partners adjacent, positive imaginary part first
    order = sorted(range(len(lams)), key=lambda i: (round(abs(lams[i]), 10), -lams[i].imag))
    return [lams[i] for i in order], [pairs[i][1] for i in order], [pairs[i][0] for i in order]


def _tail(vec: np.ndarray) -> float:
    n = vec.size
    tail = np.abs(vec[-max(8, n // 10) :]).max()
    return float(tail / np.abs(vec).max())


def eig_solve(problem: EigProblem | None = None) -> EigReport:
    """Eigenvalues of smallest modulus with self-convergence checks.

    Truncations double from ``n_start``. The Cauchy error is the 2-norm of
    the difference of the sorted eigenvalue lists of two consecutive
    truncations. The run stops when that error has stayed below
    ``cauchy_tol`` for ``plateau_runs`` consecutive doublings and every
    eigenvector's trailing coefficients are below ``tail_tol``.
    """
    problem = problem or showcase_problem()
    prev = None
    runs = 0
    truncs, cauchy, history = [], [], []
    N = problem.n_start
    while N <= problem.n_cap:
        op = assemble_eig(problem, N)
        a = op.dense()
        pairs = refine_pairs(a, largest_eigenpairs(a, problem.m, problem.tol * 1e-1))
        lams, vecs, thetas = _sort_lams(pairs)
        truncs.append(N)
        history.append(lams)
        tails = max(_tail(v) for v in vecs)
        if prev is not None and len(prev) == len(lams):
            err = float(np.linalg.norm(np.array(lams) - np.array(prev)))
        else:
            err = math.inf
        if prev is not None:
            cauchy.append((N, err))
        logger.info("N=%d cauchy=%.3g tail=%.3g", N, err, tails)
        runs = runs + 1 if err < problem.cauchy_tol else 0
        if runs >= problem.plateau_runs and tails < problem.tail_tol:
            res = [
                float(np.linalg.norm(a @ v - th * v) / np.linalg.norm(v)) for th, v in zip(thetas, vecs)
            ]
            ml = [ml_zero_residual(problem, lam) for lam in lams]
            coeffs = [CoeffVec(problem.basis, v) for v in vecs]
            return EigReport(lams, coeffs, truncs, cauchy, res, ml, history)
        prev = lams
        N *= 2
    raise NonConvergenceError(
        f"no eigenvalue plateau up to N={problem.n_cap}", history=cauchy, partial=prev
    )


def ml_zero_residual(problem: EigProblem, lam, extended: bool = True):
    """``E_{mu1, mu1-mu2}(-2**mu1 * lam)`` and whether it is a usable check.

    ``lam`` is an eigenvalue exactly when this vanishes. ``trust`` is False
    when the double precision series loses more than six digits to
    cancellation (ratio of largest term to result above 1e6); the caller
    should then rely on the eigen-residual instead. With ``extended`` the
    value itself is summed in raised precision, so it reflects the error in
    ``lam`` rather than rounding noise in the series.
    """
    z = -(2.0**problem.mu1) * complex(lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        dbl = mittag_leffler(problem.mu1, problem.mu1 - problem.mu2, z)
        val = mittag_leffler(problem.mu1, problem.mu1 - problem.mu2, z, extended=True) if extended else dbl
    trust = bool(dbl.cancellation <= ML_TRUST_RATIO and not dbl.flagged)
    v = val.value
    return (v.real if abs(v.imag) == 0 else v), trust
