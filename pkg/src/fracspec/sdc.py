"""Spectral deferred correction for Caputo initial value problems.

For ``D^mu u = F(t, u)`` with ``u(-1) = a``, the residual of an iterate is

.. math::

    \\varepsilon(t) = a + \\mathcal{I}^{\\mu} F(\\cdot, u)(t) - u(t),

evaluated spectrally with the matrix of ``I^mu``. Each sweep solves the
correction equation with a low-order product integration rule on the mapped
Chebyshev grid, marching up from ``t = -1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fracspec.basis import CoeffVec, JfpBasis, eval_series, mapped_grid, values_to_coeffs
from fracspec.errors import DomainError, NonConvergenceError
from fracspec.opcore import FioOperator, build_fio, integer_ratio

logger = logging.getLogger(__name__)

__all__ = [
    "SCHEMES",
    "SdcProblem",
    "SdcResult",
    "SweepError",
    "l1_weights",
    "sdc_residual",
    "sdc_solve",
    "sdc_sweep",
    "showcase_problem",
]

NEWTON_TOL = 1e-14
NEWTON_MAX_ITER = 50


class SweepError(NonConvergenceError):
    """The implicit node equation of a sweep did not converge."""

    def __init__(self, message: str, node: int):
        super().__init__(message)
        self.node = node


@dataclass
class SdcProblem:
    """``D^mu u = F(t, u)`` on ``[-1, 1]`` with ``u(-1) = a``.

    ``F`` takes arrays or scalars ``(t, u)``; ``dF`` is its ``u``-derivative
    (optional, a secant iteration is used without it).
    """

    mu: float
    a: float
    F: Callable
    dF: Callable | None = None
    basis: JfpBasis = field(default_factory=lambda: JfpBasis(0.0, 0.5))
    N: int = 10
    tol: float = 1e-14
    max_sweeps: int = 80
    scheme: str = "trapezoid"

    def __post_init__(self):
        if not 0 < self.mu <= 1:
            raise DomainError("mu must lie in (0, 1]")
        if self.N < 2:
            raise DomainError("need at least two grid points")
        integer_ratio(self.mu, self.basis.beta)
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        self._op: FioOperator | None = None

    @property
    def grid(self) -> np.ndarray:
        """Mapped grid, ordered from ``t = 1`` down to ``t = -1``."""
        return mapped_grid(self.basis, self.N)

    @property
    def operator(self) -> FioOperator:
        if self._op is None:
            self._op = build_fio(self.mu, self.basis.alpha, self.basis.beta, self.N)
        return self._op


@dataclass
class SdcResult:
    grid: np.ndarray
    values: np.ndarray
    coeffs: CoeffVec
    sweeps: int
    residual_history: list

    def __call__(self, ts):
        return eval_series(self.coeffs, ts)


def showcase_problem(N: int = 10, tol: float = 1e-14, max_sweeps: int = 80, scheme: str = "trapezoid") -> SdcProblem:
    """``mu = 1/2``, ``a = 0``, ``F = u + sqrt(1+t) - sqrt(pi)/2 (1+t)``;
    the exact solution is ``sqrt(pi) (1+t) / 2``."""
    half_root_pi = math.sqrt(math.pi) / 2

    def F(t, u):
        return u + np.sqrt(1 + t) - half_root_pi * (1 + t)

    def dF(t, u):
        return np.ones_like(np.asarray(u, dtype=float))

    return SdcProblem(0.5, 0.0, F, dF, JfpBasis(0.0, 0.5), N, tol, max_sweeps, scheme)


def sdc_residual(u_values, problem: SdcProblem) -> np.ndarray:
    """``a + I^mu F(., u) - u`` on the grid (grid order as :attr:`SdcProblem.grid`)."""
    u = np.asarray(u_values, dtype=float)
    t = problem.grid
    if u.shape != t.shape:
        raise DomainError(f"expected {t.size} grid values")
    f = np.asarray(problem.F(t, u), dtype=float)
    fc = values_to_coeffs(problem.basis, f)
    ic = problem.operator.apply(fc.coeffs)
    integral = eval_series(CoeffVec(problem.basis, ic), t)
    return problem.a + integral - u


SCHEMES = ("trapezoid", "rectangle")


def l1_weights(t_asc: np.ndarray, mu: float, scheme: str = "trapezoid") -> np.ndarray:
    """Lower triangular product-integration weights on an ascending grid.

    ``W @ g`` approximates ``I^mu g`` at the grid points, with the kernel
    ``(t_j - s)**(mu-1) / Gamma(mu)`` integrated exactly on each cell and
    ``g`` replaced by its piecewise linear interpolant (``"trapezoid"``, the
    integral form of the L1 scheme) or by its right-endpoint value
    (``"rectangle"``). Column 0 is zero for ``"rectangle"``.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}")
    n = t_asc.size
    w = np.zeros((n, n))
    g1 = math.gamma(mu + 1)
    g2 = math.gamma(mu + 2)
    for j in range(1, n):
        d = t_asc[j] - t_asc[: j + 1]
        p = d**mu
        cell = (p[:j] - p[1 : j + 1]) / g1
        if scheme == "rectangle":
            w[j, 1 : j + 1] = cell
            continue
        # int over a cell of the kernel times (s - t_{i-1}) / h
        q = d ** (mu + 1)
        h = np.diff(t_asc[: j + 1])
        up = (d[:j] * cell - mu * (q[:j] - q[1 : j + 1]) / g2) / h
        w[j, 1 : j + 1] += up
        w[j, :j] += cell - up
    return w


def _node_solve(F, dF, t, u, rhs, wjj, node):
    """Solve ``d - wjj (F(t, u+d) - F(t, u)) = rhs`` for ``d``."""
    f0 = F(t, u)
    d = rhs
    if dF is not None:
        for _ in range(NEWTON_MAX_ITER):
            g = d - wjj * (F(t, u + d) - f0) - rhs
            dg = 1.0 - wjj * dF(t, u + d)
            if dg == 0:
                break
            step = g / dg
            d -= step
            if abs(step) <= NEWTON_TOL * max(1.0, abs(d)):
                return d
    else:
        # secant from the explicit guess and a nudge
        d0, d1 = rhs, rhs + max(1e-8, 1e-8 * abs(rhs))
        g0 = d0 - wjj * (F(t, u + d0) - f0) - rhs
        for _ in range(NEWTON_MAX_ITER):
            g1 = d1 - wjj * (F(t, u + d1) - f0) - rhs
            if g1 == 0 or g1 == g0:
                return d1
            d0, d1, g0 = d1, d1 - g1 * (d1 - d0) / (g1 - g0), g1
            if abs(d1 - d0) <= NEWTON_TOL * max(1.0, abs(d1)):
                return d1
    raise SweepError(f"node equation did not converge at node {node}", node)


def sdc_sweep(u_values, residual, problem: SdcProblem) -> np.ndarray:
    """One correction sweep; returns ``u + delta`` in grid order."""
    u = np.asarray(u_values, dtype=float)
    eps = np.asarray(residual, dtype=float)
    t = problem.grid
    order = np.argsort(t, kind="stable")
    ta, ua, ea = t[order], u[order], eps[order]
    w = l1_weights(ta, problem.mu, problem.scheme)
    n = ta.size
    delta = np.zeros(n)
    dfdiff = np.zeros(n)  # F(t_i, u_i + d_i) - F(t_i, u_i)
    delta[0] = ea[0]
    dfdiff[0] = problem.F(ta[0], ua[0] + delta[0]) - problem.F(ta[0], ua[0])
    for j in range(1, n):
        hist = float(np.dot(w[j, :j], dfdiff[:j]))
        rhs = hist + ea[j]
        d = _node_solve(problem.F, problem.dF, ta[j], ua[j], rhs, w[j, j], j)
        delta[j] = d
        dfdiff[j] = problem.F(ta[j], ua[j] + d) - problem.F(ta[j], ua[j])
    out = np.empty(n)
    out[order] = ua + delta
    return out


def sdc_solve(problem: SdcProblem, u0=None) -> SdcResult:
    """Sweep from ``u0`` (default zero) until ``||eps||_inf < tol``."""
    u = np.zeros(problem.N) if u0 is None else np.array(u0, dtype=float)
    history = []
    for sweep in range(problem.max_sweeps + 1):
        eps = sdc_residual(u, problem)
        r = float(np.abs(eps).max())
        history.append(r)
        if r < problem.tol:
            coeffs = values_to_coeffs(problem.basis, u)
            logger.info("SDC converged after %d sweeps, residual %.3g", sweep, r)
            return SdcResult(problem.grid, u, coeffs, sweep, history)
        if sweep == problem.max_sweeps:
            break
        u = sdc_sweep(u, eps, problem)
    raise NonConvergenceError(
        f"SDC did not reach {problem.tol:g} in {problem.max_sweeps} sweeps (residual {history[-1]:.3g})",
        history=history,
        partial=u,
    )
