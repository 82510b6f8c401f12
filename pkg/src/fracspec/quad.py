"""Moments and boundary values needed to start and anchor the column recurrence.

``h_n`` is a closed-form beta function value. The boundary values

.. math::

    \\varphi_{n}(1) = \\int_{-1}^{1} (1-s)^{\\alpha} (1+s)^{\\mu-1}
        T_{n}\\left(2\\left(\\tfrac{1-s}{2}\\right)^{\\beta} - 1\\right) ds

are computed with a truncated tanh-sinh (double exponential) trapezoidal rule
using ``max(8n, 80)`` points on ``[-4, 4]``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fracspec import kernels, special
from fracspec.errors import DomainError

__all__ = [
    "DeRule",
    "HALF_WIDTH",
    "boundary_phi",
    "boundary_phi_block",
    "de_rule",
    "half_width_for",
    "moment_h",
    "num_points_for",
]

HALF_WIDTH = 4.0
MIN_POINTS = 80
POINTS_PER_DEGREE = 8
#: Columns sharing one quadrature rule when values are computed in batches.
BLOCK = 64
# the endpoint mass cut off by the window must stay below this
_TRUNCATION_TARGET = 1e-17

_LOG2 = math.log(2.0)


def moment_h(n: int, mu: float, alpha: float, beta: float) -> float:
    """``h_n = 2**(mu+alpha+n*beta) * B(mu, 1+alpha+n*beta)``."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    p = 1 + alpha + n * beta
    if not (mu > 0 and p > 0):
        raise DomainError(f"moment undefined for mu={mu}, 1+alpha+n*beta={p}")
    e = mu + alpha + n * beta
    ei = math.floor(e)
    b = special.beta(mu, p)
    # split the power of two so that large n does not lose relative accuracy
    return math.ldexp(2.0 ** (e - ei) * b, ei)


def half_width_for(mu: float, alpha: float) -> float:
    """Window ``[-h, h]`` for the transformed trapezoidal rule.

    The tanh-sinh map leaves ``1 -/+ s ~ 2 exp(-pi sinh h)`` uncovered at the
    ends, which costs about ``(2 exp(-pi sinh h))**p`` with ``p`` the smaller of
    ``1 + alpha`` and ``mu``. ``h = 4`` is enough whenever ``p >= 1/2``; small
    exponents get a wider window.
    """
    p = min(1.0 + alpha, mu)
    need = (-math.log(_TRUNCATION_TARGET) / p + _LOG2) / math.pi
    return max(HALF_WIDTH, math.asinh(need))


def num_points_for(n: int, half_width: float = HALF_WIDTH) -> int:
    """Trapezoidal points used for degree ``n``; spacing is kept fixed when the
    window is widened."""
    base = max(POINTS_PER_DEGREE * n, MIN_POINTS)
    if half_width == HALF_WIDTH:
        return base
    return int(math.ceil(base * half_width / HALF_WIDTH))


@dataclass(frozen=True)
class DeRule:
    """Trapezoidal rule in ``tau`` under ``s = tanh((pi/2) sinh tau)``.

    ``log1m`` and ``log1p`` hold ``log(1 - s)`` and ``log(1 + s)`` computed
    without forming ``1 -/+ s``, so endpoint factors with negative exponents
    stay finite.
    """

    num_points: int
    half_width: float
    nodes: np.ndarray
    weights: np.ndarray
    log1m: np.ndarray
    log1p: np.ndarray

    def integrate(self, a: float = 0.0, b: float = 0.0, g=None) -> float:
        """``int_{-1}^{1} (1-s)**a (1+s)**b g(s) ds``."""
        w = self.weighted(a, b)
        if g is None:
            return float(np.sum(w))
        return np.sum(w * g(self.nodes))

    def weighted(self, a: float, b: float) -> np.ndarray:
        return self.weights * np.exp(a * self.log1m + b * self.log1p)


# each block needs its own rule size, so a deep cache only holds O(N) arrays
# per block for no reuse; a few entries serve repeated builds and grow()
@lru_cache(maxsize=4)
def de_rule(num_points: int, half_width: float = HALF_WIDTH) -> DeRule:
    if num_points < 2:
        raise DomainError("need at least two points")
    tau = np.linspace(-half_width, half_width, num_points)
    step = tau[1] - tau[0]
    u = 0.5 * np.pi * np.sinh(tau)
    s = np.tanh(u)
    log1m = _LOG2 - np.logaddexp(0.0, 2 * u)
    log1p = _LOG2 - np.logaddexp(0.0, -2 * u)
    # ds/dtau = (pi/2) cosh(tau) (1 - s)(1 + s)
    jac = 0.5 * np.pi * np.cosh(tau) * np.exp(log1m + log1p)
    w = step * jac
    w[0] *= 0.5
    w[-1] *= 0.5
    for arr in (tau, s, w, log1m, log1p):
        arr.setflags(write=False)
    return DeRule(num_points, half_width, s, w, log1m, log1p)


_rule_lock = threading.Lock()


def _phi_nodes(num_points: int, half_width: float, mu: float, alpha: float, beta: float):
    """Angles ``arccos(y(s))`` and integrand weights at the rule nodes."""
    with _rule_lock:
        rule = de_rule(num_points, half_width)
    w = rule.weights * np.exp(alpha * rule.log1m + (mu - 1.0) * rule.log1p)
    # (1+y)/2 = ((1-s)/2)**beta and (1-y)/2 = 1 - that, both without cancellation
    lg = beta * (rule.log1m - _LOG2)
    half_up = np.exp(lg)
    half_dn = -np.expm1(lg)
    theta = 2.0 * np.arctan2(np.sqrt(half_dn), np.sqrt(half_up))
    return theta, w


def boundary_phi(n: int, mu: float, alpha: float, beta: float) -> float:
    """``phi_n(1)`` with exactly ``max(8n, 80)`` points (window permitting)."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    h = half_width_for(mu, alpha)
    theta, w = _phi_nodes(num_points_for(n, h), h, mu, alpha, beta)
    return float(np.sum(w * np.cos(n * theta)))


def boundary_phi_block(n0: int, count: int, mu: float, alpha: float, beta: float) -> np.ndarray:
    """``phi_n(1)`` for ``n = n0 .. n0+count-1`` from one shared rule.

    The rule is sized for the largest degree of the aligned block of
    :data:`BLOCK` columns containing ``n0``, so the values do not depend on
    how a range of columns is split into calls.
    """
    if count <= 0:
        return np.zeros(0)
    b = n0 // BLOCK
    if (n0 + count - 1) // BLOCK != b:
        raise DomainError("a batch must not straddle a block boundary")
    h = half_width_for(mu, alpha)
    top = (b + 1) * BLOCK - 1
    theta, w = _phi_nodes(num_points_for(top, h), h, mu, alpha, beta)
    return kernels.cos_moments(theta, w, n0, count)
