"""Scalar special functions.

Gamma, beta and erfc are thin wrappers over the standard library and
:mod:`scipy.special`. The Mittag-Leffler function is summed from its Taylor
series and reports how much cancellation the sum suffered, so that callers
can decide whether a double precision value is worth trusting.
"""

from __future__ import annotations

import cmath
import math
import warnings
from typing import NamedTuple

import mpmath
import numpy as np
import scipy.special as sc

from fracspec.errors import AccuracyWarning, DomainError

__all__ = [
    "MittagLefflerValue",
    "beta",
    "erfc",
    "erfcx",
    "gamma",
    "mittag_leffler",
]

#: Hard cap on the number of series terms.
ML_MAX_TERMS = 2000
#: Cancellation ratio above which a double precision sum is flagged.
ML_FLAG_RATIO = 1e12
#: Larger beta arguments are evaluated in mpmath.
BETA_SCIPY_LIMIT = 50.0


def gamma(x):
    """Gamma function for real or complex arguments.

    Raises :class:`DomainError` at the poles and :class:`OverflowError` for
    real arguments beyond ~171.6.
    """
    if isinstance(x, complex):
        if x.imag == 0.0:
            return complex(gamma(x.real))
        return complex(sc.gamma(x))
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    try:
        return math.gamma(x)
    except OverflowError:
        raise OverflowError(f"gamma({x}) overflows double precision") from None


def beta(a: float, b: float) -> float:
    """Beta function ``B(a, b)`` for positive arguments.

    Symmetric by construction: the arguments are sorted before evaluation.
    """
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise DomainError(f"beta requires positive arguments, got ({a}, {b})")
    lo, hi = (a, b) if a <= b else (b, a)
    if hi < BETA_SCIPY_LIMIT:
        return float(sc.beta(lo, hi))
    # scipy drifts to ~4e-13 relative once an argument is in the hundreds
    with mpmath.workdps(30):
        return float(mpmath.beta(lo, hi))


def erfc(x: float) -> float:
    """Complementary error function."""
    return math.erfc(float(x))


def erfcx(x: float) -> float:
    """Scaled complementary error function ``exp(x**2) * erfc(x)``."""
    return float(sc.erfcx(float(x)))


class MittagLefflerValue(NamedTuple):
    value: complex
    #: ``max |term| / scale`` with scale the larger of ``|result|`` and ``|term_0|``
    cancellation: float
    #: set when the term cap was hit or the cancellation ratio exceeds 1e12
    flagged: bool

    @property
    def digits_lost(self) -> float:
        return math.log10(max(self.cancellation, 1.0))


def _ml_terms_double(sigma: float, tau: float, z: complex, tol: float):
    """Sum the series in double precision; return (sum, max |term|, n, capped)."""
    if z == 0:
        t0 = complex(sc.rgamma(tau))
        return t0, abs(t0), abs(t0), False
    total = 0j
    max_term = 0.0
    first = None
    logz = cmath.log(z)
    for k in range(ML_MAX_TERMS):
        arg = sigma * k + tau
        if k == 0:
            term = complex(sc.rgamma(arg))
        elif arg < 170.0:
            term = z**k * sc.rgamma(arg)
        else:
            # log space keeps z**k and Gamma(arg) from overflowing separately
            term = cmath.exp(k * logz - math.lgamma(arg)) if arg > 0 else 0j
        if first is None:
            first = abs(term)
        total += term
        aterm = abs(term)
        max_term = max(max_term, aterm)
        if k > 0 and aterm <= tol * abs(total) and _past_peak(sigma, tau, z, k):
            return total, max_term, first, False
    return total, max_term, first, True


def _past_peak(sigma: float, tau: float, z: complex, k: int) -> bool:
    # term ratios shrink once Gamma growth beats |z|**k
    a = sigma * k + tau
    return a > 1 and sigma * math.log(max(a, 1.0)) > math.log(abs(z) + 1e-300)


def _ml_terms_mp(sigma: float, tau: float, z: complex, tol: float, dps: int):
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        s = mpmath.mpf(sigma)
        t = mpmath.mpf(tau)
        total = mpmath.mpc(0)
        zk = mpmath.mpc(1)
        for k in range(ML_MAX_TERMS):
            term = zk * mpmath.rgamma(s * k + t)
            total += term
            if k > 0 and abs(term) <= tol * abs(total) and _past_peak(sigma, tau, z, k):
                return complex(total), False
            zk *= zz
    return complex(total), True


def mittag_leffler(
    sigma: float,
    tau: float,
    z,
    tol: float = 1e-16,
    *,
    extended: bool = False,
) -> MittagLefflerValue:
    """Two-parameter Mittag-Leffler function ``E_{sigma,tau}(z)``.

    The Taylor series ``sum z**k / Gamma(sigma*k + tau)`` is summed until a
    term falls below ``tol`` times the partial sum. Alongside the value, the
    ratio of the largest term to the result scale is returned; about
    ``log10`` of that many digits are lost to cancellation in double
    precision.

    With ``extended=True`` the same series is summed in :mod:`mpmath` with the
    working precision raised by the estimated number of lost digits, and the
    result is never flagged for cancellation.

    Parameters
    ----------
    sigma, tau : float
        ``sigma > 0``.
    z : complex
    tol : float
        Relative truncation tolerance in ``(1e-16, 1e-2)``; the lower end is
        inclusive here so that full double precision can be requested.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not (1e-17 < tol < 1e-2):
        raise DomainError(f"tol must lie in (1e-16, 1e-2), got {tol}")
    z = complex(z)

    total, max_term, first, capped = _ml_terms_double(sigma, tau, z, tol)
    scale = max(abs(total), first or 0.0)
    ratio = max_term / scale if scale > 0 else math.inf

    if extended:
        dps = 20 + int(math.ceil(math.log10(max(ratio, 1.0))))
        total, capped = _ml_terms_mp(sigma, tau, z, tol, dps)
        flagged = capped
    else:
        flagged = capped or ratio > ML_FLAG_RATIO

    if flagged:
        warnings.warn(
            f"E_{{{sigma},{tau}}}({z}) is unreliable "
            f"(cancellation ratio {ratio:.3g}, term cap hit: {capped})",
            AccuracyWarning,
            stacklevel=2,
        )
    return MittagLefflerValue(total, ratio, flagged)


def mittag_leffler_array(sigma: float, tau: float, zs, tol: float = 1e-16) -> np.ndarray:
    """Vector convenience wrapper; returns values only."""
    zs = np.asarray(zs, dtype=complex)
    out = np.empty(zs.shape, dtype=complex)
    for idx, z in np.ndenumerate(zs):
        out[idx] = mittag_leffler(sigma, tau, z, tol).value
    return out
