"""Chebyshev-based Jacobi fractional polynomials.

The basis function of degree ``n`` is

.. math::

    Q_n^{\\alpha,\\beta}(x) = w(x)^{\\alpha} T_n(y), \\qquad
    w(x) = \\frac{1+x}{2}, \\quad y = 2 w(x)^{\\beta} - 1,

so a coefficient vector in this basis is an ordinary Chebyshev series in the
mapped variable ``y`` multiplied by the weight ``w(x)**alpha``. All
transforms here work on the weight-free Chebyshev series; the weight is the
caller's business.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from fracspec.errors import DomainError, SingularityError

__all__ = [
    "CoeffVec",
    "JfpBasis",
    "chebyshev_points",
    "coeffs_to_values",
    "eval_jfp",
    "eval_series",
    "mapped_grid",
    "values_to_coeffs",
]


@dataclass(frozen=True)
class JfpBasis:
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > -1:
            raise DomainError(f"alpha must exceed -1, got {self.alpha}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")

    def weight(self, x):
        """``((1+x)/2)**alpha``; raises at ``x = -1`` when ``alpha < 0``."""
        x = np.asarray(x, dtype=float)
        if self.alpha < 0 and np.any(x <= -1):
            raise SingularityError("basis weight is singular at x = -1 for alpha < 0")
        return ((1 + x) / 2) ** self.alpha

    def to_y(self, x):
        """Map ``x`` in ``[-1, 1]`` to the Chebyshev variable ``y``."""
        x = np.asarray(x, dtype=float)
        return 2 * ((1 + x) / 2) ** self.beta - 1

    def to_x(self, y):
        """Inverse of :meth:`to_y`."""
        y = np.asarray(y, dtype=float)
        return 2 * ((1 + y) / 2) ** (1 / self.beta) - 1

    def with_alpha(self, alpha: float) -> JfpBasis:
        return JfpBasis(alpha, self.beta)


@dataclass(frozen=True)
class CoeffVec:
    """Coefficients of ``sum_n coeffs[n] * Q_n^{alpha,beta}(x)``."""

    basis: JfpBasis
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        c = np.array(self.coeffs, copy=True)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        if c.ndim != 1:
            raise DomainError("coefficients must be one-dimensional")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self) -> int:
        return self.coeffs.size

    @property
    def is_complex(self) -> bool:
        return self.coeffs.dtype.kind == "c"

    def __call__(self, xs):
        return eval_series(self, xs)

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, len(self)), dtype=self.coeffs.dtype)
        out[: len(self)] = self.coeffs
        return out

    def to_json(self) -> dict:
        if self.is_complex:
            cs = [[float(c.real), float(c.imag)] for c in self.coeffs]
        else:
            cs = [float(c) for c in self.coeffs]
        return {"alpha": self.basis.alpha, "beta": self.basis.beta, "coeffs": cs}

    @classmethod
    def from_json(cls, obj) -> CoeffVec:
        if isinstance(obj, str):
            obj = json.loads(obj)
        basis = JfpBasis(float(obj["alpha"]), float(obj["beta"]))
        return cls(basis, _parse_scalars(obj["coeffs"]))


def _parse_scalars(items) -> np.ndarray:
    if any(isinstance(c, (list, tuple)) for c in items):
        return np.array(
            [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in items]
        )
    return np.array(items, dtype=float)


def _chebyshev_t(n: int, y):
    """``T_n(y)`` in trigonometric form; ``y`` must lie in ``[-1, 1]``."""
    y = np.clip(y, -1.0, 1.0)
    return np.cos(n * np.arccos(y))


def eval_jfp(basis: JfpBasis, n: int, x):
    """Evaluate ``Q_n^{alpha,beta}(x)``."""
    if n < 0:
        raise DomainError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any((x < -1) | (x > 1)):
        raise DomainError("x must lie in [-1, 1]")
    out = basis.weight(x) * _chebyshev_t(n, basis.to_y(x))
    return out if out.ndim else float(out)


def clenshaw(coeffs: np.ndarray, y):
    """Sum a Chebyshev series at ``y`` by Clenshaw's recurrence."""
    y = np.asarray(y, dtype=float)
    coeffs = np.asarray(coeffs)
    dtype = np.result_type(coeffs.dtype, float)
    b1 = np.zeros(y.shape, dtype=dtype)
    b2 = np.zeros(y.shape, dtype=dtype)
    if coeffs.size == 0:
        return b1
    y2 = 2 * y
    for c in coeffs[:0:-1]:
        b1, b2 = c + y2 * b1 - b2, b1
    return coeffs[0] + y * b1 - b2


def eval_series(u: CoeffVec, xs):
    """Evaluate a coefficient vector at the points ``xs``."""
    xs = np.asarray(xs, dtype=float)
    if np.any((xs < -1) | (xs > 1)):
        raise DomainError("x must lie in [-1, 1]")
    w = u.basis.weight(xs)
    return w * clenshaw(u.coeffs, u.basis.to_y(xs))


def chebyshev_points(n: int) -> np.ndarray:
    """Second-kind Chebyshev points ``cos(j*pi/(n-1))``, ``j = 0..n-1``."""
    if n < 2:
        raise DomainError("need at least two points")
    j = np.arange(n)
    # sin form is exactly antisymmetric about the midpoint
    return np.sin(np.pi * (n - 1 - 2 * j) / (2 * (n - 1)))


def mapped_grid(basis: JfpBasis, n: int) -> np.ndarray:
    """Chebyshev points pulled back to ``x`` through the ``y`` map.

    Ordered like the Chebyshev points, i.e. from ``x = 1`` down to ``x = -1``.
    """
    x = chebyshev_points(n)
    t = 2 * ((1 + x) / 2) ** (1 / basis.beta) - 1
    t[0], t[-1] = 1.0, -1.0
    return t


def _dct1_direct(v: np.ndarray) -> np.ndarray:
    n = v.size
    j = np.arange(n)
    cos = np.cos(np.pi * np.outer(j, j) / (n - 1))
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return 2 * cos @ (w * v)


def _dct1(v: np.ndarray, fast: bool) -> np.ndarray:
    if not fast:
        return _dct1_direct(v)
    if np.iscomplexobj(v):
        return scipy.fft.dct(v.real, type=1) + 1j * scipy.fft.dct(v.imag, type=1)
    return scipy.fft.dct(v, type=1)


def values_to_coeffs(basis: JfpBasis, values, *, fast: bool = True) -> CoeffVec:
    """Chebyshev coefficients (in ``y``) from samples on :func:`mapped_grid`.

    ``values`` are samples of ``u(x) / w(x)**alpha``; for ``alpha != 0`` the
    caller divides out the weight and supplies the limit at ``x = -1``.
    """
    v = np.asarray(values)
    if v.ndim != 1 or v.size < 2:
        raise DomainError("need at least two samples")
    if v.dtype.kind not in "fc":
        v = v.astype(float)
    n = v.size
    c = _dct1(v, fast) / (n - 1)
    c[0] /= 2
    c[-1] /= 2
    return CoeffVec(basis, c)


def coeffs_to_values(u: CoeffVec, n: int, *, fast: bool = True) -> np.ndarray:
    """Weight-free values of ``u`` on the ``n``-point mapped grid."""
    if n < len(u):
        raise DomainError(f"grid of {n} points cannot hold {len(u)} coefficients")
    if n < 2:
        raise DomainError("need at least two points")
    c = u.padded(n)
    c[0] *= 2
    c[-1] *= 2
    return _dct1(c, fast) / 2
