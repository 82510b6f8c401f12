"""Pure-Python versions of the hot kernels.

Same contracts as the compiled ``_ckernels`` module; used when the extension
is not built or when ``FRACSPEC_BACKEND=python`` is set.
"""

from __future__ import annotations

import math

import numpy as np

from fracspec.errors import ConstructionError

#: Pivot magnitude below which the column system counts as singular.
TINY_PIVOT = 1e-300


def cos_moments(theta: np.ndarray, w: np.ndarray, n0: int, count: int) -> np.ndarray:
    """``out[r] = sum_i w[i] * cos((n0 + r) * theta[i])``."""
    live = w != 0.0
    theta = theta[live]
    w = w[live]
    out = np.empty(count)
    for r in range(count):
        out[r] = np.dot(np.cos((n0 + r) * theta), w)
    return out


def recurse_column(r_prev: np.ndarray, r_cur: np.ndarray, bc: float, n: int):
    """Next column of the recurrence and the smallest pivot met.

    Solves the ``(n+2) x (n+2)`` almost-banded system whose first row is all
    ones (value ``bc``) and whose remaining rows are ``D/(n+1) - C`` with
    right-hand side ``2 C r_cur + (C + D/(n-1)) r_prev``. The dense first row
    is carried through the Givens sweep as two explicit entries plus a
    constant tail.
    """
    size = n + 2
    v1 = np.zeros(size + 2)
    v1[: n + 1] = r_cur
    v0 = np.zeros(size + 2)
    v0[:n] = r_prev
    m = np.arange(n + 1, dtype=float)
    cdiag = np.full(n + 1, 0.5)
    cdiag[0] = 1.0

    def conv(v):
        return cdiag * v[: n + 1] - 0.5 * v[2 : n + 3]

    def diff(v):
        return 0.5 * m * v[: n + 1] + (m + 1) * v[1 : n + 2] + 0.5 * (m + 2) * v[2 : n + 3]

    g = 2 * conv(v1) + conv(v0) + diff(v0) / (n - 1)

    inv = 1.0 / (n + 1)
    a0 = (m * 0.5 * inv - cdiag).tolist()
    a1 = ((m + 1) * inv).tolist()
    a2 = ((m + 2) * 0.5 * inv + 0.5).tolist()
    g = g.tolist()

    diag = [0.0] * size
    e1 = [0.0] * size
    e2 = [0.0] * size
    tail = [0.0] * size
    rhs = [0.0] * size
    p0 = p1 = gam = 1.0
    pb = float(bc)
    min_piv = math.inf
    for j in range(n + 1):
        b0, b1 = a0[j], a1[j]
        b2 = a2[j] if j + 2 < size else 0.0
        rho = math.hypot(p0, b0)
        if rho < TINY_PIVOT:
            raise ConstructionError(f"singular column system at n={n}", index=n)
        c = p0 / rho
        s = b0 / rho
        diag[j] = rho
        e1[j] = c * p1 + s * b1
        e2[j] = c * gam + s * b2
        tail[j] = c * gam
        rhs[j] = c * pb + s * g[j]
        min_piv = min(min_piv, rho)
        p0, p1, gam, pb = -s * p1 + c * b1, -s * gam + c * b2, -s * gam, -s * pb + c * g[j]
    if abs(p0) < TINY_PIVOT:
        raise ConstructionError(f"singular column system at n={n}", index=n)
    min_piv = min(min_piv, abs(p0))

    x = [0.0] * (size + 2)
    x[size - 1] = pb / p0
    suffix = 0.0  # sum of x[j+3:]
    for j in range(size - 2, -1, -1):
        x[j] = (rhs[j] - e1[j] * x[j + 1] - e2[j] * x[j + 2] - tail[j] * suffix) / diag[j]
        suffix += x[j + 2]
    return np.array(x[:size]), min_piv


def mul_cheb(c: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Chebyshev product ``(sum c_j T_j)(sum v_l T_l)`` as a coefficient vector."""
    k = c.size - 1
    n = v.size
    dtype = np.result_type(c, v)
    out = np.zeros(n + k, dtype=dtype)
    if n == 0 or k < 0:
        return out
    out += 0.5 * np.convolve(c, v)
    for j in range(k + 1):
        cj = 0.5 * c[j]
        # T_{|j-l|} part: l >= j lands on l - j, l < j lands on j - l
        out[: n - j if n > j else 0] += cj * v[j:]
        lo = min(j, n)
        if lo:
            out[j - lo + 1 : j + 1][::-1] += cj * v[:lo]
    return out
