# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: boundary-value cosine sums and the column recurrence."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, hypot, fabs, INFINITY

from fracspec.errors import ConstructionError

cnp.import_array()

cdef double TINY_PIVOT = 1e-300
# angle-addition steps between exact cos/sin resyncs
cdef int RESYNC = 32


def cos_moments(const double[::1] theta, const double[::1] w, long n0, long count):
    """``out[r] = sum_i w[i] * cos((n0 + r) * theta[i])``."""
    cdef Py_ssize_t m = theta.shape[0]
    out_arr = np.zeros(count)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, r, r0, rend
    cdef double c, s, c1, s1, wi, t, th
    with nogil:
        for i in range(m):
            wi = w[i]
            if wi == 0.0:
                continue
            th = theta[i]
            c1 = cos(th)
            s1 = sin(th)
            # segments start at absolute multiples of RESYNC so that a value
            # does not depend on where the batch starts
            r0 = -(n0 % RESYNC)
            while r0 < count:
                c = cos((n0 + r0) * th)
                s = sin((n0 + r0) * th)
                rend = r0 + RESYNC
                if rend > count:
                    rend = count
                for r in range(r0, rend):
                    if r >= 0:
                        out[r] += wi * c
                    t = c * c1 - s * s1
                    s = s * c1 + c * s1
                    c = t
                r0 = rend
    return out_arr


def recurse_column(const double[::1] r_prev, const double[::1] r_cur, double bc, long n):
    """Next column of the recurrence and the smallest pivot met."""
    cdef Py_ssize_t size = n + 2
    cdef Py_ssize_t j
    cdef double inv = 1.0 / (n + 1)
    cdef double invm = 1.0 / (n - 1)
    x_arr = np.zeros(size + 2)
    cdef double[::1] x = x_arr
    work = np.empty((5, size))
    cdef double[:, ::1] wk = work
    cdef double p0 = 1.0, p1 = 1.0, gam = 1.0, pb = bc
    cdef double b0, b1, b2, rho, c, s, gj, mm, cd, np0, np1
    cdef double v0m, v0m1, v0m2, v1m, v1m2, suffix
    cdef double min_piv = INFINITY
    cdef int bad = 0
    with nogil:
        for j in range(n + 1):
            mm = <double>j
            cd = 1.0 if j == 0 else 0.5
            # right-hand side entry j: 2 C r_cur + (C + D/(n-1)) r_prev
            v1m = r_cur[j]
            v1m2 = r_cur[j + 2] if j + 2 <= n else 0.0
            v0m = r_prev[j] if j < n else 0.0
            v0m1 = r_prev[j + 1] if j + 1 < n else 0.0
            v0m2 = r_prev[j + 2] if j + 2 < n else 0.0
            gj = (2.0 * (cd * v1m - 0.5 * v1m2)
                  + (cd * v0m - 0.5 * v0m2)
                  + (0.5 * mm * v0m + (mm + 1.0) * v0m1 + 0.5 * (mm + 2.0) * v0m2) * invm)
            b0 = mm * 0.5 * inv - cd
            b1 = (mm + 1.0) * inv
            b2 = (mm + 2.0) * 0.5 * inv + 0.5 if j + 2 < size else 0.0
            rho = hypot(p0, b0)
            if rho < TINY_PIVOT:
                bad = 1
                break
            c = p0 / rho
            s = b0 / rho
            wk[0, j] = rho
            wk[1, j] = c * p1 + s * b1
            wk[2, j] = c * gam + s * b2
            wk[3, j] = c * gam
            wk[4, j] = c * pb + s * gj
            if rho < min_piv:
                min_piv = rho
            np0 = -s * p1 + c * b1
            np1 = -s * gam + c * b2
            gam = -s * gam
            pb = -s * pb + c * gj
            p0 = np0
            p1 = np1
        if not bad:
            if fabs(p0) < TINY_PIVOT:
                bad = 1
            else:
                if fabs(p0) < min_piv:
                    min_piv = fabs(p0)
                x[size - 1] = pb / p0
                suffix = 0.0
                j = size - 2
                while j >= 0:
                    x[j] = (wk[4, j] - wk[1, j] * x[j + 1] - wk[2, j] * x[j + 2]
                            - wk[3, j] * suffix) / wk[0, j]
                    suffix += x[j + 2]
                    j -= 1
    if bad:
        raise ConstructionError(f"singular column system at n={n}", index=n)
    return x_arr[:size].copy(), min_piv


def mul_cheb(c, v):
    """Chebyshev product ``(sum c_j T_j)(sum v_l T_l)`` as a coefficient vector."""
    c = np.asarray(c)
    v = np.asarray(v)
    if c.dtype.kind == "c" or v.dtype.kind == "c":
        from fracspec._pykernels import mul_cheb as _py
        return _py(c, v)
    return _mul_cheb_real(np.ascontiguousarray(c, dtype=float),
                          np.ascontiguousarray(v, dtype=float))


cdef _mul_cheb_real(const double[::1] c, const double[::1] v):
    cdef Py_ssize_t k = c.shape[0] - 1
    cdef Py_ssize_t n = v.shape[0]
    out_arr = np.zeros(n + k if n + k > 0 else 0)
    if n == 0 or k < 0:
        return out_arr
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, l, d
    cdef double cj
    with nogil:
        for j in range(k + 1):
            cj = 0.5 * c[j]
            for l in range(n):
                out[j + l] += cj * v[l]
                d = j - l
                if d < 0:
                    d = -d
                out[d] += cj * v[l]
    return out_arr
