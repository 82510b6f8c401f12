"""Banded storage, almost-banded and lower-banded solvers, and Arnoldi.

The solvers here are generic; the specialised almost-banded solve used for
every column of the operator lives in the compiled kernels.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from fracspec.errors import DomainError, NonConvergenceError, SingularityError

logger = logging.getLogger(__name__)

__all__ = [
    "AdaptiveSolution",
    "BandedMatrix",
    "LowerBandedSystem",
    "adaptive_qr_solve",
    "largest_eigenpairs",
    "solve_almost_banded",
]


class BandedMatrix:
    """Matrix with bandwidths ``(lower, upper)`` in diagonal-major storage.

    ``data[upper + i - j, j]`` holds ``A[i, j]``, the layout LAPACK's banded
    routines use.
    """

    def __init__(self, data, shape: tuple[int, int], lower: int, upper: int):
        data = np.asarray(data)
        if data.shape != (lower + upper + 1, shape[1]):
            raise DomainError(f"band storage has shape {data.shape}, expected {(lower + upper + 1, shape[1])}")
        self.data = data
        self.shape = (int(shape[0]), int(shape[1]))
        self.lower = int(lower)
        self.upper = int(upper)

    @property
    def bandwidths(self) -> tuple[int, int]:
        return self.lower, self.upper

    @property
    def dtype(self):
        return self.data.dtype

    @classmethod
    def from_dense(cls, a, lower: int, upper: int) -> BandedMatrix:
        a = np.asarray(a)
        m, n = a.shape
        data = np.zeros((lower + upper + 1, n), dtype=a.dtype)
        for d in range(-lower, upper + 1):
            diag = np.diagonal(a, offset=d)
            # superdiagonal d starts at column d, subdiagonal at column 0
            c0 = max(d, 0)
            data[upper - d, c0 : c0 + diag.size] = diag
        return cls(data, (m, n), lower, upper)

    @classmethod
    def from_diagonals(cls, diagonals: dict[int, np.ndarray], shape: tuple[int, int]) -> BandedMatrix:
        """Build from ``{offset: values}`` with values listed by column for
        superdiagonals and by row for subdiagonals (as :func:`numpy.diagonal`)."""
        lower = max([-d for d in diagonals if d < 0], default=0)
        upper = max([d for d in diagonals if d > 0], default=0)
        dtype = np.result_type(*[np.asarray(v) for v in diagonals.values()], float)
        data = np.zeros((lower + upper + 1, shape[1]), dtype=dtype)
        for d, vals in diagonals.items():
            vals = np.asarray(vals)
            c0 = max(d, 0)
            length = min(shape[0] - max(-d, 0), shape[1] - c0)
            data[upper - d, c0 : c0 + length] = vals[:length]
        return cls(data, shape, lower, upper)

    def to_dense(self) -> np.ndarray:
        m, n = self.shape
        a = np.zeros((m, n), dtype=self.data.dtype)
        for d in range(-self.lower, self.upper + 1):
            c0 = max(d, 0)
            r0 = max(-d, 0)
            length = min(m - r0, n - c0)
            if length > 0:
                idx = np.arange(length)
                a[r0 + idx, c0 + idx] = self.data[self.upper - d, c0 : c0 + length]
        return a

    def __getitem__(self, ij):
        i, j = ij
        if not (0 <= i < self.shape[0] and 0 <= j < self.shape[1]):
            raise IndexError(ij)
        if i - j > self.lower or j - i > self.upper:
            return self.data.dtype.type(0)
        return self.data[self.upper + i - j, j]

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x)
        m, n = self.shape
        if x.shape[0] != n:
            raise DomainError("dimension mismatch")
        y = np.zeros(m, dtype=np.result_type(self.data, x))
        for d in range(-self.lower, self.upper + 1):
            c0 = max(d, 0)
            r0 = max(-d, 0)
            length = min(m - r0, n - c0)
            if length > 0:
                y[r0 : r0 + length] += self.data[self.upper - d, c0 : c0 + length] * x[c0 : c0 + length]
        return y

    __matmul__ = matvec

    def __repr__(self) -> str:
        return f"BandedMatrix(shape={self.shape}, bandwidths={self.bandwidths})"


def _householder(x: np.ndarray):
    """Reflector ``I - tau v v^H`` mapping ``x`` onto a multiple of ``e_0``."""
    sigma = np.linalg.norm(x[1:])
    if sigma == 0.0:
        return None, 0.0, x[0]
    x0 = x[0]
    norm = math.hypot(abs(x0), sigma)
    phase = x0 / abs(x0) if x0 != 0 else 1.0
    alpha = -phase * norm
    v = x.copy()
    v[0] = x0 - alpha
    tau = 2.0 / np.vdot(v, v).real
    return v, tau, alpha


def solve_almost_banded(top_rows, band: BandedMatrix, rhs) -> np.ndarray:
    """Solve the square system whose first rows are dense and the rest banded.

    The system matrix is ``[top_rows; band]``. It is reduced to upper
    triangular form by Givens rotations that only touch the dense rows and the
    ``lower + len(top_rows)`` subdiagonals, then back-substituted.
    """
    top = np.atleast_2d(np.asarray(top_rows)) if len(top_rows) else np.zeros((0, band.shape[1]))
    a = np.vstack([top, band.to_dense()]).astype(np.result_type(top, band.dtype, np.asarray(rhs), float))
    n = a.shape[1]
    if a.shape[0] != n:
        raise DomainError(f"system is {a.shape[0]} x {n}, not square")
    b = np.array(rhs, dtype=a.dtype)
    scale = max(np.abs(a).max(initial=0.0), 1e-300)
    reach = band.lower + top.shape[0]
    for j in range(n):
        for i in range(min(n - 1, j + reach), j, -1):
            if a[i, j] == 0:
                continue
            g, r = _givens(a[i - 1, j], a[i, j])
            rows = a[[i - 1, i], j:]
            a[[i - 1, i], j:] = g @ rows
            b[[i - 1, i]] = g @ b[[i - 1, i]]
            a[i, j] = 0
        if abs(a[j, j]) <= 1e-14 * scale:
            raise SingularityError(f"zero pivot in column {j}")
    return sla.solve_triangular(a, b)


def _givens(f, g):
    """Unitary 2x2 ``G`` with ``G @ (f, g) = (r, 0)`` and real cosine."""
    if g == 0:
        return np.eye(2, dtype=np.result_type(f, g)), f
    if f == 0:
        c = 0.0
        s = np.conj(g) / abs(g)
        r = abs(g)
    else:
        r_abs = math.hypot(abs(f), abs(g))
        c = abs(f) / r_abs
        phase = f / abs(f)
        s = phase * np.conj(g) / r_abs
        r = phase * r_abs
    return np.array([[c, s], [-np.conj(s), c]]), r


@dataclass
class LowerBandedSystem:
    """An infinite linear system streamed column by column.

    Column ``j`` (including any dense functional rows at the top) has
    nonzeros only in rows ``0 .. j + lower``. ``block(j0, j1)`` returns rows
    ``0 .. j1 - 1 + lower`` of columns ``j0 .. j1 - 1`` as a dense array.
    """

    block: Callable[[int, int], np.ndarray]
    rhs: np.ndarray
    lower: int
    dtype: type = float
    n_top: int = 0
    #: truncated operator apply (dense), for independent residual checks
    dense: Callable[[int, int], np.ndarray] | None = None

    @classmethod
    def from_dense(cls, a, rhs, lower: int | None = None) -> LowerBandedSystem:
        """Wrap a finite matrix, padding it with the identity beyond its edge."""
        a = np.asarray(a)
        n = a.shape[1]
        if lower is None:
            rows, cols = np.nonzero(a)
            lower = int(max(np.max(rows - cols, initial=0), 0))
        dtype = np.result_type(a, np.asarray(rhs), float)

        def dense(nr, nc):
            out = np.zeros((nr, nc), dtype=dtype)
            r, c = min(nr, a.shape[0]), min(nc, n)
            out[:r, :c] = a[:r, :c]
            for k in range(n, min(nr, nc)):
                out[k, k] = 1.0
            return out

        def block(j0, j1):
            return dense(j1 + lower, j1)[:, j0:j1]

        return cls(block, np.asarray(rhs, dtype=dtype), lower, dtype, 0, dense)


@dataclass
class AdaptiveSolution:
    coeffs: np.ndarray
    n_used: int
    n_processed: int
    residual_history: list[tuple[int, float]] = field(default_factory=list)
    checkpoints: list[tuple[int, np.ndarray]] = field(default_factory=list)


def adaptive_qr_solve(
    system: LowerBandedSystem,
    tol: float = 1e-13,
    n_max: int = 4096,
    *,
    n_min: int = 0,
    block: int = 64,
    keep_checkpoints: bool = False,
    chop: bool = True,
    extra_blocks: int = 0,
) -> AdaptiveSolution:
    """Solve a lower-banded infinite system by a growing QR factorisation.

    Columns are taken ``block`` at a time. Each column is reduced by one
    Householder reflector acting on ``lower + 1`` rows, so the factorisation
    of the leading columns never changes when more columns arrive. After each
    block, the residual of the least squares problem on the current
    truncation is the norm of the rotated right-hand side below the
    triangular part. The solve stops once that residual is below ``tol``
    (relative to the right-hand side) and the trailing ``max(8, N/16)``
    coefficients are below ``tol`` times the largest one.

    ``extra_blocks`` further blocks are factored after the stopping test
    first passes (the result is taken from the last one); useful for
    watching the self-convergence plateau.

    With ``chop`` the returned coefficients are cut after the last entry
    exceeding ``tol`` times the largest one; ``n_used`` is that length.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if n_max < 1:
        raise DomainError("n_max must be positive")
    m = int(system.lower)
    dtype = np.result_type(system.dtype, np.asarray(system.rhs).dtype, float)
    rhs0 = np.asarray(system.rhs, dtype=dtype)
    bnorm = np.linalg.norm(rhs0)
    if bnorm == 0:
        bnorm = 1.0

    cap = max(2 * block, 1)
    r_fac = np.zeros((cap, cap), dtype=dtype)
    brot = np.zeros(cap + m + 1, dtype=dtype)
    brot[: rhs0.size] = rhs0[: brot.size]
    refl_v = np.zeros((cap, m + 1), dtype=dtype)
    refl_tau = np.zeros(cap)

    history: list[tuple[int, float]] = []
    checkpoints: list[tuple[int, np.ndarray]] = []
    n_done = 0
    x = np.zeros(0, dtype=dtype)
    stop_at = None

    def ensure(size):
        nonlocal r_fac, brot, refl_v, refl_tau, cap
        if size <= cap:
            return
        new = max(size, 2 * cap)
        r2 = np.zeros((new, new), dtype=dtype)
        r2[:cap, :cap] = r_fac
        r_fac = r2
        b2 = np.zeros(new + m + 1, dtype=dtype)
        b2[: brot.size] = brot
        if rhs0.size > brot.size:
            b2[brot.size : min(rhs0.size, b2.size)] = rhs0[brot.size : b2.size]
        brot = b2
        v2 = np.zeros((new, m + 1), dtype=dtype)
        v2[:cap] = refl_v
        refl_v = v2
        t2 = np.zeros(new)
        t2[:cap] = refl_tau
        refl_tau = t2
        cap = new

    while True:
        j0 = n_done
        j1 = min(j0 + block, n_max)
        ensure(j1)
        blk = np.array(system.block(j0, j1), dtype=dtype)
        rows = j1 + m
        if blk.shape[0] < rows:
            blk = np.vstack([blk, np.zeros((rows - blk.shape[0], j1 - j0), dtype=dtype)])
        blk = blk[:rows]
        # earlier reflectors, in order
        for i in range(j0):
            tau = refl_tau[i]
            if tau == 0.0:
                continue
            v = refl_v[i]
            seg = blk[i : i + m + 1]
            seg -= tau * np.outer(v, v.conj() @ seg)
        for j in range(j0, j1):
            c = j - j0
            xcol = blk[j : j + m + 1, c]
            v, tau, alpha = _householder(xcol)
            if v is not None:
                seg = blk[j : j + m + 1, c:]
                seg -= tau * np.outer(v, v.conj() @ seg)
                bseg = brot[j : j + m + 1]
                bseg -= tau * v * np.vdot(v, bseg)
                refl_v[j] = v
                refl_tau[j] = tau
            else:
                refl_tau[j] = 0.0
            blk[j + 1 : j + m + 1, c] = 0
        r_fac[:j1, j0:j1] = blk[:j1]
        n_done = j1

        tail = np.linalg.norm(brot[n_done:]) if brot.size > n_done else 0.0
        if rhs0.size > brot.size:
            tail = math.hypot(tail, np.linalg.norm(rhs0[brot.size :]))
        res = tail / bnorm
        history.append((n_done, float(res)))

        need_x = keep_checkpoints or (res < tol and n_done >= n_min) or n_done >= n_max or stop_at is not None
        if need_x:
            diag = np.abs(np.diagonal(r_fac[:n_done, :n_done]))
            if np.any(diag == 0):
                raise SingularityError(f"zero pivot in the first {n_done} columns")
            x = sla.solve_triangular(r_fac[:n_done, :n_done], brot[:n_done])
            if keep_checkpoints:
                checkpoints.append((n_done, x.copy()))
        if res < tol and n_done >= n_min:
            xmax = np.abs(x).max(initial=0.0)
            ntail = max(8, n_done // 16)
            if stop_at is None and np.abs(x[-ntail:]).max(initial=0.0) <= tol * xmax:
                stop_at = min(n_done + extra_blocks * block, n_max)
        if stop_at is not None and n_done >= stop_at:
            break
        if n_done >= n_max:
            if n_min >= n_max or stop_at is not None:
                break
            raise NonConvergenceError(
                f"no convergence within {n_max} columns (residual {res:.3g})",
                history=history,
                partial=x,
            )

    xmax = np.abs(x).max(initial=0.0)
    if chop and xmax > 0:
        big = np.nonzero(np.abs(x) > tol * xmax)[0]
        n_used = int(big[-1]) + 1 if big.size else 1
    else:
        n_used = n_done
    logger.debug("adaptive QR: %d columns processed, %d kept, residual %.3g", n_done, n_used, history[-1][1])
    return AdaptiveSolution(x[:n_used].copy(), n_used, n_done, history, checkpoints)


def _default_start(n: int) -> np.ndarray:
    return np.random.default_rng(20240531).standard_normal(n)


def largest_eigenpairs(
    a,
    m: int,
    tol: float = 1e-12,
    *,
    krylov_dim: int | None = None,
    max_restarts: int = 300,
    v0=None,
):
    """Eigenpairs of largest modulus by Arnoldi with Krylov-Schur restarts.

    ``a`` is a square array or a callable ``v -> A v`` (then pass the
    dimension through ``v0``). Returns a list of ``(theta, vector)`` sorted by
    decreasing modulus, each satisfying ``||A v - theta v|| <= tol * ||A||``
    with the norm estimated by the largest Ritz value. For a real ``a``, a
    complex conjugate partner of the last requested value is appended.
    """
    if callable(a):
        matvec = a
        if v0 is None:
            raise DomainError("pass v0 when A is given as a callable")
        n = np.asarray(v0).size
        is_real = True
    else:
        arr = np.asarray(a)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError("A must be square")
        n = arr.shape[0]
        matvec = arr.__matmul__
        is_real = not np.iscomplexobj(arr)
    if not 1 <= m <= n:
        raise DomainError(f"cannot ask for {m} eigenpairs of a {n} x {n} matrix")

    p = krylov_dim or min(n, max(2 * m + 20, 40))
    p = min(max(p, m + 2), n) if n > m + 1 else n
    keep = min(p - 1, m + (p - m) // 2) if p > m else m

    v_start = np.asarray(v0 if v0 is not None else _default_start(n), dtype=complex)
    V = np.zeros((n, p + 1), dtype=complex)
    H = np.zeros((p + 1, p), dtype=complex)
    V[:, 0] = v_start / np.linalg.norm(v_start)
    k = 0
    anorm = 0.0
    best = None
    for restart in range(max_restarts + 1):
        p_eff = p
        for j in range(k, p):
            w = np.asarray(matvec(V[:, j]), dtype=complex)
            # classical Gram-Schmidt, done twice
            for _ in range(2):
                hcol = V[:, : j + 1].conj().T @ w
                w = w - V[:, : j + 1] @ hcol
                H[: j + 1, j] += hcol
            beta = np.linalg.norm(w)
            H[j + 1, j] = beta
            anorm = max(anorm, np.linalg.norm(H[: j + 2, : j + 1], 2) if j < 8 else anorm)
            if beta <= 1e-14 * max(anorm, 1e-300):
                H[j + 1, j] = 0.0
                p_eff = j + 1
                break
            V[:, j + 1] = w / beta

        Hs = H[:p_eff, :p_eff]
        theta, Y = np.linalg.eig(Hs)
        order = _modulus_order(theta)
        theta, Y = theta[order], Y[:, order]
        Y = Y / np.linalg.norm(Y, axis=0)
        hnext = abs(H[p_eff, p_eff - 1]) if p_eff < n and p_eff <= p else 0.0
        if p_eff < p:
            hnext = 0.0
        resid = hnext * np.abs(Y[p_eff - 1, :])
        scale = max(abs(theta[0]), 1e-300)
        want = min(m, theta.size)
        if want < theta.size and is_real and abs(theta[want - 1].imag) > 1e-12 * scale:
            if abs(theta[want].imag + theta[want - 1].imag) <= 1e-8 * scale:
                want += 1
        best = (theta, Y, p_eff)
        if np.all(resid[:want] <= tol * scale):
            vecs = V[:, :p_eff] @ Y[:, :want]
            out = []
            for i in range(want):
                v = vecs[:, i] / np.linalg.norm(vecs[:, i])
                out.append((complex(theta[i]), v))
            return out
        if p_eff < p:
            # invariant subspace smaller than requested; nothing more to find
            raise NonConvergenceError("Krylov space became invariant before enough eigenvalues converged")

        # Krylov-Schur restart: keep the Schur vectors of the wanted part
        T, Z, sdim = _sorted_schur(H[:p, :p], keep)
        V[:, :sdim] = V[:, :p] @ Z[:, :sdim]
        V[:, sdim] = V[:, p]
        Hn = np.zeros((p + 1, p), dtype=complex)
        Hn[:sdim, :sdim] = T[:sdim, :sdim]
        Hn[sdim, :sdim] = H[p, p - 1] * Z[p - 1, :sdim]
        H = Hn
        V[:, sdim + 1 :] = 0
        k = sdim

    theta = best[0] if best is not None else np.zeros(0)
    raise NonConvergenceError(
        f"Arnoldi did not converge after {max_restarts} restarts",
        partial=[complex(t) for t in theta[:m]],
    )


def _modulus_order(theta: np.ndarray) -> np.ndarray:
    # decreasing modulus; conjugate partners adjacent with positive imaginary part first
    key = np.round(np.abs(theta), 12)
    return np.lexsort((-theta.imag, -key))


def _sorted_schur(h: np.ndarray, keep: int):
    theta = np.linalg.eigvals(h)
    mods = np.sort(np.abs(theta))[::-1]
    thr = mods[keep - 1] if keep - 1 < mods.size else 0.0
    T, Z, sdim = sla.schur(h, output="complex", sort=lambda z: abs(z) >= thr * (1 - 1e-10))
    return T, Z, sdim
