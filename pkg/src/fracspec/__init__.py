"""Spectral approximations to fractional integral operators.

Matrices representing the Riemann-Liouville integral of order ``mu`` acting on
series in Chebyshev-based Jacobi fractional polynomials, built column by
column in O(N^2), plus solvers for fractional integral equations, fractional
boundary and initial value problems, and fractional eigenvalue problems.
"""

from fracspec.basis import CoeffVec, JfpBasis, eval_jfp, eval_series, mapped_grid
from fracspec.kernels import BACKEND
from fracspec.opcore import FioOperator, build_fio

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CoeffVec",
    "FioOperator",
    "JfpBasis",
    "build_fio",
    "eval_jfp",
    "eval_series",
    "mapped_grid",
]
