"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``FRACSPEC_BACKEND=python``
forces the pure-Python fallback. :func:`use_backend` switches at run time,
which the tests and the benchmark rely on.
"""

from __future__ import annotations

import contextlib
import os

from fracspec import _pykernels

try:
    from fracspec import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = ["BACKEND", "available_backends", "cos_moments", "mul_cheb", "recurse_column", "use_backend"]

_IMPLS = {"python": _pykernels}
if _ckernels is not None:
    _IMPLS["compiled"] = _ckernels


def available_backends() -> list[str]:
    return sorted(_IMPLS)


def _initial() -> str:
    wanted = os.environ.get("FRACSPEC_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in _IMPLS:
            raise ImportError(f"FRACSPEC_BACKEND={wanted!r} is not available; have {available_backends()}")
        return wanted
    return "compiled" if "compiled" in _IMPLS else "python"


BACKEND = _initial()
_impl = _IMPLS[BACKEND]


def _set(name: str) -> None:
    global BACKEND, _impl
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} is not available; have {available_backends()}")
    BACKEND = name
    _impl = _IMPLS[name]


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch the kernel backend."""
    old = BACKEND
    _set(name)
    try:
        yield
    finally:
        _set(old)


def cos_moments(theta, w, n0, count):
    return _impl.cos_moments(theta, w, n0, count)


def recurse_column(r_prev, r_cur, bc, n):
    return _impl.recurse_column(r_prev, r_cur, bc, n)


def mul_cheb(c, v):
    return _impl.mul_cheb(c, v)
