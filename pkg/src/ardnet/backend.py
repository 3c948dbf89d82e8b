"""Selects between the numba-compiled kernels and their plain twins.

The hot loops in ``_kernels`` exist in two builds: one passed through
``numba.njit`` and one left as ordinary Python/numpy. The environment
variable ``ARDNET_BACKEND`` picks the build at import time (``numba`` or
``numpy``); ``set_backend``/``use_backend`` switch at runtime, which the
test suite and the benchmark rely on. Default is numba whenever it imports.
"""
from __future__ import annotations

import os
from contextlib import contextmanager

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

_VALID = ("numba", "numpy")


def _initial() -> str:
    env = os.environ.get("ARDNET_BACKEND", "").strip().lower()
    if env and env not in _VALID:
        raise ValueError(f"ARDNET_BACKEND must be one of {_VALID}, got {env!r}")
    if env == "numba" and not HAS_NUMBA:
        raise ValueError("ARDNET_BACKEND=numba but numba is not importable")
    if env:
        return env
    return "numba" if HAS_NUMBA else "numpy"


_active = _initial()


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    _active = name


@contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
