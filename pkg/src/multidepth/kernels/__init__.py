"""Render backend selection.

Two interchangeable implementations of one contract:

- ``numba``: JIT-compiled parallel BVH traversal (default when numba
  imports cleanly).
- ``numpy``: pure-numpy vectorized brute force, no compilation step.

Selection order: explicit ``backend=`` argument, then the
``MULTIDEPTH_BACKEND`` environment variable, then numba if available.
Worker counts come from ``threads=`` arguments or ``MULTIDEPTH_THREADS``.
"""

from __future__ import annotations

import os

BACKENDS = ("numba", "numpy")

_numba_ok: bool | None = None


def _numba_available() -> bool:
    global _numba_ok
    if _numba_ok is None:
        try:
            import numba  # noqa: F401
            _numba_ok = True
        except ImportError:
            _numba_ok = False
    return _numba_ok


def default_backend() -> str:
    env = os.environ.get("MULTIDEPTH_BACKEND", "").strip().lower()
    if env:
        if env not in BACKENDS:
            raise ValueError(
                f"MULTIDEPTH_BACKEND={env!r} is not one of {BACKENDS}")
        return env
    return "numba" if _numba_available() else "numpy"


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    backend = backend.strip().lower()
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} is not one of {BACKENDS}")
    return backend


def get_render_fn(backend: str | None = None):
    """Returns (resolved_name, render_batch callable)."""
    name = resolve_backend(backend)
    if name == "numba":
        from . import numba_backend
        return name, numba_backend.render_batch
    from . import numpy_backend
    return name, numpy_backend.render_batch


def resolve_threads(threads: int | None) -> int:
    """Explicit argument > MULTIDEPTH_THREADS > cpu count."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("MULTIDEPTH_THREADS", "").strip()
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ValueError(
                f"MULTIDEPTH_THREADS={env!r} is not an integer") from exc
        return max(1, value)
    return max(1, os.cpu_count() or 1)
