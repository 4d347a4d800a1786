"""Backend selection for the hot loops.

The compiled extension ``apcsim._kernels`` is used when importable; otherwise,
or when the environment variable ``APCSIM_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the numpy implementation in ``apcsim._fallback`` is used.
"""
from __future__ import annotations

import os
from types import ModuleType
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import _fallback

if TYPE_CHECKING:
    from .convex import ConvexBody

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

_force_python = os.environ.get("APCSIM_PURE_PYTHON", "") not in ("", "0")

BACKEND = "compiled" if (_compiled is not None and not _force_python) else "python"
_impl: ModuleType = _compiled if BACKEND == "compiled" else _fallback  # type: ignore[assignment]


def compiled_available() -> bool:
    return _compiled is not None


def backend(name: str | None = None) -> ModuleType:
    """Kernel module by name (``"compiled"`` or ``"python"``); default is the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def pack_bodies(bodies: Sequence["ConvexBody"]) -> tuple[np.ndarray, np.ndarray] | None:
    """Kind codes and a padded parameter matrix, or None if some body is unsupported."""
    packed = [b.pack() for b in bodies]
    if any(p is None for p in packed):
        return None
    width = max(p[1].size for p in packed)  # type: ignore[index]
    kinds = np.array([p[0] for p in packed], dtype=np.int32)  # type: ignore[index]
    params = np.zeros((len(packed), width))
    for i, (_, row) in enumerate(packed):  # type: ignore[misc]
        params[i, :row.size] = row
    return kinds, params


def cyclic_projection_batch(kinds, params, X0, tol, max_sweeps, impl: ModuleType | None = None):
    impl = impl or _impl
    return impl.cyclic_projection_batch(kinds, params, np.ascontiguousarray(X0, dtype=float),
                                        float(tol), int(max_sweeps))


def grid_feasible_mask(kinds, params, xs, ys, tol, impl: ModuleType | None = None):
    impl = impl or _impl
    return impl.grid_feasible_mask(kinds, params, np.ascontiguousarray(xs, dtype=float),
                                   np.ascontiguousarray(ys, dtype=float), float(tol))


def blend_consensus_final(kinds, params, weights, alphas, X0, impl: ModuleType | None = None):
    impl = impl or _impl
    return impl.blend_consensus_final(kinds, params,
                                      np.ascontiguousarray(weights, dtype=float),
                                      np.ascontiguousarray(alphas, dtype=float),
                                      np.ascontiguousarray(X0, dtype=float))


def dykstra_batch(A, b, X0, tol, eps, max_sweeps, impl: ModuleType | None = None):
    impl = impl or _impl
    return impl.dykstra_batch(np.ascontiguousarray(A, dtype=float),
                              np.ascontiguousarray(b, dtype=float),
                              np.ascontiguousarray(X0, dtype=float),
                              float(tol), float(eps), int(max_sweeps))
