"""Bilinear sampling of ``(C, H, W)`` arrays at continuous pixel positions."""

from __future__ import annotations

import numpy as np

from ._backend import kernels


def bilinear_sample(t: np.ndarray, u, v, horizontal_wrap: bool = True):
    """Sample every channel of ``t`` at ``(u, v)``.

    ``u`` and ``v`` may be scalars or arrays of the same shape; the result has
    shape ``(C,) + u.shape``. With ``horizontal_wrap`` the column index wraps
    modulo W; without it u must lie in [0, W-1]. Rows outside [0, H-1] are
    clamped to the edge row.

    Returns:
        (values, clamped): ``clamped`` is True when any v was out of range.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    if t.ndim == 2:
        t = t[None]
    _, height, width = t.shape
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u, v = np.broadcast_arrays(u, v)
    if not horizontal_wrap and (np.any(u < 0) or np.any(u > width - 1)):
        raise ValueError("u outside [0, W-1] with horizontal wrap disabled")
    clamped = bool(np.any(v < 0) or np.any(v > height - 1))
    flat = kernels.warp_bilinear(t, np.ascontiguousarray(u.ravel()), np.ascontiguousarray(v.ravel()))
    return flat.reshape((t.shape[0],) + u.shape), clamped


def snap(a: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Round values within ``tol`` of an integer to that integer."""
    r = np.round(a)
    return np.where(np.abs(a - r) <= tol, r, a)
