"""Central finite-difference checks for the hand-written backward passes."""

from __future__ import annotations

from typing import Callable

import numpy as np


def numerical_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-5,
                       indices=None) -> np.ndarray:
    """Central differences of scalar ``f`` at ``x`` (only at ``indices`` if given)."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    for i in idx:
        orig = flat[i]
        flat[i] = orig + step
        fp = f(x)
        flat[i] = orig - step
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``max|a - n| / max(max|a|, max|n|)``; 0 when both vanish."""
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / scale)


def gradient_check(f: Callable[[np.ndarray], float], grad: np.ndarray, x: np.ndarray,
                   step: float = 1e-5, indices=None) -> float:
    """Max relative error between ``grad`` (analytic, at ``x``) and central differences of ``f``."""
    num = numerical_gradient(f, x, step, indices)
    if indices is not None:
        sel = np.zeros(np.size(x), dtype=bool)
        sel[list(indices)] = True
        return relative_error(np.asarray(grad).reshape(-1)[sel], num.reshape(-1)[sel])
    return relative_error(np.asarray(grad), num)
