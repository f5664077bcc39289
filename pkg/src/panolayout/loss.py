"""Class-balanced binary cross-entropy for edge/corner probability maps."""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

EPS = 1e-7
MAP_KINDS = ("edge", "corner")


def class_weights(gt: np.ndarray, threshold: float = 0.5) -> tuple[float, float]:
    """``(w1, w0)`` with ``w_t = N / N_t``; GT counts as positive above ``threshold``.

    An empty class gets weight 0 and a warning.
    """
    gt = np.asarray(gt)
    n = gt.size
    n1 = int(np.count_nonzero(gt > threshold))
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        warnings.warn(f"ground truth has an empty class (N1={n1}, N0={n0}); its weight is 0",
                      RuntimeWarning, stacklevel=3)
    w1 = n / n1 if n1 else 0.0
    w0 = n / n0 if n0 else 0.0
    return w1, w0


def weighted_bce(pred: np.ndarray, gt: np.ndarray, eps: float = EPS, soft: bool = True):
    """Summed class-weighted cross-entropy and its gradient w.r.t. ``pred``.

    Args:
        pred: predicted probabilities; clipped to ``[eps, 1 - eps]`` before the logs.
        gt: target map in [0, 1]. With ``soft`` the (blurred) values are used as
            targets directly, otherwise they are binarized at 0.5. Class counts
            for the weights always binarize at 0.5.

    Returns:
        (loss, grad): the gradient is zero where clipping was active.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"prediction shape {pred.shape} != ground truth shape {gt.shape}")
    w1, w0 = class_weights(gt)
    y = gt if soft else (gt > 0.5).astype(np.float64)
    p = np.clip(pred, eps, 1.0 - eps)
    loss = float(np.sum(w1 * y * -np.log(p) + w0 * (1.0 - y) * -np.log1p(-p)))
    grad = -w1 * y / p + w0 * (1.0 - y) / (1.0 - p)
    grad = np.where((pred < eps) | (pred > 1.0 - eps), 0.0, grad)
    return loss, grad


def weighted_bce_logits(logits: np.ndarray, gt: np.ndarray, eps: float = EPS, soft: bool = True):
    """:func:`weighted_bce` on ``sigmoid(logits)``, with the gradient w.r.t. the logits."""
    from .conv import sigmoid

    p = sigmoid(np.asarray(logits, dtype=np.float64))
    loss, gp = weighted_bce(p, gt, eps, soft)
    return loss, gp * p * (1.0 - p)


def multi_scale_loss(preds: Sequence[dict], gts: Sequence[dict], eps: float = EPS, soft: bool = True):
    """Sum of :func:`weighted_bce` over every resolution and both map kinds.

    ``preds[k]`` and ``gts[k]`` map ``"edge"`` and ``"corner"`` to arrays of the
    same shape. Returns ``(total, grads)`` with ``grads`` shaped like ``preds``.
    """
    if len(preds) != len(gts):
        raise ValueError(f"{len(preds)} prediction scales but {len(gts)} ground-truth scales")
    total = 0.0
    grads = []
    for k, (pk, gk) in enumerate(zip(preds, gts)):
        scale_grads = {}
        for m in MAP_KINDS:
            if pk[m].shape != gk[m].shape:
                raise ValueError(f"scale {k} {m} map: {pk[m].shape} vs {gk[m].shape}")
            loss, g = weighted_bce(pk[m], gk[m], eps, soft)
            total += loss
            scale_grads[m] = g
        grads.append(scale_grads)
    return total, grads
