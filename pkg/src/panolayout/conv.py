"""Standard and equirectangular 2D convolution with analytic backward passes.

Tensors are float64 numpy arrays in ``(C, H, W)`` layout. Convolution is
cross-correlation (no kernel flip). Forward and backward loops run per output
row and reduce row partials in a fixed order, so splitting the rows across
workers gives bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels
from .offsets import KernelSpec, OffsetField

PADDING_MODES = ("zero", "valid", "wrap")


@dataclass
class ConvLayer:
    """Weights ``[out, in, r, r]`` and bias ``[out]``.

    ``spec`` is the spherical kernel for equirectangular layers and None for
    standard ones.
    """

    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    spec: KernelSpec | None = None

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 4 or self.weight.shape[2] != self.weight.shape[3]:
            raise ValueError(f"weight must be [out, in, r, r], got {self.weight.shape}")
        if self.bias.shape != (self.weight.shape[0],):
            raise ValueError(f"bias must be [{self.weight.shape[0]}], got {self.bias.shape}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.spec is not None and self.spec.resolution != self.weight.shape[2]:
            raise ValueError("kernel resolution does not match weight shape")

    @property
    def resolution(self) -> int:
        return self.weight.shape[2]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @classmethod
    def init(cls, rng: np.random.Generator, in_ch: int, out_ch: int, resolution: int = 3,
             stride: int = 1, spec: KernelSpec | None = None) -> "ConvLayer":
        """Glorot-uniform weights, zero bias."""
        fan_in = in_ch * resolution * resolution
        fan_out = out_ch * resolution * resolution
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(out_ch, in_ch, resolution, resolution))
        return cls(w, np.zeros(out_ch), stride, spec)


def _check_input(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected (C, H, W) input, got shape {x.shape}")
    if x.shape[0] != layer.in_channels:
        raise ValueError(f"input has {x.shape[0]} channels, layer expects {layer.in_channels}")
    return x


def _rows(rows: slice | None, n: int) -> range:
    return range(n) if rows is None else range(*rows.indices(n))


# --- standard convolution -------------------------------------------------

def _pad(x: np.ndarray, half: int, padding: str) -> np.ndarray:
    if padding == "valid" or half == 0:
        return x
    if padding == "zero":
        return np.pad(x, ((0, 0), (half, half), (half, half)))
    if padding == "wrap":
        x = np.pad(x, ((0, 0), (0, 0), (half, half)), mode="wrap")
        return np.pad(x, ((0, 0), (half, half), (0, 0)))
    raise ValueError(f"unknown padding {padding!r}; choose from {PADDING_MODES}")


def _windows(xp: np.ndarray, r: int, stride: int) -> np.ndarray:
    win = np.lib.stride_tricks.sliding_window_view(xp, (r, r), axis=(1, 2))
    return win[:, ::stride, ::stride]  # (C, Ho, Wo, r, r)


def conv_standard(x, layer: ConvLayer, padding: str = "zero", rows: slice | None = None) -> np.ndarray:
    """Cross-correlation of ``x`` with ``layer``; "zero" padding keeps H, W at stride 1."""
    x = _check_input(x, layer)
    r = layer.resolution
    xp = _pad(x, (r - 1) // 2, padding)
    if xp.shape[1] < r or xp.shape[2] < r:
        raise ValueError("input smaller than the kernel")
    win = _windows(xp, r, layer.stride)
    _, ho, wo = win.shape[:3]
    wmat = layer.weight.reshape(layer.out_channels, -1)
    out_rows = _rows(rows, ho)
    out = np.empty((layer.out_channels, len(out_rows), wo))
    for i, oy in enumerate(out_rows):
        cols = win[:, oy].transpose(0, 2, 3, 1).reshape(-1, wo)
        out[:, i] = wmat @ cols + layer.bias[:, None]
    return out


def conv_standard_backward(x, layer: ConvLayer, grad_out: np.ndarray, padding: str = "zero"):
    """Gradients ``(d input, d weight, d bias)`` of ``sum(grad_out * conv_standard(x))``."""
    x = _check_input(x, layer)
    r, s = layer.resolution, layer.stride
    half = (r - 1) // 2
    xp = _pad(x, half, padding)
    win = _windows(xp, r, s)
    n_in, ho, wo = win.shape[:3]
    if grad_out.shape != (layer.out_channels, ho, wo):
        raise ValueError(f"grad_out shape {grad_out.shape} != {(layer.out_channels, ho, wo)}")
    wmat = layer.weight.reshape(layer.out_channels, -1)
    gw_rows = np.empty((ho,) + wmat.shape)
    gxp = np.zeros_like(xp)
    for oy in range(ho):
        cols = win[:, oy].transpose(0, 2, 3, 1).reshape(-1, wo)
        g = grad_out[:, oy]
        gw_rows[oy] = g @ cols.T
        gcols = (wmat.T @ g).reshape(n_in, r, r, wo)
        for a in range(r):
            y = oy * s + a
            for b in range(r):
                gxp[:, y, b: b + (wo - 1) * s + 1: s] += gcols[:, a, b]
    gw = _ordered_sum(gw_rows).reshape(layer.weight.shape)
    gb = grad_out.sum(axis=(1, 2))
    return _unpad(gxp, half, padding, x.shape), gw, gb


def _unpad(gxp: np.ndarray, half: int, padding: str, shape) -> np.ndarray:
    if padding == "valid" or half == 0:
        return gxp
    if padding == "zero":
        return gxp[:, half:-half, half:-half].copy()
    gx = gxp[:, half:-half, half:-half].copy()
    width = shape[2]
    # fold the wrapped margins back onto the columns they were copied from
    gx[:, :, width - half:] += gxp[:, half:-half, :half]
    gx[:, :, :half] += gxp[:, half:-half, -half:]
    return gx


def _ordered_sum(parts: np.ndarray) -> np.ndarray:
    total = np.zeros(parts.shape[1:])
    for p in parts:
        total += p
    return total


# --- equirectangular convolution -----------------------------------------

@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """Integer source columns/rows and bilinear weights per (output row, kernel element)."""

    base_u: np.ndarray   # (Ho, K) column offset of the left neighbour relative to the center
    row0: np.ndarray     # (Ho, K) upper source row
    row1: np.ndarray     # (Ho, K) lower source row
    weights: np.ndarray  # (Ho, K, 4) weights for (r0,c0), (r0,c1), (r1,c0), (r1,c1)
    out_shape: tuple[int, int]
    clamped: bool


@lru_cache(maxsize=64)
def sampling_plan(field: OffsetField, stride: int = 1) -> SamplingPlan:
    height, width = field.geometry.height, field.geometry.width
    centers = np.arange(0, height, stride)
    du = field.relative_u[centers]
    v = field.rows[centers, :, 1]
    base = np.floor(du)
    fu = du - base
    vi = np.floor(v)
    fv = v - vi
    clamped = bool(np.any(v > height - 1) or np.any(v < 0))
    row0 = np.clip(vi, 0, height - 1).astype(np.intp)
    row1 = np.clip(vi + 1, 0, height - 1).astype(np.intp)
    wts = np.stack([(1 - fv) * (1 - fu), (1 - fv) * fu, fv * (1 - fu), fv * fu], axis=-1)
    for a in (base, row0, row1, wts):
        a.setflags(write=False)
    out_shape = (len(centers), -(-width // stride))
    return SamplingPlan(np.ascontiguousarray(base.astype(np.intp)), row0, row1,
                        np.ascontiguousarray(wts), out_shape, clamped)


def _check_field(x: np.ndarray, layer: ConvLayer, field: OffsetField):
    if x.shape[1:] != field.geometry.shape:
        raise ValueError(f"input spatial shape {x.shape[1:]} does not match offset field {field.geometry.shape}")
    if field.spec.resolution != layer.resolution:
        raise ValueError("offset field resolution does not match layer kernel")


def equi_columns(x: np.ndarray, field: OffsetField, stride: int = 1, rows: slice | None = None) -> np.ndarray:
    """Bilinear samples for every kernel element, shape ``(Ho, C, K, Wo)``."""
    plan = sampling_plan(field, stride)
    sel = slice(None) if rows is None else rows
    return kernels.equi_gather(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(plan.base_u[sel]), np.ascontiguousarray(plan.row0[sel]),
        np.ascontiguousarray(plan.row1[sel]), np.ascontiguousarray(plan.weights[sel]),
        stride, plan.out_shape[1],
    )


def conv_equi(x, layer: ConvLayer, field: OffsetField, rows: slice | None = None,
              cols: np.ndarray | None = None) -> np.ndarray:
    """Equirectangular convolution: weighted sum of ``r*r`` bilinear samples per output pixel.

    Columns always wrap around the seam and no padding is ever applied.
    ``rows`` restricts the computation to a slice of output rows; ``cols``
    passes in a precomputed :func:`equi_columns` result for those rows.
    """
    x = _check_input(x, layer)
    _check_field(x, layer, field)
    if cols is None:
        cols = equi_columns(x, field, layer.stride, rows)
    ho, n_in, k, wo = cols.shape
    wmat = layer.weight.reshape(layer.out_channels, -1)
    # one (out, in*k) x (in*k, wo) product per output row
    out = np.matmul(wmat, cols.reshape(ho, n_in * k, wo)) + layer.bias[None, :, None]
    return np.ascontiguousarray(out.transpose(1, 0, 2))


def conv_equi_backward(x, layer: ConvLayer, field: OffsetField, grad_out: np.ndarray,
                       cols: np.ndarray | None = None):
    """Gradients ``(d input, d weight, d bias)`` of ``sum(grad_out * conv_equi(x))``."""
    x = _check_input(x, layer)
    _check_field(x, layer, field)
    plan = sampling_plan(field, layer.stride)
    if cols is None:
        cols = equi_columns(x, field, layer.stride)
    ho, n_in, k, wo = cols.shape
    if grad_out.shape != (layer.out_channels, ho, wo):
        raise ValueError(f"grad_out shape {grad_out.shape} != {(layer.out_channels, ho, wo)}")
    wmat = layer.weight.reshape(layer.out_channels, -1)
    g = np.ascontiguousarray(grad_out.transpose(1, 0, 2))  # (Ho, out, Wo)
    flat = cols.reshape(ho, n_in * k, wo)
    gw_rows = np.matmul(g, flat.transpose(0, 2, 1))
    gcols = np.matmul(wmat.T, g).reshape(ho, n_in, k, wo)
    gx = kernels.equi_scatter(gcols, plan.base_u, plan.row0, plan.row1, plan.weights,
                              layer.stride, x.shape[1], x.shape[2])
    gw = _ordered_sum(gw_rows).reshape(layer.weight.shape)
    gb = grad_out.sum(axis=(1, 2))
    return gx, gw, gb


# --- pointwise helpers ----------------------------------------------------

def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(x, grad):
    return grad * (x > 0)


def sigmoid(x):
    # split by sign so neither branch overflows
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def upsample_nearest(x: np.ndarray, factor: int) -> np.ndarray:
    return x.repeat(factor, axis=-2).repeat(factor, axis=-1)


def upsample_nearest_backward(grad: np.ndarray, factor: int) -> np.ndarray:
    c, h, w = grad.shape
    return grad.reshape(c, h // factor, factor, w // factor, factor).sum(axis=(2, 4))
