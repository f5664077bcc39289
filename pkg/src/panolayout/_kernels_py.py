"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def _columns(out_w, stride, base_u, width):
    # (Ho, K, Wo) left and right source columns
    c0 = np.mod(np.arange(out_w)[None, None, :] * stride + base_u[:, :, None], width)
    c1 = c0 + 1
    c1[c1 == width] = 0
    return c0, c1


def equi_gather(x, base_u, row0, row1, wts, stride, out_w):
    _, _, width = x.shape
    c0, c1 = _columns(out_w, stride, base_u, width)
    r0 = np.broadcast_to(row0[:, :, None], c0.shape)
    r1 = np.broadcast_to(row1[:, :, None], c0.shape)
    w = wts[:, :, None, :]
    out = (w[..., 0] * x[:, r0, c0] + w[..., 1] * x[:, r0, c1]
           + w[..., 2] * x[:, r1, c0] + w[..., 3] * x[:, r1, c1])
    # (C, Ho, K, Wo) -> (Ho, C, K, Wo)
    return np.ascontiguousarray(out.transpose(1, 0, 2, 3))


def equi_scatter(g, base_u, row0, row1, wts, stride, height, width):
    _, n_ch, _, out_w = g.shape
    c0, c1 = _columns(out_w, stride, base_u, width)
    r0 = np.broadcast_to(row0[:, :, None], c0.shape)
    r1 = np.broadcast_to(row1[:, :, None], c0.shape)
    # flat pixel index and weight per (oy, k, ox, corner), in the compiled loop order
    idx = np.stack([r0 * width + c0, r0 * width + c1, r1 * width + c0, r1 * width + c1], axis=-1)
    w = np.broadcast_to(wts[:, :, None, :], idx.shape)
    out = np.empty((n_ch, height, width))
    plane = height * width
    for c in range(n_ch):
        contrib = g[:, c][..., None] * w  # (Ho, K, Wo, 4)
        out[c] = np.bincount(idx.ravel(), weights=contrib.ravel(), minlength=plane).reshape(height, width)
    return out


def warp_bilinear(img, u, v):
    _, height, width = img.shape
    fl = u - np.floor(u / width) * width
    fl = np.where(fl >= width, 0.0, fl)
    c0 = fl.astype(np.intp)
    fu = fl - c0
    c1 = c0 + 1
    c1[c1 == width] = 0
    low = v <= 0.0
    high = v >= height - 1
    inside = ~(low | high)
    vi = np.where(inside, v, 0.0).astype(np.intp)
    r0 = np.where(low, 0, np.where(high, height - 1, vi))
    r1 = np.where(low, 0, np.where(high, height - 1, vi + 1))
    fv = np.where(inside, v - vi, 0.0)
    return ((1.0 - fv) * ((1.0 - fu) * img[:, r0, c0] + fu * img[:, r0, c1])
            + fv * ((1.0 - fu) * img[:, r1, c0] + fu * img[:, r1, c1]))
