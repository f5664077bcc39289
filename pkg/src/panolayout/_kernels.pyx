# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gather/scatter loops for equirectangular convolution and warping.

Every routine mirrors a function in ``_kernels_py`` term by term, including
the order in which contributions are accumulated.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) nogil:
    i = i % n
    if i < 0:
        i += n
    return i


def equi_gather(const double[:, :, ::1] x,
                const Py_ssize_t[:, ::1] base_u,
                const Py_ssize_t[:, ::1] row0,
                const Py_ssize_t[:, ::1] row1,
                const double[:, :, ::1] wts,
                Py_ssize_t stride, Py_ssize_t out_w):
    """Bilinear samples per (output row, channel, kernel element, output column)."""
    cdef Py_ssize_t C = x.shape[0], W = x.shape[2]
    cdef Py_ssize_t Ho = base_u.shape[0], K = base_u.shape[1]
    out = np.empty((Ho, C, K, out_w), dtype=np.float64)
    cdef double[:, :, :, ::1] o = out
    cdef Py_ssize_t c, oy, k, ox, c0, c1, r0, r1, bu
    cdef double w00, w01, w10, w11
    with nogil:
        for oy in range(Ho):
            for k in range(K):
                bu = base_u[oy, k]
                r0 = row0[oy, k]
                r1 = row1[oy, k]
                w00 = wts[oy, k, 0]
                w01 = wts[oy, k, 1]
                w10 = wts[oy, k, 2]
                w11 = wts[oy, k, 3]
                for c in range(C):
                    for ox in range(out_w):
                        c0 = _wrap(ox * stride + bu, W)
                        c1 = c0 + 1
                        if c1 == W:
                            c1 = 0
                        o[oy, c, k, ox] = (w00 * x[c, r0, c0] + w01 * x[c, r0, c1]
                                           + w10 * x[c, r1, c0] + w11 * x[c, r1, c1])
    return out


def equi_scatter(const double[:, :, :, ::1] g,
                 const Py_ssize_t[:, ::1] base_u,
                 const Py_ssize_t[:, ::1] row0,
                 const Py_ssize_t[:, ::1] row1,
                 const double[:, :, ::1] wts,
                 Py_ssize_t stride, Py_ssize_t height, Py_ssize_t width):
    """Adjoint of ``equi_gather``: accumulate ``g`` (Ho, C, K, Wo) into a (C, H, W) image."""
    cdef Py_ssize_t Ho = g.shape[0], C = g.shape[1], K = g.shape[2], Wo = g.shape[3]
    out = np.zeros((C, height, width), dtype=np.float64)
    cdef double[:, :, ::1] gx = out
    cdef Py_ssize_t c, oy, k, ox, c0, c1, r0, r1, bu
    cdef double w00, w01, w10, w11, gv
    with nogil:
        for c in range(C):
            for oy in range(Ho):
                for k in range(K):
                    bu = base_u[oy, k]
                    r0 = row0[oy, k]
                    r1 = row1[oy, k]
                    w00 = wts[oy, k, 0]
                    w01 = wts[oy, k, 1]
                    w10 = wts[oy, k, 2]
                    w11 = wts[oy, k, 3]
                    for ox in range(Wo):
                        c0 = _wrap(ox * stride + bu, width)
                        c1 = c0 + 1
                        if c1 == width:
                            c1 = 0
                        gv = g[oy, c, k, ox]
                        gx[c, r0, c0] += gv * w00
                        gx[c, r0, c1] += gv * w01
                        gx[c, r1, c0] += gv * w10
                        gx[c, r1, c1] += gv * w11
    return out


def warp_bilinear(const double[:, :, ::1] img,
                  const double[::1] u,
                  const double[::1] v):
    """Sample ``img`` at points ``(u, v)``; u wraps, v clamps to the edge rows."""
    cdef Py_ssize_t C = img.shape[0], H = img.shape[1], W = img.shape[2]
    cdef Py_ssize_t N = u.shape[0]
    out = np.empty((C, N), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t n, c, c0, c1, r0, r1, vi
    cdef double uu, vv, fu, fv, fl
    with nogil:
        for n in range(N):
            uu = u[n]
            vv = v[n]
            fl = uu - (uu // W) * W
            if fl >= W:
                fl = 0.0
            c0 = <Py_ssize_t>fl
            fu = fl - c0
            c1 = c0 + 1
            if c1 == W:
                c1 = 0
            if vv <= 0.0:
                r0 = 0
                r1 = 0
                fv = 0.0
            elif vv >= H - 1:
                r0 = H - 1
                r1 = H - 1
                fv = 0.0
            else:
                vi = <Py_ssize_t>vv
                r0 = vi
                r1 = vi + 1
                fv = vv - vi
            for c in range(C):
                o[c, n] = ((1.0 - fv) * ((1.0 - fu) * img[c, r0, c0] + fu * img[c, r0, c1])
                           + fv * ((1.0 - fu) * img[c, r1, c0] + fu * img[c, r1, c1]))
    return out
