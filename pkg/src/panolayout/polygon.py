"""Planar polygon routines for floor plans: area, simplicity, containment, intersection.

Polygons are ``(n, 2)`` arrays of vertices in order (either orientation),
implicitly closed.
"""

from __future__ import annotations

import numpy as np


def area(poly) -> float:
    """Signed shoelace area (positive for counter-clockwise in (x, y) axes)."""
    p = np.asarray(poly, dtype=np.float64)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p1, p2, q1, q2) -> bool:
    d1 = _cross(q1, q2, p1)
    d2 = _cross(q1, q2, p2)
    d3 = _cross(p1, p2, q1)
    d4 = _cross(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0:
        return True

    def on_seg(a, b, c, d):
        return d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    return on_seg(q1, q2, p1, d1) or on_seg(q1, q2, p2, d2) or on_seg(p1, p2, q1, d3) or on_seg(p1, p2, q2, d4)


def is_simple(poly) -> bool:
    """No two non-adjacent edges touch and no vertex repeats."""
    p = np.asarray(poly, dtype=np.float64)
    n = len(p)
    if n < 3:
        return False
    for i in range(n):
        a1, a2 = p[i], p[(i + 1) % n]
        if np.array_equal(a1, a2):
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            if _segments_intersect(a1, a2, p[j], p[(j + 1) % n]):
                return False
    return True


def contains(poly, point) -> bool:
    """Even-odd test for a single point (boundary points count as outside)."""
    p = np.asarray(poly, dtype=np.float64)
    x, y = float(point[0]), float(point[1])
    inside = False
    n = len(p)
    for i in range(n):
        x1, y1 = p[i]
        x2, y2 = p[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc == x:
                return False
            if xc > x:
                inside = not inside
    return inside


def triangulate(poly) -> np.ndarray:
    """Ear-clipping triangulation of a simple polygon, shape ``(n-2, 3, 2)`` (CCW triangles)."""
    p = np.asarray(poly, dtype=np.float64)
    if area(p) < 0:
        p = p[::-1]
    idx = list(range(len(p)))
    tris = []
    while len(idx) > 3:
        m = len(idx)
        for k in range(m):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % m]
            a, b, c = p[i0], p[i1], p[i2]
            if _cross(a, b, c) <= 0:
                continue  # reflex or collinear corner
            if any(_in_triangle(p[j], a, b, c) for j in idx if j not in (i0, i1, i2)):
                continue
            tris.append((a, b, c))
            del idx[k]
            break
        else:
            flat = [k for k in range(m) if _cross(p[idx[k - 1]], p[idx[k]], p[idx[(k + 1) % m]]) == 0]
            if not flat:
                raise ValueError("triangulation failed; polygon is not simple")
            del idx[flat[0]]
    if len(idx) == 3:
        a, b, c = p[idx[0]], p[idx[1]], p[idx[2]]
        if _cross(a, b, c) > 0:
            tris.append((a, b, c))
    return np.array(tris).reshape(-1, 3, 2)


def _in_triangle(q, a, b, c) -> bool:
    return _cross(a, b, q) >= 0 and _cross(b, c, q) >= 0 and _cross(c, a, q) >= 0


def clip_convex(subject, clip) -> np.ndarray:
    """Sutherland-Hodgman: ``subject`` clipped by the convex CCW polygon ``clip``."""
    out = [np.asarray(v, dtype=np.float64) for v in subject]
    clip = np.asarray(clip, dtype=np.float64)
    n = len(clip)
    for i in range(n):
        a, b = clip[i], clip[(i + 1) % n]
        inp, out = out, []
        if not inp:
            break
        for j in range(len(inp)):
            cur, prev = inp[j], inp[j - 1]
            cin = _cross(a, b, cur) >= 0
            pin = _cross(a, b, prev) >= 0
            if cin:
                if not pin:
                    out.append(_line_hit(prev, cur, a, b))
                out.append(cur)
            elif pin:
                out.append(_line_hit(prev, cur, a, b))
    return np.array(out).reshape(-1, 2)


def _line_hit(p, q, a, b):
    d1 = _cross(a, b, p)
    d2 = _cross(a, b, q)
    t = d1 / (d1 - d2)
    return p + t * (q - p)


def intersection_area(p, q) -> float:
    """Area of the intersection of two simple (possibly non-convex) polygons.

    Both polygons are triangulated; the triangles of one polygon are disjoint,
    so the pairwise convex clip areas add up to the exact overlap.
    """
    tp = triangulate(p)
    tq = triangulate(q)
    total = 0.0
    for a in tp:
        amin, amax = a.min(axis=0), a.max(axis=0)
        for b in tq:
            if np.any(b.min(axis=0) > amax) or np.any(b.max(axis=0) < amin):
                continue
            piece = clip_convex(a, b)
            if len(piece) >= 3:
                total += abs(area(piece))
    return total
