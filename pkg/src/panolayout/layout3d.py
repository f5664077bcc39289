"""From a corner probability map to ordered corners and a 3D room layout.

Only ceiling-floor parallelism is assumed: the floor is the plane y = -1
(unit camera height), the ceiling a parallel plane above the camera, and the
walls vertical with arbitrary angles between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import polygon, sphere
from .layout import Layout3D, LayoutError, LayoutModel
from .sphere import ImageGeometry

DEFAULT_MIN_PEAK = 0.5
NMS_RADIUS_PER_128 = 5  # pixels of suppression radius per 128 columns


class InsufficientCornersError(LayoutError):
    """Fewer than three ceiling/floor pairs could be formed."""

    def __init__(self, message: str, corners: "CornerSet | None" = None):
        super().__init__(message)
        self.corners = corners


@dataclass
class CornerSet:
    """Ceiling/floor corner pairs ordered left to right, ``pairs`` shape ``(n, 2, 2)``."""

    geometry: ImageGeometry
    pairs: np.ndarray
    scores: np.ndarray | None = None
    unmatched: list[tuple[float, float, float]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.float64).reshape(-1, 2, 2)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def ceiling(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def floor(self) -> np.ndarray:
        return self.pairs[:, 1]

    def to_layout(self, validate: bool = True) -> LayoutModel:
        return LayoutModel(self.geometry, self.pairs.copy(), validate=validate)

    @classmethod
    def from_layout(cls, layout: LayoutModel) -> "CornerSet":
        return cls(layout.geometry, layout.walls.copy())


def default_nms_radius(geom: ImageGeometry) -> int:
    return max(1, int(round(NMS_RADIUS_PER_128 * geom.width / 128)))


def find_peaks(prob: np.ndarray, min_peak: float = DEFAULT_MIN_PEAK, nms_radius: int = 5):
    """Local maxima above ``min_peak`` with greedy suppression; columns wrap.

    Returns a list of ``(u, v, value)`` sorted by decreasing value.
    """
    prob = np.asarray(prob, dtype=np.float64)
    height, width = prob.shape
    size = 2 * nms_radius + 1
    local = ndimage.maximum_filter(prob, size=size, mode=("nearest", "wrap"))
    vs, us = np.nonzero((prob >= local) & (prob >= min_peak))
    vals = prob[vs, us]
    # strongest first; ties resolved by raster order for determinism
    order = np.lexsort((us, vs, -vals))
    kept: list[tuple[float, float, float]] = []
    for i in order:
        u, v = int(us[i]), int(vs[i])
        clash = False
        for ku, kv, _ in kept:
            du = abs(u - ku)
            du = min(du, width - du)
            if du <= nms_radius and abs(v - kv) <= nms_radius:
                clash = True
                break
        if not clash:
            kept.append((float(u), float(v), float(vals[i])))
    return kept


def _circular_du(a, b, width):
    d = np.abs(np.asarray(a) - np.asarray(b)) % width
    return np.minimum(d, width - d)


def extract_corners(prob: np.ndarray, min_peak: float = DEFAULT_MIN_PEAK,
                    nms_radius: int | None = None, geometry: ImageGeometry | None = None) -> CornerSet:
    """Pick corner peaks and pair ceiling with floor corners by nearest longitude.

    Peaks above the horizon (v < H/2) are ceiling candidates, the rest floor
    candidates. Pairs are formed greedily by smallest wrapped column distance,
    ties going to the stronger peak, then sorted left to right by ceiling u.

    Raises:
        InsufficientCornersError: fewer than 3 pairs.
    """
    prob = np.asarray(prob, dtype=np.float64)
    height, width = prob.shape
    geom = geometry or ImageGeometry(width, height, full=(width == 2 * height))
    if nms_radius is None:
        nms_radius = default_nms_radius(geom)
    peaks = find_peaks(prob, min_peak, nms_radius)
    ceil = [p for p in peaks if p[1] < height / 2]
    floor = [p for p in peaks if p[1] >= height / 2]
    diagnostics = []
    if len(ceil) != len(floor):
        diagnostics.append(f"{len(ceil)} ceiling peaks vs {len(floor)} floor peaks")

    candidates = []
    for i, c in enumerate(ceil):
        for j, f in enumerate(floor):
            candidates.append((_circular_du(c[0], f[0], width), -(c[2] + f[2]), i, j))
    candidates.sort()
    used_c, used_f, pairs, scores = set(), set(), [], []
    for _, _, i, j in candidates:
        if i in used_c or j in used_f:
            continue
        used_c.add(i)
        used_f.add(j)
        c, f = ceil[i], floor[j]
        pairs.append([[c[0], c[1]], [f[0], f[1]]])
        scores.append([c[2], f[2]])
    unmatched = [ceil[i] for i in range(len(ceil)) if i not in used_c]
    unmatched += [floor[j] for j in range(len(floor)) if j not in used_f]
    if unmatched:
        diagnostics.append(f"{len(unmatched)} unmatched peak(s)")

    pairs_arr = np.array(pairs, dtype=np.float64).reshape(-1, 2, 2)
    scores_arr = np.array(scores, dtype=np.float64).reshape(-1, 2)
    order = np.argsort(pairs_arr[:, 0, 0], kind="stable")
    result = CornerSet(geom, pairs_arr[order], scores_arr[order], unmatched, diagnostics)
    if len(result) < 3:
        raise InsufficientCornersError(
            f"insufficient corners: {len(result)} pair(s) found, need 3"
            + (f" ({'; '.join(diagnostics)})" if diagnostics else ""),
            result,
        )
    return result


def corner_rays(geom: ImageGeometry, pixels: np.ndarray) -> np.ndarray:
    pixels = np.asarray(pixels, dtype=np.float64)
    return sphere.angles_to_unit_vector(sphere.pixel_to_angles(geom, pixels[..., 0], pixels[..., 1]))


def floor_points(geom: ImageGeometry, floor_px: np.ndarray) -> np.ndarray:
    """Floor-plane ``(x, z)`` hit by each floor corner ray (camera height 1)."""
    rays = corner_rays(geom, floor_px)
    bad = np.nonzero(rays[:, 1] >= 0)[0]
    if len(bad):
        k = int(bad[0])
        raise LayoutError(f"floor corner {k} at pixel {tuple(floor_px[k])} is not below the horizon")
    t = -1.0 / rays[:, 1]
    return np.stack([rays[:, 0] * t, rays[:, 2] * t], axis=-1)


def wall_heights(geom: ImageGeometry, corners) -> np.ndarray:
    """Per-boundary ceiling height above the camera from each ceiling/floor pair."""
    pairs = corners.pairs if isinstance(corners, CornerSet) else corners.walls
    xz = floor_points(geom, pairs[:, 1])
    rays = corner_rays(geom, pairs[:, 0])
    bad = np.nonzero(rays[:, 1] <= 0)[0]
    if len(bad):
        k = int(bad[0])
        raise LayoutError(f"ceiling corner {k} at pixel {tuple(pairs[k, 0])} is not above the horizon")
    dist = np.hypot(xz[:, 0], xz[:, 1])
    return dist * rays[:, 1] / np.hypot(rays[:, 0], rays[:, 2])


def reconstruct_3d(geom: ImageGeometry, corners) -> Layout3D:
    """Floor polygon from the floor corners and ceiling height as the median per-wall estimate.

    ``corners`` may be a :class:`CornerSet` or a :class:`LayoutModel`; the
    polygon keeps their order.
    """
    pairs = corners.pairs if isinstance(corners, CornerSet) else corners.walls
    if len(pairs) < 3:
        raise InsufficientCornersError(f"insufficient corners: {len(pairs)} pair(s), need 3")
    xz = floor_points(geom, pairs[:, 1])
    heights = wall_heights(geom, corners)
    return Layout3D(xz, float(np.median(heights)))


def ceiling_points(geom: ImageGeometry, ceiling_px: np.ndarray, height: float) -> np.ndarray:
    """``(x, z)`` where each ceiling corner ray meets the plane y = ``height``."""
    rays = corner_rays(geom, ceiling_px)
    if np.any(rays[:, 1] <= 0):
        raise LayoutError("ceiling corner not above the horizon")
    t = height / rays[:, 1]
    return np.stack([rays[:, 0] * t, rays[:, 2] * t], axis=-1)


def project_points(geom: ImageGeometry, pts: np.ndarray) -> np.ndarray:
    """Pixels ``(u, v)`` of 3D points seen from the origin, shape ``(..., 2)``."""
    pts = np.asarray(pts, dtype=np.float64)
    dirs = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    u, v = sphere.angles_to_pixel(geom, sphere.unit_vector_to_angles(dirs))
    return np.stack([np.asarray(u), np.asarray(v)], axis=-1)


def _ordered_by_longitude(l3d: Layout3D) -> Layout3D:
    phi = np.arctan2(l3d.floor[:, 0], l3d.floor[:, 1])
    if _cyclic_monotone(phi, 1):
        return l3d
    if _cyclic_monotone(phi, -1):
        return Layout3D(l3d.floor[::-1].copy(), l3d.ceiling_height)
    raise LayoutError("some walls are occluded from the camera; left-to-right joining does not apply")


def _cyclic_monotone(phi: np.ndarray, sign: int) -> bool:
    steps = np.mod(sign * np.diff(np.append(phi, phi[0])), 2 * np.pi)
    return bool(np.all(steps > 0) and abs(steps.sum() - 2 * np.pi) < 1e-6)


def layout_to_model(geom: ImageGeometry, l3d: Layout3D, camera_height: float = 1.0) -> LayoutModel:
    """Project floor and ceiling corners of ``l3d`` into the panorama.

    The polygon is walked in increasing longitude (reversed if given the other
    way). ``camera_height`` rescales the room, which leaves pixels unchanged.

    Raises:
        LayoutError: the camera is outside the polygon or a wall is occluded.
    """
    if not l3d.contains_camera():
        raise LayoutError("camera is outside the floor polygon")
    l3d = _ordered_by_longitude(l3d)
    s = camera_height
    n = len(l3d.floor)
    floor3 = np.column_stack([l3d.floor[:, 0] * s, np.full(n, -s), l3d.floor[:, 1] * s])
    ceil3 = np.column_stack([l3d.floor[:, 0] * s, np.full(n, l3d.ceiling_height * s), l3d.floor[:, 1] * s])
    walls = np.stack([project_points(geom, ceil3), project_points(geom, floor3)], axis=1)
    return LayoutModel(geom, walls)


def rotate_layout(l3d: Layout3D, yaw: float) -> Layout3D:
    """Rotate the floor polygon about the vertical axis (turns +z toward +x)."""
    c, s = np.cos(yaw), np.sin(yaw)
    x, z = l3d.floor[:, 0], l3d.floor[:, 1]
    return Layout3D(np.stack([c * x + s * z, -s * x + c * z], axis=-1), l3d.ceiling_height)
