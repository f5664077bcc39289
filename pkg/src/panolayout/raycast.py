"""Ray casting against a layout prism: floor plane, ceiling plane and vertical walls."""

from __future__ import annotations

import numpy as np

from . import polygon, sphere
from .layout import Layout3D, LayoutError
from .sphere import ImageGeometry

CEILING = 0
FLOOR = 1
WALL0 = 2


def left_to_right(l3d: Layout3D) -> np.ndarray:
    """Floor vertices oriented so longitude increases along the polygon."""
    # increasing atan2(x, z) is clockwise in the (x, z) plane
    return l3d.floor if polygon.area(l3d.floor) < 0 else l3d.floor[::-1].copy()


def wall_rank(floor: np.ndarray) -> np.ndarray:
    """CS label offset of each wall k (vertex k -> k+1): rank of its left corner's longitude."""
    phi = np.arctan2(floor[:, 0], floor[:, 1])
    return np.argsort(np.argsort(phi, kind="stable"), kind="stable")


def cast(rays: np.ndarray, l3d: Layout3D, camera_y: float = 0.0):
    """First surface hit by each ray from ``(0, camera_y, 0)``.

    Args:
        rays: unit directions ``(..., 3)``.
        camera_y: camera height relative to the original camera (y up).

    Returns:
        (surface, t): ``surface`` is CEILING, FLOOR or WALL0 + k for polygon
        edge k of :func:`left_to_right`; ``t`` is the distance along the ray.

    Raises:
        LayoutError: the camera is not strictly inside the room.
    """
    h = l3d.ceiling_height
    if not (-1.0 < camera_y < h):
        raise LayoutError(f"camera height offset {camera_y} leaves the room volume")
    if not l3d.contains_camera():
        raise LayoutError("camera is outside the floor polygon")
    floor = left_to_right(l3d)
    shape = rays.shape[:-1]
    d = rays.reshape(-1, 3)
    dx, dy, dz = d[:, 0], d[:, 1], d[:, 2]

    with np.errstate(divide="ignore", invalid="ignore"):
        t_floor = np.where(dy < 0, (-1.0 - camera_y) / dy, np.inf)
        t_ceil = np.where(dy > 0, (h - camera_y) / dy, np.inf)

        a = floor
        b = np.roll(floor, -1, axis=0)
        e = b - a  # (n, 2) edge vectors in (x, z)
        # solve t * (dx, dz) = a + s * e
        den = dx[:, None] * e[None, :, 1] - dz[:, None] * e[None, :, 0]
        t_wall = (a[None, :, 0] * e[None, :, 1] - a[None, :, 1] * e[None, :, 0]) / den
        s = (a[None, :, 0] * dz[:, None] - a[None, :, 1] * dx[:, None]) / den
        ok = (den != 0) & (t_wall > 0) & (s >= 0) & (s <= 1)
        t_wall = np.where(ok, t_wall, np.inf)

    k = np.argmin(t_wall, axis=1)
    tw = t_wall[np.arange(len(d)), k]
    surface = WALL0 + k
    t = tw
    surface = np.where(t_floor < t, FLOOR, surface)
    t = np.minimum(t, t_floor)
    surface = np.where(t_ceil < t, CEILING, surface)
    t = np.minimum(t, t_ceil)
    return surface.reshape(shape), t.reshape(shape)


def cast_pixels(geom: ImageGeometry, l3d: Layout3D, camera_y: float = 0.0):
    return cast(sphere.pixel_rays(geom), l3d, camera_y)
