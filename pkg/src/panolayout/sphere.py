"""Equirectangular pixel <-> spherical angle <-> unit vector transforms.

Axis convention: y points up, z points forward (image center), x points to
the right (positive longitude). Pixel coordinates are continuous; integer
``(u, v)`` is the sample position of pixel column ``u``, row ``v``, so row 0
is the north pole and column ``W / 2`` looks along +z.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * np.pi
HALF_PI = 0.5 * np.pi


@dataclass(frozen=True)
class ImageGeometry:
    """Raster size of an equirectangular image.

    Full panoramas have ``width == 2 * height``; pass ``full=False`` for
    feature maps or crops that break the 2:1 ratio.
    """

    width: int
    height: int
    full: bool = True

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValueError("width and height must be integers")
        if self.width < 2 or self.height < 2:
            raise ValueError(f"geometry too small: {self.width}x{self.height}")
        if self.full and self.width != 2 * self.height:
            raise ValueError(
                f"full panorama requires width == 2*height, got {self.width}x{self.height}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def scaled(self, factor: float) -> "ImageGeometry":
        return ImageGeometry(int(round(self.width * factor)), int(round(self.height * factor)), self.full)


class SphericalAngles(NamedTuple):
    """Longitude ``phi`` in [-pi, pi) and latitude ``theta`` in [-pi/2, pi/2]."""

    phi: np.ndarray | float
    theta: np.ndarray | float


def wrap_longitude(phi):
    """Map longitudes into [-pi, pi)."""
    out = np.mod(np.asarray(phi, dtype=np.float64) + np.pi, TWO_PI) - np.pi
    # np.mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= np.pi, out - TWO_PI, out)


def canonical_angles(phi, theta) -> SphericalAngles:
    """Fold arbitrary (phi, theta) onto the canonical ranges.

    A latitude beyond a pole re-enters on the opposite meridian, i.e.
    ``theta -> pi - theta`` together with ``phi -> phi + pi``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    # bring theta into [-pi, pi) first, then reflect over the poles
    theta = np.mod(theta + np.pi, TWO_PI) - np.pi
    over = theta > HALF_PI
    under = theta < -HALF_PI
    theta = np.where(over, np.pi - theta, theta)
    theta = np.where(under, -np.pi - theta, theta)
    phi = np.where(over | under, phi + np.pi, phi)
    return SphericalAngles(_scalarize(wrap_longitude(phi)), _scalarize(theta))


def pixel_to_angles(geom: ImageGeometry, u, v) -> SphericalAngles:
    phi = (np.asarray(u, dtype=np.float64) - geom.width / 2.0) * (TWO_PI / geom.width)
    theta = -(np.asarray(v, dtype=np.float64) - geom.height / 2.0) * (np.pi / geom.height)
    return canonical_angles(phi, theta)


def angles_to_pixel(geom: ImageGeometry, angles: SphericalAngles):
    """Return continuous ``(u, v)``; u lands in [0, W) for canonical input."""
    phi, theta = angles
    u = (np.asarray(phi, dtype=np.float64) / TWO_PI + 0.5) * geom.width
    v = (-np.asarray(theta, dtype=np.float64) / np.pi + 0.5) * geom.height
    return _scalarize(u), _scalarize(v)


def angles_to_unit_vector(angles: SphericalAngles) -> np.ndarray:
    """Unit vectors with shape ``(..., 3)``."""
    phi = np.asarray(angles[0], dtype=np.float64)
    theta = np.asarray(angles[1], dtype=np.float64)
    ct = np.cos(theta)
    return np.stack([ct * np.sin(phi), np.sin(theta), ct * np.cos(phi)], axis=-1)


def unit_vector_to_angles(p) -> SphericalAngles:
    """Inverse of :func:`angles_to_unit_vector`.

    Uses the two-argument arctangent so the rear hemisphere keeps its
    longitude. Exactly at a pole (x = z = 0) the longitude is 0.
    """
    p = np.asarray(p, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    at_pole = (x == 0.0) & (z == 0.0)
    phi = np.where(at_pole, 0.0, np.arctan2(x, z))
    # arctan2 lands in (-pi, pi]; folding only +pi keeps phi exactly odd in x
    phi = np.where(phi >= np.pi, phi - TWO_PI, phi)
    theta = np.arcsin(np.clip(y, -1.0, 1.0))
    return SphericalAngles(_scalarize(phi), _scalarize(theta))


def rot_x(angle: float) -> np.ndarray:
    """Rotation about x that tilts +z toward +y for positive angles."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def rot_y(angle: float) -> np.ndarray:
    """Rotation about y that turns +z toward +x for positive angles."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def alignment_matrix(center: SphericalAngles) -> np.ndarray:
    """``R_y(phi) @ R_x(theta)``: takes (0, 0, 1) to the direction of ``center``."""
    return rot_y(float(center[0])) @ rot_x(float(center[1]))


def rotate_align(p, center: SphericalAngles) -> np.ndarray:
    """Rotate vectors ``p`` (shape ``(..., 3)``) so the forward axis lands on ``center``."""
    p = np.asarray(p, dtype=np.float64)
    return p @ alignment_matrix(center).T


def check_unit(p, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {p.shape}")
    err = np.abs(np.einsum("...i,...i->...", p, p) - 1.0)
    if np.any(err > tol):
        raise ValueError(f"not a unit vector (max |norm^2 - 1| = {err.max():.3g})")
    return p


def pixel_rays(geom: ImageGeometry) -> np.ndarray:
    """Unit vectors for every integer pixel, shape ``(H, W, 3)``."""
    v, u = np.meshgrid(np.arange(geom.height), np.arange(geom.width), indexing="ij")
    return angles_to_unit_vector(pixel_to_angles(geom, u, v))


def _scalarize(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a
