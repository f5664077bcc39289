"""Fixed sampling offsets of distortion-aware (equirectangular) kernels.

A square kernel of ``r x r`` samples is laid out on a tangent plane at
distance ``d`` from the sphere center, projected onto the sphere, rotated to
the kernel center and back-projected to the equirectangular raster. The
pattern only depends on the center row, so one set of ``r*r`` positions per
row describes the whole image.

Kernel elements are ordered row-major ``(a, b)`` with ``a`` the vertical
index (top to bottom in the image) and ``b`` the horizontal index (left to
right), matching the ``[out, in, r, r]`` weight layout of a standard conv.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import sphere
from .sphere import ImageGeometry


@dataclass(frozen=True)
class KernelSpec:
    """Square spherical kernel: ``resolution`` samples per side over ``fov`` radians."""

    resolution: int
    fov: float

    def __post_init__(self):
        r = self.resolution
        if int(r) != r or r < 1 or r % 2 == 0:
            raise ValueError(f"kernel resolution must be an odd positive integer, got {r}")
        if not 0.0 < self.fov < np.pi:
            raise ValueError(f"kernel field of view must lie in (0, pi), got {self.fov}")

    @classmethod
    def matching(cls, geom: ImageGeometry, resolution: int = 3, rate: int = 1) -> "KernelSpec":
        """Kernel with the angular footprint of an ``r x r`` standard kernel on ``geom``.

        ``rate > 1`` widens the field of view like an atrous convolution.
        """
        return cls(resolution, rate * resolution * sphere.TWO_PI / geom.width)

    @property
    def size(self) -> int:
        return self.resolution * self.resolution

    @property
    def distance(self) -> float:
        """Distance from the sphere center to the kernel plane."""
        return self.resolution / (2.0 * np.tan(self.fov / 2.0))


def kernel_grid(spec: KernelSpec) -> np.ndarray:
    """Unit vectors of the kernel elements around the forward axis, shape ``(r*r, 3)``."""
    half = (spec.resolution - 1) // 2
    steps = np.arange(-half, half + 1, dtype=np.float64)
    a, b = np.meshgrid(steps, steps, indexing="ij")
    # image rows grow downward while y grows upward
    pts = np.stack([b.ravel(), -a.ravel(), np.full(spec.size, spec.distance)], axis=-1)
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


def sample_positions(geom: ImageGeometry, spec: KernelSpec, u0: float, v0: float) -> np.ndarray:
    """Continuous ``(u, v)`` of every kernel element for a kernel centered at ``(u0, v0)``.

    Returns shape ``(r*r, 2)``; u is wrapped into [0, W). Samples that cross a
    pole come back on the opposite meridian through the sphere math.
    """
    center = sphere.pixel_to_angles(geom, u0, v0)
    p = sphere.rotate_align(kernel_grid(spec), center)
    u, v = sphere.angles_to_pixel(geom, sphere.unit_vector_to_angles(p))
    return np.stack([np.mod(u, geom.width), v], axis=-1)


@dataclass(frozen=True, eq=False)
class OffsetField:
    """Per-row kernel sample positions for kernels centered on column 0.

    ``rows[v]`` holds ``r*r`` absolute ``(u, v)`` pairs; the pattern for a
    kernel at column ``u0`` is ``rows[v]`` shifted by ``u0`` (mod W).
    """

    geometry: ImageGeometry
    spec: KernelSpec
    rows: np.ndarray = field(repr=False)
    du: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        want = (self.geometry.height, self.spec.size, 2)
        if self.rows.shape != want:
            raise ValueError(f"offset rows must have shape {want}, got {self.rows.shape}")
        self.rows.setflags(write=False)
        if self.du is not None:
            if self.du.shape != want[:2]:
                raise ValueError(f"column offsets must have shape {want[:2]}, got {self.du.shape}")
            self.du.setflags(write=False)

    def positions(self, u0: float, v: int) -> np.ndarray:
        out = self.rows[v].copy()
        out[:, 0] = np.mod(out[:, 0] + u0, self.geometry.width)
        return out

    @cached_property
    def relative_u(self) -> np.ndarray:
        """Horizontal offsets from the kernel center in [-W/2, W/2), shape ``(H, r*r)``."""
        if self.du is not None:
            return self.du
        w = self.geometry.width
        out = np.mod(self.rows[..., 0] + w / 2.0, w) - w / 2.0
        out.setflags(write=False)
        return out


_FIELD_CACHE: dict[tuple[ImageGeometry, KernelSpec], OffsetField] = {}


def offset_field(geom: ImageGeometry, spec: KernelSpec) -> OffsetField:
    """Offset field for every row of ``geom``; cached per (geometry, spec)."""
    key = (geom, spec)
    cached = _FIELD_CACHE.get(key)
    if cached is not None:
        return cached
    grid = kernel_grid(spec)
    rows = np.empty((geom.height, spec.size, 2))
    du = np.empty((geom.height, spec.size))
    for v in range(geom.height):
        # build at phi = 0 (column W/2) where R_y is the identity, then shift to column 0
        # latitude of row v written so rows v and H - v get exactly opposite values
        theta = -(v - geom.height / 2.0) * (np.pi / geom.height)
        p = grid @ sphere.rot_x(theta).T
        ang = sphere.unit_vector_to_angles(p)
        # longitude offset straight to pixels keeps the left/right pattern exactly odd
        du[v] = ang.phi * (geom.width / sphere.TWO_PI)
        rows[v, :, 0] = np.mod(du[v], geom.width)
        rows[v, :, 1] = sphere.angles_to_pixel(geom, ang)[1]
    result = OffsetField(geom, spec, rows, du)
    _FIELD_CACHE[key] = result
    return result


def clear_cache() -> None:
    _FIELD_CACHE.clear()
