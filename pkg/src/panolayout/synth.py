"""Synthetic rooms, labels and textured panoramas for tests and micro-training."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from . import layout3d, raycast
from .layout import Layout3D, LayoutModel
from .sphere import ImageGeometry


def box_room(half_x: float = 2.0, half_z: float = 2.0, ceiling_height: float = 1.0,
             center=(0.0, 0.0)) -> Layout3D:
    cx, cz = center
    floor = np.array([[-half_x, -half_z], [-half_x, half_z], [half_x, half_z], [half_x, -half_z]])
    return Layout3D(floor - np.array([cx, cz]), ceiling_height)


def random_room(rng: np.random.Generator, n_walls: int | None = None,
                radius: tuple[float, float] = (1.3, 3.0),
                ceiling: tuple[float, float] = (0.7, 1.6),
                min_gap: float = 0.4, max_gap: float = 2.2) -> Layout3D:
    """Star-shaped room around the camera, so every wall is visible.

    Corner longitudes are spread with gaps in ``[min_gap, max_gap]`` radians;
    wall angles are arbitrary (non-Manhattan in general).
    """
    if n_walls is None:
        n_walls = int(rng.integers(4, 9))
    if n_walls * min_gap >= 2 * np.pi or n_walls * max_gap <= 2 * np.pi:
        raise ValueError(f"cannot place {n_walls} walls with gaps in [{min_gap}, {max_gap}]")
    while True:
        gaps = rng.dirichlet(np.full(n_walls, 4.0)) * 2 * np.pi
        if gaps.min() >= min_gap and gaps.max() <= max_gap:
            break
    phi = rng.uniform(-np.pi, np.pi) + np.cumsum(gaps)
    r = rng.uniform(*radius, size=n_walls)
    floor = np.stack([r * np.sin(phi), r * np.cos(phi)], axis=-1)
    return Layout3D(floor, rng.uniform(*ceiling))


def labels_for(geom: ImageGeometry, l3d: Layout3D, quantize: bool = True) -> LayoutModel:
    """Corner labels of a room, rounded to whole pixels like a human annotation."""
    model = layout3d.layout_to_model(geom, l3d).sorted()
    if quantize:
        walls = np.round(model.walls)
        walls[..., 0] = np.mod(walls[..., 0], geom.width)
        model = LayoutModel(geom, walls)
    return model


SURFACE_COLORS = np.array([
    [0.92, 0.92, 0.88],  # ceiling
    [0.45, 0.33, 0.22],  # floor
])


def panorama(geom: ImageGeometry, l3d: Layout3D, rng: np.random.Generator,
             texture: float = 0.04, noise: float = 0.01) -> np.ndarray:
    """RGB panorama ``(3, H, W)`` in [0, 1]: flat-shaded surfaces plus smooth texture."""
    surface, depth = raycast.cast_pixels(geom, l3d)
    n = len(l3d.floor)
    wall_colors = rng.uniform(0.3, 0.85, size=(n, 3))
    palette = np.concatenate([SURFACE_COLORS, wall_colors])
    img = palette[surface].transpose(2, 0, 1)
    # distance shading keeps boundaries visible between similar colours
    img = img * (0.75 + 0.25 * np.exp(-0.15 * depth))[None]
    if texture > 0:
        tex = ndimage.gaussian_filter(rng.normal(size=(3,) + geom.shape), (0, 2, 2), mode="wrap")
        img = img + texture * tex / (tex.std() + 1e-12)
    if noise > 0:
        img = img + noise * rng.normal(size=img.shape)
    return np.clip(img, 0.0, 1.0)
