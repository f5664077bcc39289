"""Ground-truth edge/corner maps and training-time augmentation.

Edges are the projections of the straight 3D boundaries of the room: the
vertical wall-wall lines and the wall-ceiling / wall-floor segments, each
densely sampled in 3D so the curved image trace has no gaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import layout3d, sphere
from .layout import Layout3D, LayoutModel
from .sphere import ImageGeometry

DEFAULT_THICKNESS = 3
DEFAULT_SIGMA = 2.0
MAX_SUBDIVISIONS = 16


@dataclass
class GroundTruthMaps:
    edge: np.ndarray
    corner: np.ndarray

    def as_array(self) -> np.ndarray:
        """Stack as ``(2, H, W)`` in (edge, corner) order."""
        return np.stack([self.edge, self.corner])


def room_segments(floor_xz: np.ndarray, ceil_xz: np.ndarray, ceiling_height: float) -> np.ndarray:
    """3D boundary segments ``(3n, 2, 3)``: verticals, ceiling loop, floor loop."""
    n = len(floor_xz)
    f3 = np.column_stack([floor_xz[:, 0], np.full(n, -1.0), floor_xz[:, 1]])
    c3 = np.column_stack([ceil_xz[:, 0], np.full(n, ceiling_height), ceil_xz[:, 1]])
    nxt = np.roll(np.arange(n), -1)
    verticals = np.stack([c3, f3], axis=1)
    ceiling = np.stack([c3, c3[nxt]], axis=1)
    floor = np.stack([f3, f3[nxt]], axis=1)
    return np.concatenate([verticals, ceiling, floor])


def layout_segments(layout: LayoutModel) -> np.ndarray:
    """3D boundary segments implied by labelled corners.

    Floor corners land on y = -1; ceiling corners on the ceiling plane at the
    median per-wall height, so slightly inconsistent labels still render at
    their labelled pixels.
    """
    geom = layout.geometry
    l3d = layout3d.reconstruct_3d(geom, layout)
    ceil_xz = layout3d.ceiling_points(geom, layout.ceiling, l3d.ceiling_height)
    return room_segments(l3d.floor, ceil_xz, l3d.ceiling_height)


def _trace(geom: ImageGeometry, seg: np.ndarray) -> np.ndarray:
    """Projected pixels along one 3D segment, spaced at most half a pixel apart."""
    w = geom.width
    n = 64
    for _ in range(MAX_SUBDIVISIONS):
        t = np.linspace(0.0, 1.0, n)[:, None]
        pts = seg[0] * (1.0 - t) + seg[1] * t
        px = layout3d.project_points(geom, pts)
        du = np.abs(np.diff(px[:, 0]))
        du = np.minimum(du, w - du)
        dv = np.abs(np.diff(px[:, 1]))
        if max(du.max(), dv.max()) <= 0.5:
            break
        n *= 2
    return px


def rasterize_segments(geom: ImageGeometry, segments: np.ndarray) -> np.ndarray:
    """Boolean ``(H, W)`` mask of the pixels hit by the projected segments."""
    mask = np.zeros(geom.shape, dtype=bool)
    for seg in segments:
        px = _trace(geom, seg)
        iu = np.mod(np.round(px[:, 0]).astype(np.intp), geom.width)
        iv = np.clip(np.round(px[:, 1]).astype(np.intp), 0, geom.height - 1)
        mask[iv, iu] = True
    return mask


def edge_map_from_mask(mask: np.ndarray, thickness: int = DEFAULT_THICKNESS,
                       sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Thicken, blur (wrapping columns) and rescale to peak 1."""
    m = mask.astype(np.float64)
    if thickness > 1:
        m = ndimage.maximum_filter(m, size=thickness, mode=("constant", "wrap"))
    if sigma > 0:
        m = ndimage.gaussian_filter(m, sigma, mode=("nearest", "wrap"))
    peak = m.max()
    return m / peak if peak > 0 else m


def corner_map(geom: ImageGeometry, corners: np.ndarray, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Isotropic Gaussians of peak 1 centred on each corner's nearest pixel."""
    out = np.zeros(geom.shape)
    if len(corners) == 0:
        return out
    sigma = max(sigma, 1e-6)
    centers = np.round(np.asarray(corners, dtype=np.float64))
    centers[:, 0] = np.mod(centers[:, 0], geom.width)
    centers[:, 1] = np.clip(centers[:, 1], 0, geom.height - 1)
    vv, uu = np.meshgrid(np.arange(geom.height), np.arange(geom.width), indexing="ij")
    for cu, cv in centers:
        du = np.abs(uu - cu)
        du = np.minimum(du, geom.width - du)
        out = np.maximum(out, np.exp(-(du ** 2 + (vv - cv) ** 2) / (2.0 * sigma ** 2)))
    return out


def render_gt_maps(layout: LayoutModel, thickness: int = DEFAULT_THICKNESS,
                   sigma: float = DEFAULT_SIGMA) -> GroundTruthMaps:
    """Edge and corner maps for labelled corners (see :func:`layout_segments`)."""
    layout.check()
    geom = layout.geometry
    mask = rasterize_segments(geom, layout_segments(layout))
    return GroundTruthMaps(edge_map_from_mask(mask, thickness, sigma),
                           corner_map(geom, layout.corners, sigma))


def render_gt_maps_3d(geom: ImageGeometry, l3d: Layout3D, rotation: np.ndarray | None = None,
                      camera_offset: float = 0.0, thickness: int = DEFAULT_THICKNESS,
                      sigma: float = DEFAULT_SIGMA) -> GroundTruthMaps:
    """Maps for a 3D room seen from a camera raised by ``camera_offset`` and rotated by ``rotation``.

    ``rotation`` maps scene directions to image directions.
    """
    segs = room_segments(l3d.floor, l3d.floor, l3d.ceiling_height)
    segs = segs - np.array([0.0, camera_offset, 0.0])
    n = len(l3d.floor)
    corners3 = np.concatenate([segs[:n, 0], segs[:n, 1]])
    if rotation is not None:
        segs = segs @ np.asarray(rotation).T
        corners3 = corners3 @ np.asarray(rotation).T
    mask = rasterize_segments(geom, segs)
    return GroundTruthMaps(edge_map_from_mask(mask, thickness, sigma),
                           corner_map(geom, layout3d.project_points(geom, corners3), sigma))


def positive_fraction(m: np.ndarray, threshold: float = 0.5) -> float:
    return float(np.count_nonzero(m > threshold)) / m.size


# --- augmentation ---------------------------------------------------------

def random_erase(image: np.ndarray, seed: int, scale: tuple[float, float] = (0.02, 0.2),
                 aspect: tuple[float, float] = (0.3, 3.3), count: int = 1,
                 fill: np.ndarray | None = None, max_tries: int = 100) -> np.ndarray:
    """Blank ``count`` random axis-aligned rectangles of ``image`` ``(C, H, W)``.

    Each rectangle covers an area fraction drawn from ``scale`` with a
    height/width ratio drawn log-uniformly from ``aspect``. ``fill`` is a
    per-channel value (defaults to the image's channel means).
    """
    image = np.asarray(image, dtype=np.float64)
    squeeze = image.ndim == 2
    img = image[None].copy() if squeeze else image.copy()
    n_ch, height, width = img.shape
    if fill is None:
        fill = img.reshape(n_ch, -1).mean(axis=1)
    fill = np.broadcast_to(np.asarray(fill, dtype=np.float64), (n_ch,))
    rng = np.random.default_rng(seed)
    total = height * width
    for _ in range(count):
        for _ in range(max_tries):
            target = rng.uniform(*scale) * total
            ratio = np.exp(rng.uniform(np.log(aspect[0]), np.log(aspect[1])))
            h = int(round(np.sqrt(target * ratio)))
            w = int(round(np.sqrt(target / ratio)))
            if not (0 < h <= height and 0 < w <= width):
                continue
            if not scale[0] * total <= h * w <= scale[1] * total:
                continue
            top = int(rng.integers(0, height - h + 1))
            left = int(rng.integers(0, width - w + 1))
            img[:, top:top + h, left:left + w] = fill[:, None, None]
            break
    return img[0] if squeeze else img


def augment_horizontal(image: np.ndarray, layout: LayoutModel, mode: str = "rotate", shift: int = 0):
    """Horizontal mirror or rotation of a panorama and its labels.

    ``mode="rotate"`` rolls columns right by ``shift`` (integer) and moves corner
    u to ``(u + shift) mod W``; ``mode="mirror"`` reverses columns, maps
    ``u -> W - 1 - u`` and reverses the wall order. Walls are re-sorted by
    ceiling u in both cases.
    """
    w = layout.geometry.width
    walls = layout.walls.copy()
    if mode == "rotate":
        if int(shift) != shift:
            raise ValueError("rotation shift must be an integer number of columns")
        shift = int(shift) % w
        out = np.roll(image, shift, axis=-1)
        walls[..., 0] = np.mod(walls[..., 0] + shift, w)
    elif mode == "mirror":
        out = image[..., ::-1].copy()
        walls[..., 0] = np.mod(w - 1 - walls[..., 0], w)
        walls = walls[::-1]
    else:
        raise ValueError(f"unknown augmentation mode {mode!r}")
    order = np.argsort(walls[:, 0, 0], kind="stable")
    return out, LayoutModel(layout.geometry, walls[order], layout.closed, layout.validate)
