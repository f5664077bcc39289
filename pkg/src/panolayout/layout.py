"""Layout containers and their JSON forms.

``LayoutModel`` holds labelled ceiling/floor corner pairs in panorama pixels;
``Layout3D`` holds the floor polygon at unit camera height plus the ceiling
height above the camera. Coordinates follow :mod:`panolayout.sphere`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import polygon
from .sphere import ImageGeometry


class LayoutError(ValueError):
    """Invalid or degenerate layout."""


def _cyclic_increasing(u: np.ndarray) -> bool:
    """True when ``u`` increases strictly around the circle with one wrap at most."""
    if len(u) < 2:
        return True
    steps = np.diff(np.append(u, u[0]))
    return int(np.count_nonzero(steps <= 0)) <= 1 and np.all(steps != 0)


@dataclass
class LayoutModel:
    """Ceiling/floor corner pairs, left to right, shape ``(n, 2, 2)``.

    ``walls[k, 0]`` is the ceiling corner ``(u, v)`` and ``walls[k, 1]`` the
    floor corner of the k-th wall boundary. Wall k spans boundary k to k+1;
    the last wall closes across the seam. Ordering is cyclic: the list may
    start at any boundary but longitudes must then increase around the circle.
    """

    geometry: ImageGeometry
    walls: np.ndarray
    closed: bool = True
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.walls = np.asarray(self.walls, dtype=np.float64).reshape(-1, 2, 2)
        if self.validate:
            self.check()

    def check(self) -> None:
        w, h = self.geometry.width, self.geometry.height
        if len(self.walls) < 3:
            raise LayoutError(f"a layout needs at least 3 walls, got {len(self.walls)}")
        ceil, floor = self.ceiling, self.floor
        if np.any(ceil[:, 1] >= floor[:, 1]):
            raise LayoutError("every ceiling corner must lie above its floor corner")
        if np.any(ceil[:, 1] >= h / 2) or np.any(floor[:, 1] <= h / 2):
            raise LayoutError("ceiling corners must be above the horizon and floor corners below")
        if np.any((self.walls[..., 0] < 0) | (self.walls[..., 0] >= w)):
            raise LayoutError("corner u outside [0, W)")
        if not _cyclic_increasing(ceil[:, 0]):
            raise LayoutError("walls are not ordered left to right by ceiling longitude")

    @property
    def ceiling(self) -> np.ndarray:
        return self.walls[:, 0]

    @property
    def floor(self) -> np.ndarray:
        return self.walls[:, 1]

    @property
    def corners(self) -> np.ndarray:
        """All corners, ceiling first, shape ``(2n, 2)``."""
        return np.concatenate([self.ceiling, self.floor])

    def sorted(self) -> "LayoutModel":
        """Copy with walls starting at the smallest ceiling u."""
        order = np.argsort(self.ceiling[:, 0], kind="stable")
        return LayoutModel(self.geometry, self.walls[order].copy(), self.closed, self.validate)

    def to_json(self) -> dict:
        return {
            "width": self.geometry.width,
            "height": self.geometry.height,
            "walls": [{"ceil": [float(c[0]), float(c[1])], "floor": [float(f[0]), float(f[1])]}
                      for c, f in self.walls],
        }

    @classmethod
    def from_json(cls, doc: dict, validate: bool = True) -> "LayoutModel":
        try:
            geom = ImageGeometry(int(doc["width"]), int(doc["height"]))
            walls = [[w["ceil"], w["floor"]] for w in doc["walls"]]
        except (KeyError, TypeError) as exc:
            raise LayoutError(f"malformed layout document: {exc}") from exc
        return cls(geom, np.array(walls, dtype=np.float64), validate=validate)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path, validate: bool = True) -> "LayoutModel":
        return cls.from_json(json.loads(Path(path).read_text()), validate)


@dataclass
class Layout3D:
    """Floor polygon ``(n, 2)`` of ``(x, z)`` at y = -1 and ceiling plane y = ``ceiling_height``.

    Units are camera heights, so every quantity is defined up to scale.
    """

    floor: np.ndarray
    ceiling_height: float

    def __post_init__(self):
        self.floor = np.asarray(self.floor, dtype=np.float64).reshape(-1, 2)
        self.ceiling_height = float(self.ceiling_height)
        if len(self.floor) < 3:
            raise LayoutError("floor polygon needs at least 3 vertices")
        if not self.ceiling_height > 0:
            raise LayoutError(f"ceiling height must be positive, got {self.ceiling_height}")
        if abs(polygon.area(self.floor)) <= 1e-12:
            raise LayoutError("degenerate floor polygon (zero area)")
        if not polygon.is_simple(self.floor):
            raise LayoutError("floor polygon is self-intersecting")

    @property
    def room_height(self) -> float:
        """Floor-to-ceiling height."""
        return self.ceiling_height + 1.0

    @property
    def area(self) -> float:
        return abs(polygon.area(self.floor))

    @property
    def volume(self) -> float:
        return self.area * self.room_height

    def contains_camera(self) -> bool:
        return polygon.contains(self.floor, np.zeros(2))

    def to_json(self) -> dict:
        return {"floor": self.floor.tolist(), "ceiling_height": self.ceiling_height}

    @classmethod
    def from_json(cls, doc: dict) -> "Layout3D":
        try:
            return cls(np.array(doc["floor"], dtype=np.float64), float(doc["ceiling_height"]))
        except (KeyError, TypeError) as exc:
            raise LayoutError(f"malformed Layout3D document: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Layout3D":
        return cls.from_json(json.loads(Path(path).read_text()))
