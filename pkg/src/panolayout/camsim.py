"""Camera rotation and vertical translation of panoramas and their labels.

Images are warped destination-first: every output pixel casts its ray,
finds where it came from in the source panorama and samples it bilinearly
with column wrap. Translations treat the scene texture as painted on the
layout surfaces, so occlusions from the new viewpoint are ignored.

``t_y`` is the upward shift of the scene relative to the camera, as a
fraction of the floor-to-ceiling height; ``t_y > 0`` therefore lowers the
camera toward the floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layout3d, raycast, sphere
from ._backend import kernels
from .layout import Layout3D, LayoutError, LayoutModel
from .sampling import snap
from .sphere import ImageGeometry

MAX_TRANSLATION = 0.3
MAX_ROTATION = np.deg2rad(30.0)


class PoleSingularityError(LayoutError):
    """A transformed corner lands exactly on a pole, where longitude is undefined."""


@dataclass(frozen=True)
class RigidPerturbation:
    """Pitch (about x), yaw (about y) in radians and vertical scene shift ``t_y``.

    Labels and images are translated first, then rotated.
    """

    pitch: float = 0.0
    yaw: float = 0.0
    t_y: float = 0.0
    max_translation: float = field(default=MAX_TRANSLATION, repr=False)

    def __post_init__(self):
        if abs(self.t_y) > self.max_translation:
            raise ValueError(f"|t_y| = {abs(self.t_y)} exceeds {self.max_translation}")
        object.__setattr__(self, "pitch", float(sphere.wrap_longitude(self.pitch)))
        object.__setattr__(self, "yaw", float(sphere.wrap_longitude(self.yaw)))

    @property
    def rotation(self) -> np.ndarray:
        """Matrix taking source directions to destination directions."""
        return sphere.rot_y(self.yaw) @ sphere.rot_x(self.pitch)

    @property
    def is_identity(self) -> bool:
        return self.pitch == 0.0 and self.yaw == 0.0 and self.t_y == 0.0


def _as_chw(img: np.ndarray):
    img = np.asarray(img, dtype=np.float64)
    return (img[None], True) if img.ndim == 2 else (img, False)


def _sample(img: np.ndarray, geom: ImageGeometry, dirs: np.ndarray) -> np.ndarray:
    u, v = sphere.angles_to_pixel(geom, sphere.unit_vector_to_angles(dirs))
    # coordinates within 1e-9 of a pixel centre are taken as exact
    u = snap(np.mod(np.asarray(u), geom.width)).ravel()
    v = snap(np.asarray(v)).ravel()
    out = kernels.warp_bilinear(np.ascontiguousarray(img), np.ascontiguousarray(u), np.ascontiguousarray(v))
    return out.reshape((img.shape[0],) + geom.shape)


def rotate_panorama(img: np.ndarray, rotation) -> np.ndarray:
    """Warp a panorama by a rotation (3x3 matrix or :class:`RigidPerturbation`)."""
    chw, squeeze = _as_chw(img)
    geom = ImageGeometry(chw.shape[2], chw.shape[1])
    rot = rotation.rotation if isinstance(rotation, RigidPerturbation) else np.asarray(rotation, dtype=np.float64)
    if np.array_equal(rot, np.eye(3)):
        out = chw.copy()
    else:
        # destination ray d came from source direction R^T d
        out = _sample(chw, geom, sphere.pixel_rays(geom) @ rot)
    return out[0] if squeeze else out


def depth_from_layout(geom: ImageGeometry, l3d: Layout3D, camera_y: float = 0.0) -> np.ndarray:
    """Distance along each pixel ray to the first layout surface, in camera heights."""
    _, t = raycast.cast_pixels(geom, l3d, camera_y)
    return t


def translate_panorama(img: np.ndarray, l3d: Layout3D, t_y: float) -> np.ndarray:
    """Re-render a panorama after shifting the scene up by ``t_y`` room heights."""
    chw, squeeze = _as_chw(img)
    geom = ImageGeometry(chw.shape[2], chw.shape[1])
    if t_y == 0:
        out = chw.copy()
    else:
        cam = -t_y * l3d.room_height
        rays = sphere.pixel_rays(geom)
        _, t = raycast.cast(rays, l3d, cam)
        pts = rays * t[..., None] + np.array([0.0, cam, 0.0])
        out = _sample(chw, geom, pts / np.linalg.norm(pts, axis=-1, keepdims=True))
    return out[0] if squeeze else out


def perturb_panorama(img: np.ndarray, l3d: Layout3D | None, pert: RigidPerturbation) -> np.ndarray:
    out = img
    if pert.t_y != 0:
        if l3d is None:
            raise ValueError("translation needs the room layout")
        out = translate_panorama(out, l3d, pert.t_y)
    if pert.pitch != 0 or pert.yaw != 0:
        out = rotate_panorama(out, pert)
    return out


# --- labels ---------------------------------------------------------------

def _corner_points(layout: LayoutModel) -> tuple[np.ndarray, Layout3D]:
    """3D corner points ``(n, 2, 3)`` (ceiling, floor) of a ceiling-floor consistent layout."""
    geom = layout.geometry
    l3d = layout3d.reconstruct_3d(geom, layout)
    f = l3d.floor
    c = layout3d.ceiling_points(geom, layout.ceiling, l3d.ceiling_height)
    n = len(f)
    floor3 = np.column_stack([f[:, 0], np.full(n, -1.0), f[:, 1]])
    ceil3 = np.column_stack([c[:, 0], np.full(n, l3d.ceiling_height), c[:, 1]])
    return np.stack([ceil3, floor3], axis=1), l3d


def _project(geom: ImageGeometry, pts: np.ndarray) -> np.ndarray:
    dirs = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    if np.any(np.hypot(dirs[..., 0], dirs[..., 2]) < 1e-12):
        raise PoleSingularityError("a corner was moved onto a pole")
    return layout3d.project_points(geom, dirs)


def transform_labels(labels, pert: RigidPerturbation, geom: ImageGeometry | None = None):
    """Exact label transform matching :func:`perturb_panorama`.

    ``labels`` is a :class:`LayoutModel` (returns a LayoutModel, unvalidated
    since pitch breaks the above/below-horizon rule) or a :class:`Layout3D`
    (translation only; returns the Layout3D renormalised to unit camera height).
    """
    if isinstance(labels, Layout3D):
        if pert.pitch != 0:
            raise ValueError("a pitched camera cannot be described by a Layout3D")
        l3d = labels
        cam = -pert.t_y * l3d.room_height
        s = 1.0 / (1.0 + cam)
        out = Layout3D(l3d.floor * s, (l3d.ceiling_height - cam) * s)
        return layout3d.rotate_layout(out, pert.yaw) if pert.yaw != 0 else out

    layout = labels
    geom = geom or layout.geometry
    if pert.is_identity:
        return LayoutModel(geom, layout.walls.copy(), layout.closed, validate=False)
    if pert.t_y != 0:
        pts, l3d = _corner_points(layout)
        pts = pts - np.array([0.0, -pert.t_y * l3d.room_height, 0.0])
    else:
        pts = layout3d.corner_rays(geom, layout.walls)
    pts = pts @ pert.rotation.T
    return LayoutModel(geom, _project(geom, pts), layout.closed, validate=False)


def inverse_transform_labels(labels, pert: RigidPerturbation, geom: ImageGeometry | None = None):
    """Undo :func:`transform_labels` (rotation inverted first, then translation)."""
    if isinstance(labels, Layout3D):
        out = layout3d.rotate_layout(labels, -pert.yaw) if pert.yaw != 0 else labels
        return transform_labels(out, RigidPerturbation(t_y=-pert.t_y, max_translation=pert.max_translation))
    geom = geom or labels.geometry
    walls = labels.walls
    if pert.pitch != 0 or pert.yaw != 0:
        dirs = layout3d.corner_rays(geom, walls) @ pert.rotation
        walls = _project(geom, dirs)
    out = LayoutModel(geom, walls, labels.closed, validate=False)
    if pert.t_y != 0:
        out = transform_labels(out, RigidPerturbation(t_y=-pert.t_y, max_translation=pert.max_translation))
    return out


# --- robustness protocol --------------------------------------------------

def sample_perturbations(kind: str, lo: float, hi: float, steps: int = 11) -> list[RigidPerturbation]:
    """Evenly spaced perturbations from ``lo`` to ``hi`` inclusive.

    ``kind`` is "pitch" or "yaw" (radians) or "translation" (room heights).
    """
    values = np.linspace(lo, hi, steps)
    if kind == "pitch":
        return [RigidPerturbation(pitch=float(a)) for a in values]
    if kind == "yaw":
        return [RigidPerturbation(yaw=float(a)) for a in values]
    if kind == "translation":
        limit = max(MAX_TRANSLATION, abs(lo), abs(hi))
        return [RigidPerturbation(t_y=float(t), max_translation=limit) for t in values]
    raise ValueError(f"unknown perturbation kind {kind!r}")


def yaw_columns(geom: ImageGeometry, yaw: float, tol: float = 1e-9) -> int | None:
    """Column shift equal to ``yaw`` when it is a whole number of columns, else None."""
    cols = yaw * geom.width / sphere.TWO_PI
    k = round(cols)
    return int(k) if abs(cols - k) <= tol else None


def robustness_report(predict, image: np.ndarray, l3d: Layout3D, perturbations,
                      threshold: float = 0.5, thickness: int = 3, sigma: float = 2.0) -> dict:
    """Map metrics of ``predict`` over perturbed copies of one panorama.

    ``predict`` maps an image ``(C, H, W)`` to ``(edge, corner)`` probability
    maps at the same resolution. Ground truth is rendered from the exactly
    transformed room. Returns per-sample metrics plus mean and std per metric.
    """
    from . import gt as gtmod
    from .metrics import map_metrics

    chw, _ = _as_chw(image)
    geom = ImageGeometry(chw.shape[2], chw.shape[1])
    samples = []
    for pert in perturbations:
        img = perturb_panorama(chw, l3d, pert)
        cam = -pert.t_y * l3d.room_height
        shift = yaw_columns(geom, pert.yaw)
        if shift is None:
            maps = gtmod.render_gt_maps_3d(geom, l3d, rotation=pert.rotation, camera_offset=cam,
                                           thickness=thickness, sigma=sigma)
            edge_gt, corner_gt = maps.edge, maps.corner
        else:
            # a whole-column yaw is a pure column roll of the unrotated maps
            maps = gtmod.render_gt_maps_3d(geom, l3d, rotation=sphere.rot_x(pert.pitch), camera_offset=cam,
                                           thickness=thickness, sigma=sigma)
            edge_gt, corner_gt = np.roll(maps.edge, shift, axis=1), np.roll(maps.corner, shift, axis=1)
        edge, corner = predict(img)
        samples.append({
            "perturbation": {"pitch": pert.pitch, "yaw": pert.yaw, "t_y": pert.t_y},
            "edge": map_metrics(edge, edge_gt, threshold),
            "corner": map_metrics(corner, corner_gt, threshold),
        })
    summary = {}
    for m in ("edge", "corner"):
        summary[m] = {}
        for k in samples[0][m]:
            vals = np.array([s[m][k] for s in samples])
            summary[m][k] = {"mean": float(vals.mean()), "std": float(vals.std())}
    return {"samples": samples, "summary": summary}


def robustness_table(rows: dict[str, dict]) -> str:
    """Table of ``mean +- std`` percentages for F1, Acc and IoU of edges and corners."""
    cols = [(m, k) for m in ("edge", "corner") for k in ("F1", "Acc", "IoU")]
    name_w = max([len("setting")] + [len(n) for n in rows])
    head = f"{'setting':<{name_w}}" + "".join(f"{m[:4] + ' ' + k:>18}" for m, k in cols)
    lines = [head, "-" * len(head)]
    for name, rep in rows.items():
        cells = []
        for m, k in cols:
            s = rep["summary"][m][k]
            cells.append(f"{100 * s['mean']:>9.2f} +- {100 * s['std']:<5.2f}")
        lines.append(f"{name:<{name_w}}" + "".join(f"{c:>18}" for c in cells))
    return "\n".join(lines)
