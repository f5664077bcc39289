"""PNG panoramas and maps, dataset manifests.

Manifest JSON::

    {
      "width": 256, "height": 128,
      "records": [
        {"id": "room000", "panorama": "room000.png", "labels": "room000.json",
         "prediction": {"edge": "room000_edge.cflt", "corner": "room000_corner.cflt",
                        "layout": "room000_pred.json"}}
      ]
    }

Paths are relative to the manifest file; ``prediction`` and each of its keys
are optional.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import tensorio
from .layout import LayoutModel
from .sphere import ImageGeometry

DEFAULT_SIZE = (256, 128)


def read_panorama(path, size: tuple[int, int] | None = DEFAULT_SIZE) -> np.ndarray:
    """8-bit RGB PNG as ``(3, H, W)`` floats in [0, 1], resampled to ``size`` = (W, H) if given."""
    img = Image.open(path).convert("RGB")
    if size is not None and img.size != tuple(size):
        img = img.resize(tuple(size), Image.BILINEAR)
    return np.asarray(img, dtype=np.float64).transpose(2, 0, 1) / 255.0


def to_uint8(a: np.ndarray) -> np.ndarray:
    return np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_rgb(path, img: np.ndarray) -> None:
    Image.fromarray(to_uint8(np.asarray(img).transpose(1, 2, 0)), mode="RGB").save(path, format="PNG")


def write_gray(path, m: np.ndarray) -> None:
    Image.fromarray(to_uint8(m), mode="L").save(path, format="PNG")


def read_map(path) -> np.ndarray:
    """Probability map from a tensor file or an 8-bit gray PNG (scaled to [0, 1])."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        return np.asarray(Image.open(path).convert("L"), dtype=np.float64) / 255.0
    return tensorio.load(path).astype(np.float64)


def rescale_layout(layout: LayoutModel, geom: ImageGeometry) -> LayoutModel:
    """Express corner labels in another resolution of the same panorama."""
    src = layout.geometry
    if (src.width, src.height) == (geom.width, geom.height):
        return layout
    walls = layout.walls * np.array([geom.width / src.width, geom.height / src.height])
    return LayoutModel(geom, walls, layout.closed, layout.validate)


def load_labels(path, geom: ImageGeometry | None = None, validate: bool = True) -> LayoutModel:
    layout = LayoutModel.load(path, validate)
    return rescale_layout(layout, geom) if geom is not None else layout


def dump_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


@dataclass
class Record:
    id: str
    panorama: Path | None = None
    labels: Path | None = None
    prediction: dict[str, Path] = field(default_factory=dict)


@dataclass
class Manifest:
    geometry: ImageGeometry
    records: list[Record]
    root: Path = Path(".")

    @classmethod
    def load(cls, path, check_files: bool = True) -> "Manifest":
        path = Path(path)
        doc = json.loads(path.read_text())
        root = path.parent
        geom = ImageGeometry(int(doc.get("width", DEFAULT_SIZE[0])), int(doc.get("height", DEFAULT_SIZE[1])))
        records = []
        seen = set()
        for i, r in enumerate(doc["records"]):
            rid = str(r.get("id", f"{i:04d}"))
            if rid in seen:
                raise ValueError(f"duplicate record id {rid!r}")
            seen.add(rid)
            rec = Record(
                rid,
                root / r["panorama"] if r.get("panorama") else None,
                root / r["labels"] if r.get("labels") else None,
                {k: root / v for k, v in sorted(r.get("prediction", {}).items())},
            )
            if check_files:
                for p in [rec.panorama, rec.labels, *rec.prediction.values()]:
                    if p is not None and not p.exists():
                        raise FileNotFoundError(f"record {rid}: missing file {p}")
            records.append(rec)
        records.sort(key=lambda r: r.id)
        return cls(geom, records, root)

    def to_json(self) -> dict:
        def rel(p):
            return Path(os.path.relpath(p, self.root)).as_posix()

        out = []
        for r in sorted(self.records, key=lambda r: r.id):
            d = {"id": r.id}
            if r.panorama is not None:
                d["panorama"] = rel(r.panorama)
            if r.labels is not None:
                d["labels"] = rel(r.labels)
            if r.prediction:
                d["prediction"] = {k: rel(v) for k, v in sorted(r.prediction.items())}
            out.append(d)
        return {"width": self.geometry.width, "height": self.geometry.height, "records": out}

    def save(self, path) -> None:
        dump_json(path, self.to_json())
