import json

import numpy as np
import pytest

from panolayout import files, synth
from panolayout.sphere import ImageGeometry


def test_png_round_trip(tmp_path, rng):
    img = np.round(rng.uniform(size=(3, 16, 32)) * 255) / 255
    files.write_rgb(tmp_path / "a.png", img)
    np.testing.assert_array_equal(files.read_panorama(tmp_path / "a.png", None), img)
    assert files.read_panorama(tmp_path / "a.png", (64, 32)).shape == (3, 32, 64)
    files.write_gray(tmp_path / "m.png", img[0])
    np.testing.assert_array_equal(files.read_map(tmp_path / "m.png"), img[0])


def test_rescale_layout(room):
    small = synth.labels_for(ImageGeometry(128, 64), room, quantize=False)
    big = files.rescale_layout(small, ImageGeometry(256, 128))
    np.testing.assert_allclose(big.walls, small.walls * 2)
    assert files.rescale_layout(small, ImageGeometry(128, 64)) is small


def test_manifest_round_trip(tmp_path):
    (tmp_path / "d").mkdir()
    for name in ("b.png", "b.json", "a.png"):
        (tmp_path / "d" / name).write_text("x")
    doc = {"width": 128, "height": 64, "records": [
        {"id": "b", "panorama": "d/b.png", "labels": "d/b.json"},
        {"id": "a", "panorama": "d/a.png"},
    ]}
    (tmp_path / "m.json").write_text(json.dumps(doc))
    man = files.Manifest.load(tmp_path / "m.json")
    assert [r.id for r in man.records] == ["a", "b"]
    assert man.geometry.width == 128
    assert man.records[1].labels == tmp_path / "d" / "b.json"
    assert man.to_json()["records"][1] == {"id": "b", "labels": "d/b.json", "panorama": "d/b.png"}


def test_manifest_errors(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"records": [{"id": "a", "panorama": "nope.png"}]}))
    with pytest.raises(FileNotFoundError):
        files.Manifest.load(tmp_path / "m.json")
    (tmp_path / "m.json").write_text(json.dumps({"records": [{"id": "a"}, {"id": "a"}]}))
    with pytest.raises(ValueError, match="duplicate"):
        files.Manifest.load(tmp_path / "m.json")
