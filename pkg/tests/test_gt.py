import numpy as np
import pytest

from panolayout import gt, layout3d, synth
from panolayout.sphere import ImageGeometry

G = ImageGeometry(256, 128)


def test_maps_shape_and_range(room):
    maps = gt.render_gt_maps(synth.labels_for(G, room))
    for m in (maps.edge, maps.corner):
        assert m.shape == (128, 256)
        assert m.min() >= 0 and m.max() == pytest.approx(1.0)
    assert maps.as_array().shape == (2, 128, 256)


def test_corner_peaks_at_labels(room):
    lay = synth.labels_for(G, room)
    maps = gt.render_gt_maps(lay)
    for u, v in lay.corners:
        assert maps.corner[int(v), int(u) % 256] == pytest.approx(1.0)


def test_positive_fraction_at_defaults():
    rng = np.random.default_rng(0)
    for _ in range(5):
        maps = gt.render_gt_maps(synth.labels_for(G, synth.random_room(rng)))
        assert gt.positive_fraction(maps.edge) <= 0.10
        assert gt.positive_fraction(maps.corner) <= 0.10


def test_edge_map_deterministic(room):
    lay = synth.labels_for(G, room)
    np.testing.assert_array_equal(gt.render_gt_maps(lay).edge, gt.render_gt_maps(lay).edge)


def test_edges_follow_projected_boundaries():
    lay = synth.labels_for(G, synth.box_room(1.5, 1.5, 1.0))
    maps = gt.render_gt_maps(lay, thickness=1, sigma=0.0)
    # vertical wall boundaries are full columns between ceiling and floor corners
    for (uc, vc), (uf, vf) in lay.walls:
        col = maps.edge[int(vc):int(vf) + 1, int(uc)]
        assert np.all(col == 1.0)


def test_edge_map_wraps_columns():
    mask = np.zeros((16, 32), dtype=bool)
    mask[8, 0] = True
    m = gt.edge_map_from_mask(mask, thickness=3, sigma=1.0)
    assert m[8, 31] == pytest.approx(m[8, 1])


def test_3d_render_matches_label_render(room):
    lay = layout3d.layout_to_model(G, room)
    a = gt.render_gt_maps(lay)
    b = gt.render_gt_maps_3d(G, room)
    assert np.abs(a.edge - b.edge).max() < 1e-6
    assert np.abs(a.corner - b.corner).max() < 1e-6


def test_random_erase(rng):
    img = rng.uniform(size=(3, 32, 64))
    out = gt.random_erase(img, seed=3)
    changed = np.any(out != img, axis=0)
    frac = changed.mean()
    assert 0.02 <= frac <= 0.2
    np.testing.assert_array_equal(out, gt.random_erase(img, seed=3))
    # erased region is a filled rectangle at the channel means
    vs, us = np.nonzero(changed)
    np.testing.assert_allclose(out[:, vs[0], us[0]], img.reshape(3, -1).mean(axis=1))
    assert not np.array_equal(out, gt.random_erase(img, seed=4))


def test_horizontal_rotate_and_mirror(room):
    lay = synth.labels_for(G, room)
    img = synth.panorama(G, room, np.random.default_rng(0))
    rot_img, rot_lay = gt.augment_horizontal(img, lay, "rotate", 40)
    np.testing.assert_array_equal(rot_img, np.roll(img, 40, axis=-1))
    maps = gt.render_gt_maps(rot_lay)
    np.testing.assert_allclose(maps.corner, np.roll(gt.render_gt_maps(lay).corner, 40, axis=1), atol=1e-12)
    mir_img, mir_lay = gt.augment_horizontal(img, lay, "mirror")
    np.testing.assert_array_equal(mir_img, img[..., ::-1])
    assert mir_lay.walls.shape == lay.walls.shape
    mir_maps = gt.render_gt_maps(mir_lay)
    np.testing.assert_allclose(mir_maps.corner, gt.render_gt_maps(lay).corner[:, ::-1], atol=1e-12)
    with pytest.raises(ValueError):
        gt.augment_horizontal(img, lay, "rotate", 1.5)
    with pytest.raises(ValueError):
        gt.augment_horizontal(img, lay, "flip")
