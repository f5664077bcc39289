import numpy as np
import pytest

from panolayout import raycast, sphere, synth
from panolayout.layout import LayoutError
from panolayout.sphere import ImageGeometry


def test_axis_rays_in_box():
    room = synth.box_room(2.0, 3.0, 1.5)
    rays = np.array([[0, 1, 0], [0, -1, 0], [1, 0, 0], [0, 0, 1], [0, 0, -1.0]])
    surf, t = raycast.cast(rays, room)
    assert surf[0] == raycast.CEILING and t[0] == pytest.approx(1.5)
    assert surf[1] == raycast.FLOOR and t[1] == pytest.approx(1.0)
    np.testing.assert_allclose(t[2:], [2.0, 3.0, 3.0])
    assert np.all(surf[2:] >= raycast.WALL0)


def test_camera_offset_and_bounds():
    room = synth.box_room(2.0, 2.0, 1.0)
    _, t = raycast.cast(np.array([[0, -1.0, 0]]), room, camera_y=0.5)
    assert t[0] == pytest.approx(1.5)
    with pytest.raises(LayoutError):
        raycast.cast(np.array([[0, 1.0, 0]]), room, camera_y=1.0)


def test_hit_points_lie_on_surfaces(room):
    geom = ImageGeometry(64, 32)
    rays = sphere.pixel_rays(geom)
    surf, t = raycast.cast(rays, room)
    pts = rays * t[..., None]
    np.testing.assert_allclose(pts[surf == raycast.CEILING][:, 1], room.ceiling_height, atol=1e-9)
    np.testing.assert_allclose(pts[surf == raycast.FLOOR][:, 1], -1.0, atol=1e-9)
    floor = raycast.left_to_right(room)
    for k in range(len(floor)):
        sel = surf == raycast.WALL0 + k
        a, b = floor[k], floor[(k + 1) % len(floor)]
        e = b - a
        cross = (pts[sel][:, 0] - a[0]) * e[1] - (pts[sel][:, 2] - a[1]) * e[0]
        np.testing.assert_allclose(cross, 0.0, atol=1e-9)


def test_wall_rank_orders_by_longitude(room):
    floor = raycast.left_to_right(room)
    rank = raycast.wall_rank(floor)
    phi = np.arctan2(floor[:, 0], floor[:, 1])
    assert list(np.argsort(phi)) == list(np.argsort(rank))
    # oriented so longitude increases along the polygon
    steps = np.mod(np.diff(np.append(phi, phi[0])), 2 * np.pi)
    assert np.all(steps < np.pi)
