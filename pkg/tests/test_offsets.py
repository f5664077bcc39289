import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from panolayout import offsets, sphere
from panolayout.offsets import KernelSpec
from panolayout.sphere import ImageGeometry


def test_spec_validation():
    for bad in ((2, 0.1), (0, 0.1), (3, 0.0), (3, np.pi)):
        with pytest.raises(ValueError):
            KernelSpec(*bad)


def test_matching_fov(big_geom):
    spec = KernelSpec.matching(big_geom, 3)
    assert spec.fov == pytest.approx(3 * 2 * np.pi / 256)
    assert KernelSpec.matching(big_geom, 3, rate=2).fov == pytest.approx(2 * spec.fov)
    assert spec.distance == pytest.approx(3 / (2 * np.tan(spec.fov / 2)))


def test_grid_layout():
    spec = KernelSpec(3, 0.4)
    g = offsets.kernel_grid(spec)
    assert g.shape == (9, 3)
    np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0, atol=1e-15)
    np.testing.assert_array_equal(g[4], [0, 0, 1])
    # element (a=0, b=0) is up-left: negative x, positive y
    assert g[0, 0] < 0 and g[0, 1] > 0
    # element (a=1, b=2) is straight right
    assert g[5, 0] > 0 and g[5, 1] == 0


@pytest.mark.parametrize("r", [3, 5, 7])
def test_grid_angular_extent(r):
    spec = KernelSpec(r, 0.3)
    g = offsets.kernel_grid(spec)
    mid = g[(r * r) // 2 - (r - 1) // 2: (r * r) // 2 + (r - 1) // 2 + 1]
    span = np.arctan2(mid[-1, 0], mid[-1, 2]) - np.arctan2(mid[0, 0], mid[0, 2])
    # outermost sample centres sit (r-1)/2 units from the axis on a plane r / (2 tan(alpha/2)) away
    assert span == pytest.approx(2 * np.arctan((r - 1) / r * np.tan(spec.fov / 2)), abs=1e-12)
    # and the kernel's outer cell edges (+-r/2) span exactly alpha
    edge = np.arctan((r / 2) / spec.distance)
    assert 2 * edge == pytest.approx(spec.fov, abs=1e-12)


def test_equator_matches_regular_grid(big_geom):
    spec = KernelSpec.matching(big_geom, 3)
    field = offsets.offset_field(big_geom, spec)
    du = field.relative_u[64].reshape(3, 3)
    v = field.rows[64, :, 1].reshape(3, 3)
    np.testing.assert_allclose(du, np.tile([-1, 0, 1], (3, 1)), atol=0.02)
    np.testing.assert_allclose(v, 64 + np.array([[-1] * 3, [0] * 3, [1] * 3]), atol=0.02)


def test_high_latitude_spread(big_geom):
    spec = KernelSpec.matching(big_geom, 3)
    field = offsets.offset_field(big_geom, spec)
    v = 10
    theta = float(sphere.pixel_to_angles(big_geom, 0, v).theta)
    assert theta == pytest.approx(1.325, abs=0.001)
    spacing = field.relative_u[v, 5]
    assert abs(spacing - 1 / np.cos(theta)) <= 0.1 / np.cos(theta)
    assert spacing == pytest.approx(4.1, abs=0.1)


def test_field_agrees_with_direct_positions(geom):
    spec = KernelSpec.matching(geom, 3)
    field = offsets.offset_field(geom, spec)
    for u0 in (0, 5, 31, 63):
        for v in (0, 3, 16, 31):
            direct = offsets.sample_positions(geom, spec, u0, v)
            got = field.positions(u0, v)
            du = np.abs(direct[:, 0] - got[:, 0])
            du = np.minimum(du, geom.width - du)
            assert du.max() < 1e-9
            np.testing.assert_allclose(got[:, 1], direct[:, 1], atol=1e-9)


def test_row_constancy(geom):
    from panolayout import conv

    spec = KernelSpec.matching(geom, 3)
    field = offsets.offset_field(geom, spec)
    # one pattern per row: the sampling plan has no column axis at all
    plan = conv.sampling_plan(field)
    assert plan.base_u.shape == (geom.height, 9)
    for v in range(geom.height):
        base = field.positions(0, v)
        for u0 in (1, 17, 40):
            shifted = field.positions(u0, v)
            np.testing.assert_array_equal(shifted[:, 1], base[:, 1])
            d = np.mod(shifted[:, 0] - u0 - base[:, 0] + geom.width / 2, geom.width) - geom.width / 2
            assert np.abs(d).max() < 1e-12


@pytest.mark.parametrize("r", [3, 5])
def test_mirror_symmetries(big_geom, r):
    spec = KernelSpec.matching(big_geom, r)
    field = offsets.offset_field(big_geom, spec)
    h = big_geom.height
    du = field.relative_u.reshape(h, r, r)
    vv = field.rows[..., 1].reshape(h, r, r)
    w = big_geom.width
    # left/right: reversing b negates the column offset (mod W, since -W/2 == W/2), keeps the row
    np.testing.assert_array_equal(np.mod(du + du[:, :, ::-1], w), 0.0)
    np.testing.assert_array_equal(vv, vv[:, :, ::-1])
    # top/bottom: rows v and H - v are reflections about the equator (v = H/2)
    for v in range(1, h):
        np.testing.assert_array_equal(np.mod(du[v] - du[h - v, ::-1], w), 0.0)
        np.testing.assert_allclose(vv[v] - h / 2, -(vv[h - v, ::-1] - h / 2), atol=1e-12)


def test_field_is_read_only_and_cached(geom):
    spec = KernelSpec.matching(geom, 3)
    f1 = offsets.offset_field(geom, spec)
    assert offsets.offset_field(geom, spec) is f1
    with pytest.raises(ValueError):
        f1.rows[0, 0, 0] = 1.0


@given(st.integers(0, 31))
def test_relative_u_range(v):
    g = ImageGeometry(64, 32)
    field = offsets.offset_field(g, KernelSpec.matching(g, 3))
    assert np.all(field.relative_u[v] >= -32) and np.all(field.relative_u[v] < 32)


def test_pole_rows_wrap_to_far_meridian(geom):
    # near the pole the top kernel row crosses over and lands half a turn away
    field = offsets.offset_field(geom, KernelSpec.matching(geom, 3))
    assert np.any(np.abs(field.relative_u[0]) > geom.width / 4)
    assert np.all(field.rows[0, :, 1] >= 0)
