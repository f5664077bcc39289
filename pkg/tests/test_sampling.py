import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from panolayout.sampling import bilinear_sample, snap


def test_exact_at_nodes(rng):
    t = rng.normal(size=(2, 5, 8))
    v, u = np.meshgrid(np.arange(5.0), np.arange(8.0), indexing="ij")
    vals, clamped = bilinear_sample(t, u, v)
    np.testing.assert_array_equal(vals, t)
    assert not clamped


def test_constant_image_is_reproduced(rng):
    t = np.full((1, 4, 6), 3.25)
    vals, _ = bilinear_sample(t, rng.uniform(-20, 20, 100), rng.uniform(-2, 6, 100))
    np.testing.assert_allclose(vals, 3.25, atol=1e-15)


def test_wraps_and_clamps():
    t = np.arange(12.0).reshape(1, 2, 6)
    vals, _ = bilinear_sample(t, np.array([5.5]), np.array([0.0]))
    assert vals[0, 0] == pytest.approx(0.5 * (5 + 0))
    vals, clamped = bilinear_sample(t, np.array([1.0]), np.array([-3.0]))
    assert vals[0, 0] == 1.0 and clamped
    with pytest.raises(ValueError):
        bilinear_sample(t, np.array([5.5]), np.array([0.0]), horizontal_wrap=False)


@given(st.floats(0, 6.99), st.floats(0, 3))
def test_linear_ramp_is_interpolated_exactly(u, v):
    t = np.array([[[c for c in range(8)] for _ in range(4)]], dtype=float)
    t = t + 10 * np.arange(4.0)[None, :, None]
    vals, _ = bilinear_sample(t, u, v, horizontal_wrap=False)
    assert vals[0] == pytest.approx(u + 10 * v, abs=1e-12)


def test_snap():
    np.testing.assert_array_equal(snap(np.array([1.0 + 1e-12, 2.4, -3 - 5e-10])), [1.0, 2.4, -3.0])
