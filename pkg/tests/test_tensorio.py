import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from panolayout import tensorio
from panolayout.tensorio import TensorFormatError


@given(hnp.arrays(st.sampled_from([np.float32, np.float64]),
                  hnp.array_shapes(min_dims=0, max_dims=4, min_side=0, max_side=5)))
def test_round_trip(a):
    b = tensorio.loads(tensorio.dumps(a))
    assert b.dtype == a.dtype and b.shape == a.shape
    np.testing.assert_array_equal(b, a)


def test_header_bytes():
    data = tensorio.dumps(np.arange(6, dtype=np.float32).reshape(2, 3))
    assert data[:4] == b"CFLT"
    assert struct.unpack("<HBI", data[4:11]) == (1, 1, 2)
    assert struct.unpack("<II", data[11:19]) == (2, 3)
    assert len(data) == 19 + 24
    assert np.frombuffer(data[19:], "<f4")[5] == 5.0


def test_big_endian_input_is_written_little_endian():
    a = np.arange(3, dtype=">f8")
    assert tensorio.dumps(a) == tensorio.dumps(a.astype("<f8"))


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: b"XFLT" + d[4:], "magic"),
    (lambda d: d[:4] + struct.pack("<H", 2) + d[6:], "version"),
    (lambda d: d[:6] + b"\x07" + d[7:], "dtype"),
    (lambda d: d[:-1], "payload"),
    (lambda d: d + b"\x00", "payload"),
    (lambda d: d[:9], "truncated"),
    (lambda d: d[:13], "truncated"),
])
def test_rejects_malformed(mutate, msg):
    good = tensorio.dumps(np.zeros((2, 2)))
    with pytest.raises(TensorFormatError, match=msg):
        tensorio.loads(mutate(good))


def test_rejects_unsupported_dtype():
    with pytest.raises(TensorFormatError):
        tensorio.dumps(np.zeros(3, dtype=np.int32))


def test_file_round_trip(tmp_path):
    a = np.random.default_rng(0).normal(size=(4, 5))
    tensorio.save(tmp_path / "a.cflt", a)
    np.testing.assert_array_equal(tensorio.load(tmp_path / "a.cflt"), a)
