import struct

import numpy as np
import pytest

from gofdm.io import db_round, read_array, read_real_vector, write_array


def test_array_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    write_array(tmp_path / "a.bin", a)
    assert np.array_equal(read_array(tmp_path / "a.bin"), a)


def test_array_layout_is_little_endian_row_major(tmp_path):
    a = np.array([[1 + 2j, 3 - 4j]])
    write_array(tmp_path / "a.bin", a)
    raw = (tmp_path / "a.bin").read_bytes()
    assert struct.unpack("<QQ", raw[:16]) == (1, 2)
    assert struct.unpack("<4d", raw[16:]) == (1.0, 2.0, 3.0, -4.0)


def test_vector_and_errors(tmp_path):
    write_array(tmp_path / "v.bin", np.arange(4.0))
    assert np.array_equal(read_real_vector(tmp_path / "v.bin"), np.arange(4.0))
    write_array(tmp_path / "c.bin", np.array([1j]))
    with pytest.raises(ValueError):
        read_real_vector(tmp_path / "c.bin")
    (tmp_path / "bad.bin").write_bytes(struct.pack("<QQ", 2, 2) + b"\0" * 8)
    with pytest.raises(ValueError):
        read_array(tmp_path / "bad.bin")
    with pytest.raises(ValueError):
        write_array(tmp_path / "x.bin", np.zeros((2, 2, 2)))


def test_db_round():
    assert db_round(-13.034249) == -13.0342
    assert db_round(None) is None
    assert db_round(float("-inf")) is None
