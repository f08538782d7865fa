import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from anomatch.errors import (
    BadMagicError,
    DataError,
    PayloadMismatchError,
    TruncatedError,
    VersionError,
)
from anomatch.tensors import FeatureMap, read_map, read_tensor, write_map, write_tensor

HEADER_BYTES = 20


def test_round_trip_minimal(tmp_path):
    fm = FeatureMap(layer_id=1, data=np.zeros((1, 1, 1), dtype=np.float32))
    path = tmp_path / "one.ftn"
    write_tensor(path, fm)
    assert path.stat().st_size == HEADER_BYTES + 4
    back = read_tensor(path, layer_id=1)
    assert back.data.tobytes() == fm.data.tobytes()
    assert back.shape == (1, 1, 1)


def test_round_trip_large_random(tmp_path):
    rng = np.random.default_rng(7)
    data = rng.standard_normal((64, 64, 256)).astype(np.float32)
    path = tmp_path / "big.ftn"
    write_tensor(path, FeatureMap(layer_id=2, data=data))
    back = read_tensor(path, layer_id=2)
    assert back.data.tobytes() == data.tobytes()


@settings(max_examples=40, deadline=None)
@given(
    data=st.tuples(
        st.integers(1, 5), st.integers(1, 5), st.integers(1, 5)
    ).flatmap(
        lambda shape: arrays(
            np.float32,
            shape,
            elements=st.floats(
                min_value=-1e6, max_value=1e6, allow_nan=False, width=32
            ),
        )
    )
)
def test_round_trip_property(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("rt") / "t.ftn"
    write_tensor(path, data)
    back = read_tensor(path)
    assert back.data.tobytes() == np.ascontiguousarray(data).tobytes()
    assert back.shape == data.shape


def test_write_rejects_nan_with_flat_index(tmp_path):
    data = np.zeros((2, 3, 4), dtype=np.float32)
    data[1, 0, 1] = np.nan  # flat index 1*12 + 0*4 + 1 = 13
    with pytest.raises(DataError, match="flat index 13"):
        write_tensor(tmp_path / "bad.ftn", data)


def test_write_rejects_inf(tmp_path):
    data = np.zeros((1, 1, 2), dtype=np.float32)
    data[0, 0, 0] = np.inf
    with pytest.raises(DataError, match="flat index 0"):
        write_tensor(tmp_path / "bad.ftn", data)


def test_read_truncated_payload(tmp_path):
    path = tmp_path / "short.ftn"
    write_tensor(path, np.ones((2, 2, 2), dtype=np.float32))
    raw = path.read_bytes()
    path.write_bytes(raw[:-4])  # one float short
    with pytest.raises(TruncatedError, match="7 of 8"):
        read_tensor(path)


def test_read_bad_magic(tmp_path):
    path = tmp_path / "junk.ftn"
    path.write_bytes(b"JUNKxxxxxxxxxxxxxxxxxxxxxxxx")
    with pytest.raises(BadMagicError):
        read_tensor(path)


def test_read_version_mismatch(tmp_path):
    path = tmp_path / "v2.ftn"
    write_tensor(path, np.ones((1, 1, 1), dtype=np.float32))
    raw = bytearray(path.read_bytes())
    raw[3] = ord("2")  # FTN2
    path.write_bytes(bytes(raw))
    with pytest.raises(VersionError):
        read_tensor(path)


def test_read_trailing_bytes(tmp_path):
    path = tmp_path / "extra.ftn"
    write_tensor(path, np.ones((1, 1, 1), dtype=np.float32))
    path.write_bytes(path.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(PayloadMismatchError, match="trailing"):
        read_tensor(path)


def test_feature_map_validates_shape():
    with pytest.raises(DataError):
        FeatureMap(layer_id=0, data=np.zeros((2, 2), dtype=np.float32))


def test_feature_map_is_read_only():
    fm = FeatureMap(layer_id=0, data=np.zeros((1, 2, 3), dtype=np.float32))
    with pytest.raises(ValueError):
        fm.data[0, 0, 0] = 1.0


def test_map_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    m = rng.random((5, 7)).astype(np.float32)
    path = tmp_path / "m.ftn"
    write_map(path, m)
    assert np.array_equal(read_map(path), m)
