import struct
import zlib

import numpy as np
import pytest

from conftest import MODEL_DIR
from wctransfer.errors import ConfigurationError, WeightFormatError
from wctransfer.weights import (
    WEIGHTS_FILENAME,
    WeightStore,
    load_model_dir,
    load_weights,
    packaged_netspecs,
    parse_metadata,
    read_weight_file,
    resolve_store,
    write_weights,
)


def sample_tensors():
    rng = np.random.default_rng(0)
    return {
        "enc.conv1.weight": rng.standard_normal((4, 3, 3, 3)).astype(np.float32),
        "enc.conv1.bias": rng.standard_normal(4).astype(np.float32),
    }


def write_sample(path, metadata=None):
    write_weights(path, sample_tensors(), metadata)
    return path


def refinalize(body: bytes) -> bytes:
    """Recompute the trailing whole-file checksum after tampering with body bytes."""
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


# ------------------------------------------------------------- round trip


def test_write_read_round_trip(tmp_path):
    tensors = sample_tensors()
    path = tmp_path / "w.wctw"
    write_weights(path, tensors, {"mean": "0.1,0.2,0.3", "channel_order": "rgb"})
    got, meta, order = read_weight_file(path)
    assert order == tuple(tensors)
    for name in tensors:
        assert got[name].dtype == np.float32
        assert np.array_equal(got[name], tensors[name])
    assert meta == {"mean": "0.1,0.2,0.3", "channel_order": "rgb"}


def test_write_is_deterministic(tmp_path):
    a, b = tmp_path / "a.wctw", tmp_path / "b.wctw"
    write_sample(a, {"k": "v"})
    write_sample(b, {"k": "v"})
    assert a.read_bytes() == b.read_bytes()


def test_parse_metadata_ignores_comments_and_blanks():
    meta = parse_metadata("# note\n\nmean: 1,2,3\n  channel_order :  bgr \n")
    assert meta == {"mean": "1,2,3", "channel_order": "bgr"}


# ---------------------------------------------------------- malformed files


def test_too_short_file(tmp_path):
    p = tmp_path / "short.wctw"
    p.write_bytes(b"WCTW")
    with pytest.raises(WeightFormatError, match="too short"):
        read_weight_file(p)


def test_bad_magic(tmp_path):
    p = write_sample(tmp_path / "w.wctw")
    body = bytearray(p.read_bytes()[:-4])
    body[:4] = b"NOPE"
    p.write_bytes(refinalize(bytes(body)))
    with pytest.raises(WeightFormatError, match="magic"):
        read_weight_file(p)


def test_unsupported_version_names_supported(tmp_path):
    p = write_sample(tmp_path / "w.wctw")
    body = bytearray(p.read_bytes()[:-4])
    body[4:8] = struct.pack("<I", 9)
    p.write_bytes(refinalize(bytes(body)))
    with pytest.raises(WeightFormatError, match=r"version 9 \(supported: 1\)"):
        read_weight_file(p)


def test_truncation_detected(tmp_path):
    p = write_sample(tmp_path / "w.wctw")
    whole = p.read_bytes()
    p.write_bytes(whole[: len(whole) // 2])
    with pytest.raises(WeightFormatError):
        read_weight_file(p)


def test_flipped_byte_fails_file_checksum(tmp_path):
    p = write_sample(tmp_path / "w.wctw")
    data = bytearray(p.read_bytes())
    data[40] ^= 0xFF
    p.write_bytes(bytes(data))
    with pytest.raises(WeightFormatError, match="checksum"):
        read_weight_file(p)


def test_tensor_data_checksum_checked(tmp_path):
    # corrupt one float inside tensor data, then re-finalize the file CRC so
    # only the per-tensor checksum can catch it
    p = write_sample(tmp_path / "w.wctw")
    body = bytearray(p.read_bytes()[:-4])
    name = b"enc.conv1.weight"
    at = body.index(name) + len(name) + 1 + 1 + 4 * 4  # dtype, rank, 4 dims
    body[at] ^= 0x01
    p.write_bytes(refinalize(bytes(body)))
    with pytest.raises(WeightFormatError, match="fails its checksum"):
        read_weight_file(p)


def test_error_message_carries_offset(tmp_path):
    p = tmp_path / "short.wctw"
    p.write_bytes(b"WCTW" + b"\x00" * 20)
    try:
        read_weight_file(p)
    except WeightFormatError as e:
        assert "byte offset" in str(e)
    else:
        pytest.fail("expected WeightFormatError")


def test_unknown_dtype_code(tmp_path):
    p = write_sample(tmp_path / "w.wctw")
    body = bytearray(p.read_bytes()[:-4])
    name = b"enc.conv1.weight"
    body[body.index(name) + len(name)] = 7  # dtype byte follows the name
    p.write_bytes(refinalize(bytes(body)))
    with pytest.raises(WeightFormatError, match="dtype"):
        read_weight_file(p)


def test_duplicate_tensor_name(tmp_path):
    t = np.ones((2, 2), dtype=np.float32)
    p = tmp_path / "w.wctw"
    write_weights(p, [("x", t), ("x", t)])
    with pytest.raises(WeightFormatError, match="duplicate"):
        read_weight_file(p)


def test_zero_dimension_rejected(tmp_path):
    p = tmp_path / "w.wctw"
    write_weights(p, {"x": np.ones((2, 0), dtype=np.float32)})
    with pytest.raises(WeightFormatError, match="zero dimension"):
        read_weight_file(p)


def test_nonfinite_tensor_rejected(tmp_path):
    p = tmp_path / "w.wctw"
    write_weights(p, {"x": np.array([np.inf, 1.0], dtype=np.float32)})
    with pytest.raises(WeightFormatError, match="non-finite"):
        read_weight_file(p)


def test_trailing_garbage_rejected(tmp_path):
    p = write_sample(tmp_path / "w.wctw")
    body = p.read_bytes()[:-4] + b"\x00\x00"
    p.write_bytes(refinalize(body))
    with pytest.raises(WeightFormatError, match="trailing"):
        read_weight_file(p)


# ------------------------------------------------------------- WeightStore


def test_packaged_netspecs_complete():
    specs = packaged_netspecs()
    assert len(specs) == 10
    for direction in ("encoder", "decoder"):
        for level in range(1, 6):
            assert (direction, level) in specs


def test_load_model_dir_reads_fixture():
    store = load_model_dir(MODEL_DIR)
    assert "conv1_1.weight" in store.tensors
    assert store.channel_order() == "bgr"
    assert np.allclose(store.mean(), [0.42, 0.48, 0.45])
    # the fixture dir overrides every packaged spec with reduced-width ones
    assert "3->8" in store.netspec("encoder", 1)


def test_load_model_dir_missing_weights(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_model_dir(tmp_path)


def test_resolve_store_accepts_dir_and_file(tmp_path):
    by_dir = resolve_store(MODEL_DIR)
    by_file = load_weights(MODEL_DIR / WEIGHTS_FILENAME)
    assert by_dir.tensor_order == by_file.tensor_order
    # bare-file loads fall back to the packaged full-width specs
    assert "3->64" in by_file.netspec("encoder", 1)


def test_store_missing_tensor_is_configuration_error(store):
    with pytest.raises(ConfigurationError, match="no tensor"):
        store.tensor("dec9.conv1.weight")


def test_store_missing_netspec_is_configuration_error():
    s = WeightStore({}, {}, {}, ())
    with pytest.raises(ConfigurationError):
        s.netspec("encoder", 1)


def test_store_metadata_defaults_and_errors(tmp_path):
    p = tmp_path / "w.wctw"
    write_weights(p, sample_tensors(), {})
    s = load_weights(p)
    assert np.array_equal(s.mean(), np.zeros(3, dtype=np.float32))
    assert s.channel_order() == "rgb"

    write_weights(p, sample_tensors(), {"mean": "1,2", "channel_order": "gbr"})
    s = load_weights(p)
    with pytest.raises(WeightFormatError, match="mean"):
        s.mean()
    with pytest.raises(WeightFormatError, match="channel_order"):
        s.channel_order()
