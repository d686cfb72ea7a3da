import struct
from dataclasses import replace

import numpy as np
import pytest

from opusvocoder import modelio, nnet
from opusvocoder.nnet import ModelError


@pytest.fixture(scope="module")
def model():
    return nnet.random_model(1, "small")


def _reseal(body):
    return body + struct.pack("<Q", modelio.checksum(body))


def test_round_trip_bitwise(tmp_path, model):
    path = tmp_path / "m.lpnw"
    n = modelio.save_model(model, path)
    assert n == path.stat().st_size
    back = modelio.load_model(path)
    assert back.config == model.config
    for name, arr in model.arrays().items():
        assert arr.tobytes() == back.arrays()[name].tobytes()
    for name, m in model.sparse().items():
        b = back.sparse()[name]
        assert np.array_equal(m.block_rows, b.block_rows)
        assert m.values.tobytes() == b.values.tobytes()
    assert modelio.model_bytes(back) == path.read_bytes()


def test_reference_round_trip(model):
    ref = nnet.random_model(0, "reference")
    data = modelio.model_bytes(ref)
    assert modelio.model_bytes(modelio.parse_model(data)) == data


def test_corrupted_byte(model):
    data = bytearray(modelio.model_bytes(model))
    data[len(data) // 2] ^= 0x01
    with pytest.raises(modelio.ChecksumError):
        modelio.parse_model(bytes(data))


def test_density_metadata_inconsistent(model):
    body = bytearray(modelio.model_bytes(model)[:-8])
    # density_h is the third double of the config block
    struct.pack_into("<d", body, 8 + 28 + 16, 0.3)
    with pytest.raises(ModelError, match="density"):
        modelio.parse_model(_reseal(bytes(body)))


def test_bad_magic_and_version(model):
    body = bytearray(modelio.model_bytes(model)[:-8])
    with pytest.raises(ModelError, match="magic"):
        modelio.parse_model(_reseal(b"XXXX" + bytes(body[4:])))
    struct.pack_into("<I", body, 4, 2)
    with pytest.raises(ModelError, match="version"):
        modelio.parse_model(_reseal(bytes(body)))


def test_truncated(model):
    data = modelio.model_bytes(model)
    with pytest.raises(ModelError):
        modelio.parse_model(_reseal(data[:200]))
    with pytest.raises(ModelError):
        modelio.parse_model(b"LPNW")


def test_adapted_flag_preserved():
    c, raw = nnet.random_raw_params(2, "small")
    m = nnet.build_model(replace(c, adapted=True), raw)
    assert modelio.parse_model(modelio.model_bytes(m)).config.adapted


def test_seed_changes_checksum(tmp_path):
    paths = []
    for seed in (0, 0, 1):
        p = tmp_path / f"m{len(paths)}.lpnw"
        modelio.save_model(nnet.random_model(seed, "small"), p)
        paths.append(p)
    sums = [modelio.file_checksum(p) for p in paths]
    assert sums[0] == sums[1] != sums[2]


def test_save_leaves_no_temp_on_failure(tmp_path, model):
    target = tmp_path / "missing_dir" / "m.lpnw"
    with pytest.raises(OSError):
        modelio.save_model(model, target)
    assert list(tmp_path.iterdir()) == []
