"""Bit-exact parameter serialization."""

from __future__ import annotations

import base64
import json

import numpy as np
import pytest

from rulereader.autodiff import Parameter
from rulereader.checkpoint import (
    FORMAT_NAME,
    FORMAT_VERSION,
    CheckpointError,
    load_parameter_arrays,
    restore_parameters,
    save_parameters,
)


def test_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "ck.json"
    arrays = {
        "w": rng.normal(size=(3, 4)),
        "b": rng.normal(size=(4,)),
        "scalar": np.array(3.141592653589793),
        "special": np.array([0.0, -0.0, 1e-310, np.finfo(np.float64).max, np.finfo(np.float64).tiny]),
    }
    save_parameters(list(arrays.items()), path)
    loaded = load_parameter_arrays(path)
    assert set(loaded) == set(arrays)
    for name, arr in arrays.items():
        assert loaded[name].dtype == np.float64
        assert loaded[name].shape == arr.shape
        assert np.array_equal(
            loaded[name].view(np.uint64), np.asarray(arr, dtype=np.float64).view(np.uint64)
        ), name


def test_non_contiguous_arrays_round_trip(tmp_path):
    path = tmp_path / "ck.json"
    base = np.arange(12.0).reshape(3, 4)
    save_parameters([("t", base.T)], path)
    assert np.array_equal(load_parameter_arrays(path)["t"], base.T)


def test_document_structure(tmp_path):
    path = tmp_path / "ck.json"
    save_parameters([("w", np.array([1.0, 2.0]))], path)
    doc = json.loads(path.read_text())
    assert doc["format"] == FORMAT_NAME == "rulereader-parameters"
    assert doc["version"] == FORMAT_VERSION == 1
    entry = doc["parameters"]["w"]
    assert entry["shape"] == [2]
    assert entry["dtype"] == "<f8"
    raw = base64.b64decode(entry["data"])
    assert np.array_equal(np.frombuffer(raw, dtype="<f8"), [1.0, 2.0])


def test_save_accepts_parameter_objects(tmp_path):
    path = tmp_path / "ck.json"
    p = Parameter("layer.w", np.ones((2, 2)))
    save_parameters([p], path)
    assert np.array_equal(load_parameter_arrays(path)["layer.w"], np.ones((2, 2)))


def test_duplicate_names_rejected(tmp_path):
    path = tmp_path / "ck.json"
    with pytest.raises(CheckpointError, match="duplicate"):
        save_parameters([("w", np.ones(1)), ("w", np.zeros(1))], path)


def test_restore_updates_in_place(tmp_path):
    path = tmp_path / "ck.json"
    save_parameters([("p", np.array([5.0, 6.0]))], path)
    p = Parameter("p", np.zeros(2))
    restore_parameters([p], path)
    assert np.array_equal(p.data, [5.0, 6.0])


def test_restore_missing_name_fails(tmp_path):
    path = tmp_path / "ck.json"
    save_parameters([("other", np.zeros(2))], path)
    with pytest.raises(CheckpointError, match="missing"):
        restore_parameters([Parameter("p", np.zeros(2))], path)


def test_restore_shape_mismatch_fails(tmp_path):
    path = tmp_path / "ck.json"
    save_parameters([("p", np.zeros(3))], path)
    with pytest.raises(CheckpointError, match="shape"):
        restore_parameters([Parameter("p", np.zeros(2))], path)


def test_wrong_format_or_version_rejected(tmp_path):
    path = tmp_path / "ck.json"
    path.write_text(json.dumps({"format": "something-else", "version": 1, "parameters": {}}))
    with pytest.raises(CheckpointError, match="format"):
        load_parameter_arrays(path)
    path.write_text(json.dumps({"format": FORMAT_NAME, "version": 99, "parameters": {}}))
    with pytest.raises(CheckpointError, match="version"):
        load_parameter_arrays(path)


def test_unreadable_file_rejected(tmp_path):
    path = tmp_path / "ck.json"
    path.write_text("{not json")
    with pytest.raises(CheckpointError, match="unreadable"):
        load_parameter_arrays(path)
    with pytest.raises(CheckpointError, match="unreadable"):
        load_parameter_arrays(tmp_path / "absent.json")


def test_foreign_dtype_rejected(tmp_path):
    path = tmp_path / "ck.json"
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "parameters": {"w": {"shape": [1], "dtype": "<f4", "data": base64.b64encode(b"\x00" * 4).decode()}},
    }
    path.write_text(json.dumps(doc))
    with pytest.raises(CheckpointError, match="dtype"):
        load_parameter_arrays(path)
