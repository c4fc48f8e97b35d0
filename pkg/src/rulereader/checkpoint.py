"""Bit-exact parameter checkpoints.

A checkpoint is a JSON document mapping parameter names to shapes and
base64-encoded little-endian float64 bytes. Round-tripping restores every
value bit for bit, including signed zeros and subnormals.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

FORMAT_NAME = "rulereader-parameters"
FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_parameters(parameters, path) -> None:
    """Write named float64 arrays to ``path``.

    ``parameters`` is an iterable of objects with ``name`` and ``data``
    attributes (or ``(name, array)`` pairs). Names must be unique.
    """
    entries = {}
    for p in parameters:
        name, data = (p if isinstance(p, tuple) else (p.name, p.data))
        if name in entries:
            raise CheckpointError(f"duplicate parameter name {name!r}")
        arr = np.asarray(data, dtype=np.float64)
        entries[name] = {
            "shape": list(arr.shape),
            "dtype": "<f8",
            "data": base64.b64encode(np.ascontiguousarray(arr, dtype="<f8").tobytes()).decode("ascii"),
        }
    doc = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "parameters": entries}
    Path(path).write_text(json.dumps(doc))


def load_parameter_arrays(path) -> dict[str, np.ndarray]:
    """Read a checkpoint back into a name -> array mapping."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if doc.get("format") != FORMAT_NAME:
        raise CheckpointError(f"not a parameter checkpoint: format={doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    arrays = {}
    for name, entry in doc["parameters"].items():
        if entry.get("dtype") != "<f8":
            raise CheckpointError(f"parameter {name!r} has unsupported dtype {entry.get('dtype')!r}")
        raw = base64.b64decode(entry["data"])
        arr = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()
        arrays[name] = arr
    return arrays


def restore_parameters(parameters, path) -> None:
    """Load a checkpoint into existing parameters, matching by name."""
    arrays = load_parameter_arrays(path)
    for p in parameters:
        if p.name not in arrays:
            raise CheckpointError(f"checkpoint missing parameter {p.name!r}")
        arr = arrays[p.name]
        if arr.shape != p.data.shape:
            raise CheckpointError(f"shape mismatch for {p.name!r}: checkpoint {arr.shape}, parameter {p.data.shape}")
        p.data = arr
