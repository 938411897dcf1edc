"""Parameter checkpoints: little-endian float64 payload plus a JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .mlp import ParamVector


def save_params(prefix, params: ParamVector) -> tuple[Path, Path]:
    """Write ``<prefix>.bin`` and ``<prefix>.json``."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    bin_path = prefix.with_name(prefix.name + ".bin")
    json_path = prefix.with_name(prefix.name + ".json")
    bin_path.write_bytes(params.values.astype("<f8").tobytes())
    header = {
        "module": params.name,
        "dtype": "<f8",
        "count": len(params),
        "layout": [[n, list(s)] for n, s in params.layout],
    }
    json_path.write_text(json.dumps(header, indent=1))
    return bin_path, json_path


def load_params(prefix) -> ParamVector:
    prefix = Path(prefix)
    bin_path = prefix.with_name(prefix.name + ".bin")
    json_path = prefix.with_name(prefix.name + ".json")
    try:
        header = json.loads(json_path.read_text())
        raw = bin_path.read_bytes()
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {prefix}: {exc}") from exc
    values = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    if values.size != header.get("count"):
        raise CheckpointError(f"{bin_path}: expected {header.get('count')} values, found {values.size}")
    layout = [(n, tuple(s)) for n, s in header["layout"]]
    return ParamVector(values.copy(), layout, header["module"])
