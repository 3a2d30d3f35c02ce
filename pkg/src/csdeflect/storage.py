"""File formats: little-endian float64 row-major arrays with JSON sidecars."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import sensing
from .simulator import MeasurementSet


def dumps(obj) -> str:
    """Deterministic JSON (sorted keys, shortest round-trip floats)."""
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def write_array(path, a, meta=None):
    """Write ``a`` as raw ``<f8`` plus ``<path>.json`` holding its shape and ``meta``."""
    path = Path(path)
    a = np.ascontiguousarray(a, dtype="<f8")
    path.write_bytes(a.tobytes(order="C"))
    side = {"shape": list(a.shape), "dtype": "<f8", "order": "C"}
    side.update(meta or {})
    write_json(path.with_suffix(path.suffix + ".json"), side)


def read_array(path):
    path = Path(path)
    side = read_json(path.with_suffix(path.suffix + ".json"))
    a = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(side["shape"])
    return a.astype(np.float64), side


def write_measurements(path, ms: MeasurementSet):
    write_array(path, ms.Y, ms.sidecar())


def read_measurements(path) -> MeasurementSet:
    Y, side = read_array(path)
    if Y.shape != (side["M"] + 1, side["N_C"]):
        raise ValueError(f"measurement file shape {Y.shape} disagrees with its sidecar")
    op = sensing.SensingOperator.from_descriptor(side["sensing"])
    return MeasurementSet(Y, op, tuple(side["grid"]), int(side["seed"]),
                          side.get("scene", {}), side.get("noise", {}))


def write_csv(path, header, rows):
    """CSV with every float printed to 17 significant digits."""
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.17g}"
        return str(v)

    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]
