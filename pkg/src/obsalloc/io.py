"""JSON files, trajectory archives and run manifests."""

import hashlib
import json
import os

import numpy as np

from . import __version__
from .linsys import TrajectoryData
from .measurement import MeasurementMatrix, Schedule


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    # float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, default=_default, allow_nan=False) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path, subcommand, params, argv, inputs=(), outputs=()):
    """Write ``<out_path>.manifest.json`` describing how the outputs were produced."""
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": params.get("seed"),
        "params": params,
        "argv": list(argv),
        "inputs": {os.fspath(p): sha256(p) for p in inputs},
        "outputs": [os.fspath(p) for p in outputs],
    }
    path = f"{os.fspath(out_path)}.manifest.json"
    write_json(path, manifest)
    return path


def save_trajectories(path, schedule, trajectories):
    arrays = {"schedule": np.array(dumps(schedule.to_dict()))}
    for k, tr in enumerate(trajectories):
        arrays[f"u_{k}"] = tr.inputs
        arrays[f"y_{k}"] = tr.observations
    arrays["meta"] = np.array([[tr.T, tr.seed, tr.index] for tr in trajectories], dtype=np.int64)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_trajectories(path):
    with np.load(path) as data:
        schedule = Schedule.from_dict(json.loads(str(data["schedule"])))
        meta = data["meta"]
        trajs = []
        for k, M in enumerate(schedule.matrices):
            T, seed, index = (int(v) for v in meta[k])
            trajs.append(TrajectoryData(MeasurementMatrix(schedule.r, M.coords),
                                        data[f"u_{k}"], data[f"y_{k}"], T, seed, index))
    return schedule, trajs
