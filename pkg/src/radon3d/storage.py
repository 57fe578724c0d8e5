"""Raw float32 containers with a JSON sidecar.

A container ``name.raw`` holds the little-endian float32 samples in C order;
``name.raw.json`` records ``shape``, ``order``, ``dtype``, ``units``, ``du``
and the ``config_hash`` of the run that produced it.
"""

import json
import os

import numpy as np

__all__ = ["save_volume", "load_volume", "sidecar_path"]

DTYPE = "<f4"


def sidecar_path(path):
    return os.fspath(path) + ".json"


def save_volume(path, data, *, du=1.0, units="mm", config_hash=None, extra=None):
    """Write ``data`` as float32 plus its sidecar; returns the sidecar dict."""
    data = np.asarray(data)
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to store non-finite values")
    meta = {
        "shape": list(data.shape),
        "order": "C",
        "dtype": "float32-le",
        "units": units,
        "du": float(du),
        "config_hash": config_hash,
    }
    if extra:
        meta.update(extra)
    path = os.fspath(path)
    tmp = path + ".part"
    np.ascontiguousarray(data, dtype=DTYPE).tofile(tmp)
    os.replace(tmp, path)
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2)
    return meta


def load_volume(path):
    """Read a container written by :func:`save_volume`.

    Returns
    -------
    data : ndarray of float64
    meta : dict
    """
    path = os.fspath(path)
    with open(sidecar_path(path)) as fh:
        meta = json.load(fh)
    if meta.get("order", "C") != "C" or meta.get("dtype") != "float32-le":
        raise ValueError(f"unsupported container layout in {path}")
    shape = tuple(meta["shape"])
    raw = np.fromfile(path, dtype=DTYPE)
    if raw.size != int(np.prod(shape)):
        raise ValueError(f"{path}: payload size does not match sidecar shape")
    return raw.reshape(shape).astype(np.float64), meta
