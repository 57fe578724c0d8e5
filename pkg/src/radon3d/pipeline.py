"""End-to-end reconstruction runs with persisted, resumable stages.

Stages run in the order ``phantom -> project -> radon -> reconstruct ->
metrics``.  Every stage writes its output as a raw float32 container and
reads its input back from disk, so a run split into several invocations
produces the same bytes as a single one.  Each container carries the hash
of the configuration that produced it; a later stage refuses to consume an
artifact with a different hash.
"""

import hashlib
import json
import os
import time
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .drt import RadonSpace4D, drt3, idrt3
from .geometry import Geometry
from .grangeat import (
    RadonDerivative4D,
    default_far_source,
    detector_radon_derivative,
    fill_shadow_zone,
    integrate_radial,
    preweight,
    radon_shadow,
    rebin,
)
from .metrics import RegionSpec, SsimParams, metric_rows, write_metrics_csv
from .phantom import (
    builtin_phantom,
    cone_beam_project,
    load_phantom_json,
    voxelize,
)
from .storage import load_volume, save_volume

__all__ = [
    "STAGES",
    "DEFAULT_GEOMETRY",
    "RunConfig",
    "StageError",
    "run_pipeline",
    "export_slices",
    "read_pgm",
    "ARTIFACTS",
]

STAGES = ("phantom", "project", "radon", "reconstruct", "metrics")
DEFAULT_GEOMETRY = Geometry(sx=64.0, nx=32, su=256.0, nu=64, SP=1500.0, SO=1000.0)
BUILTIN_PHANTOMS = ("shepp-logan", "head")
SHADOW_ALIASES = {"linear": "linear_theta"}

ARTIFACTS = {
    "phantom": "phantom.raw",
    "project": "projections.raw",
    "derivative": "radon_derivative.raw",
    "radon": "radon.raw",
    "reconstruct": "recon.raw",
    "metrics": "metrics.csv",
}


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class RunConfig:
    """Everything that determines a run.

    ``phantom`` is a builtin name (``shepp-logan`` or ``head``), a JSON file
    of ellipsoid records, or a raw volume container.  ``far_source=None``
    picks the geometry-based default.  ``projector`` is ``voxel`` (ray-march
    the voxelised phantom) or ``analytic`` (exact ellipsoid chords).
    """

    geometry: Geometry = DEFAULT_GEOMETRY
    phantom: str = "shepp-logan"
    shadow: str = "linear_theta"
    far_source: bool = None
    projector: str = "voxel"
    out_dir: str = "run"
    stages: tuple = STAGES
    workers: int = None
    regions: RegionSpec = None
    export_axis: int = 2

    def __post_init__(self):
        self.shadow = SHADOW_ALIASES.get(self.shadow, self.shadow)
        if self.shadow not in ("zero", "linear_theta", "oracle"):
            raise ValueError(f"unknown shadow strategy {self.shadow!r}")
        if self.projector not in ("voxel", "analytic"):
            raise ValueError(f"unknown projector {self.projector!r}")
        self.stages = tuple(self.stages)
        if not self.stages:
            raise ValueError("no stages requested")
        unknown = [s for s in self.stages if s not in STAGES]
        if unknown:
            raise ValueError(f"unknown stages {unknown}")
        idx = [STAGES.index(s) for s in self.stages]
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise ValueError("stages must be a contiguous run of " + ",".join(STAGES))
        if self.phantom not in BUILTIN_PHANTOMS and not os.path.exists(self.phantom):
            raise ValueError(f"phantom {self.phantom!r} is neither builtin nor a file")
        if self.projector == "analytic" and self._phantom_kind() == "volume":
            raise ValueError("the analytic projector needs an ellipsoid phantom")

    def _phantom_kind(self):
        if self.phantom in BUILTIN_PHANTOMS:
            return "builtin"
        return "json" if self.phantom.endswith(".json") else "volume"

    @property
    def far_source_resolved(self):
        if self.far_source is None:
            return default_far_source(self.geometry)
        return bool(self.far_source)

    def identity(self):
        """Fields that determine the artifacts (not where or how fast)."""
        phantom = self.phantom
        if self._phantom_kind() != "builtin":
            with open(phantom, "rb") as fh:
                phantom = "sha256:" + hashlib.sha256(fh.read()).hexdigest()
        return {
            "geometry": self.geometry.to_dict(),
            "phantom": phantom,
            "shadow": self.shadow,
            "far_source": self.far_source_resolved,
            "projector": self.projector,
        }

    def config_hash(self):
        blob = json.dumps(self.identity(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self):
        d = {
            "geometry": self.geometry.to_dict(),
            "phantom": self.phantom,
            "shadow": self.shadow,
            "far_source": self.far_source,
            "projector": self.projector,
            "out_dir": self.out_dir,
            "stages": list(self.stages),
            "workers": self.workers,
            "export_axis": self.export_axis,
        }
        if self.regions is not None:
            d["regions"] = {"roi": self.regions.roi, "ref": self.regions.ref}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        geom = dict(DEFAULT_GEOMETRY.to_dict())
        geom.update(d.pop("geometry", {}))
        regions = d.pop("regions", None)
        if regions is not None:
            regions = RegionSpec(
                tuple(map(tuple, regions["roi"])), tuple(map(tuple, regions["ref"]))
            )
        return cls(geometry=Geometry.from_dict(geom), regions=regions, **d)


def _path(config, key):
    return os.path.join(config.out_dir, ARTIFACTS[key])


def _save(config, key, data, du, **extra):
    save_volume(
        _path(config, key), data, du=du, config_hash=config.config_hash(), extra=extra
    )


def _load(config, key, stage):
    path = _path(config, key)
    if not os.path.exists(path):
        raise StageError(stage, f"missing input artifact {path}; run earlier stages")
    try:
        data, meta = load_volume(path)
    except (OSError, ValueError) as exc:
        raise StageError(stage, f"cannot read {path}: {exc}") from exc
    if meta.get("config_hash") != config.config_hash():
        raise StageError(
            stage, f"{path} was produced by a different configuration; refusing to resume"
        )
    return data, meta


def _ellipsoid_phantom(config):
    g = config.geometry
    if config.phantom in BUILTIN_PHANTOMS:
        return builtin_phantom(config.phantom, g.sx)
    return load_phantom_json(config.phantom)


def _stage_phantom(config):
    g = config.geometry
    if config._phantom_kind() == "volume":
        vol, _ = load_volume(config.phantom)
        if vol.shape != (g.nx,) * 3:
            raise ValueError(f"volume shape {vol.shape} does not match nx={g.nx}")
        mu_max = float(vol.max())
    else:
        ph = _ellipsoid_phantom(config)
        vol = voxelize(ph, g.nx, sx=g.sx)
        mu_max = float(ph.max_density)
    _save(config, "phantom", vol, g.dm, units="density", mu_max=mu_max, sx=g.sx)


def _stage_project(config):
    g = config.geometry
    if config.projector == "analytic":
        obj = _ellipsoid_phantom(config)
    else:
        obj, _ = _load(config, "phantom", "project")
    proj = cone_beam_project(obj, g)
    _save(config, "project", proj, g.du_virtual, units="mm*density")


def _stage_radon(config):
    g = config.geometry
    proj, _ = _load(config, "project", "radon")
    far = config.far_source_resolved
    derivs = np.stack(
        [
            detector_radon_derivative(preweight(p, g, far, psi))
            for p, psi in zip(proj, g.psi)
        ]
    )
    deriv = rebin(derivs, g)
    _save(config, "derivative", deriv.data, g.dm, units="drt/mm")
    # continue from the stored float32 derivative, as a resumed run would
    stored, _ = _load(config, "derivative", "radon")
    radon = integrate_radial(RadonDerivative4D(stored, du=g.dm))
    mask = radon_shadow(g)
    oracle = None
    if config.shadow == "oracle":
        vol, _ = _load(config, "phantom", "radon")
        oracle = drt3(vol)
    filled = fill_shadow_zone(radon, mask, config.shadow, oracle)
    _save(config, "radon", filled.data, g.dm, units="drt")


def _stage_reconstruct(config):
    g = config.geometry
    data, _ = _load(config, "radon", "reconstruct")
    vol = idrt3(RadonSpace4D(data, du=g.dm))
    _save(config, "reconstruct", vol, g.dm, units="density")


def _stage_metrics(config):
    recon, _ = _load(config, "reconstruct", "metrics")
    ref, meta = _load(config, "phantom", "metrics")
    mu_max = meta.get("mu_max") or float(np.abs(ref).max()) or 1.0
    run_id = config.config_hash()
    rows = metric_rows(
        run_id, recon, ref, mu_max, config.regions, SsimParams(mu_max=mu_max)
    )
    write_metrics_csv(_path(config, "metrics"), rows)
    mid = ref.shape[config.export_axis] // 2
    slices = os.path.join(config.out_dir, "slices")
    export_slices(recon, config.export_axis, [mid], slices, prefix="recon")
    export_slices(ref, config.export_axis, [mid], slices, prefix="phantom")
    return {name: value for _, name, value, _ in rows}


_RUNNERS = {
    "phantom": _stage_phantom,
    "project": _stage_project,
    "radon": _stage_radon,
    "reconstruct": _stage_reconstruct,
    "metrics": _stage_metrics,
}


def run_pipeline(config):
    """Run the configured stages and return a report dict.

    The report holds the artifact paths, per-stage wall times and the
    metric values (when the metrics stage ran).  Timings stay out of the
    persisted files so that repeated runs are byte-identical.
    """
    os.makedirs(config.out_dir, exist_ok=True)
    with open(os.path.join(config.out_dir, "config.json"), "w") as fh:
        json.dump(
            {"config_hash": config.config_hash(), **config.identity()},
            fh,
            indent=2,
            sort_keys=True,
        )
    report = {"config_hash": config.config_hash(), "stages": {}, "metrics": None}
    workers = (
        scipy.fft.set_workers(config.workers) if config.workers else nullcontext()
    )
    with workers:
        for stage in config.stages:
            t0 = time.perf_counter()
            try:
                result = _RUNNERS[stage](config)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(stage, str(exc)) from exc
            report["stages"][stage] = {
                "seconds": time.perf_counter() - t0,
                "artifact": _path(config, "radon" if stage == "radon" else stage),
            }
            if stage == "metrics":
                report["metrics"] = result
    return report


def export_slices(volume, axis, indices, out_dir, prefix="slice"):
    """Write min-max windowed 8-bit PGM images of selected slices.

    Each ``<prefix>_a<axis>_<index>.pgm`` gets a JSON sidecar with the
    window bounds ``lo``/``hi``; pixel ``k`` maps back to
    ``lo + k * (hi - lo) / 255``.  A constant slice becomes all zeros.
    """
    vol = np.asarray(volume, dtype=float)
    if not -vol.ndim <= axis < vol.ndim:
        raise ValueError(f"bad axis {axis}")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for idx in indices:
        if not 0 <= idx < vol.shape[axis]:
            raise IndexError(f"slice {idx} outside 0..{vol.shape[axis] - 1}")
        img = np.take(vol, idx, axis=axis)
        lo, hi = float(img.min()), float(img.max())
        if hi > lo:
            pix = np.rint((img - lo) / (hi - lo) * 255).astype(np.uint8)
        else:
            pix = np.zeros(img.shape, np.uint8)
        path = os.path.join(out_dir, f"{prefix}_a{axis}_{idx}.pgm")
        with open(path, "wb") as fh:
            fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode())
            fh.write(pix.tobytes())
        with open(path + ".json", "w") as fh:
            json.dump({"axis": axis, "index": idx, "lo": lo, "hi": hi}, fh)
        paths.append(path)
    return paths


def read_pgm(path):
    """Read an 8-bit binary PGM written by :func:`export_slices`."""
    with open(path, "rb") as fh:
        blob = fh.read()
    # header: magic, width, height, maxval, then exactly one whitespace byte
    fields, pos = [], 0
    while len(fields) < 4:
        while blob[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while not blob[end : end + 1].isspace():
            end += 1
        fields.append(blob[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PGM supported")
    pix = np.frombuffer(blob[pos + 1 : pos + 1 + w * h], dtype=np.uint8)
    return pix.reshape(h, w)
