import json
import os

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from radon3d.geometry import Geometry
from radon3d.phantom import builtin_phantom, save_volume, voxelize
from radon3d.pipeline import (
    ARTIFACTS,
    DEFAULT_GEOMETRY,
    RunConfig,
    StageError,
    export_slices,
    read_pgm,
    run_pipeline,
)

SMALL = Geometry(sx=64.0, nx=8, su=256.0, nu=16, SP=1500.0, SO=1000.0, n_proj=24)


def config(tmp_path, name="run", **kw):
    kw.setdefault("geometry", SMALL)
    return RunConfig(out_dir=str(tmp_path / name), **kw)


def artifact_bytes(out_dir):
    out = {}
    for root, _, files in os.walk(out_dir):
        for f in files:
            path = os.path.join(root, f)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, out_dir)] = fh.read()
    return out


def test_default_config_matches_desk_scale():
    g = DEFAULT_GEOMETRY
    assert (g.nx, g.nu, g.n_proj, g.sx, g.su, g.SP, g.SO) == (32, 64, 360, 64, 256, 1500, 1000)
    assert RunConfig().far_source_resolved


def test_phantom_stage_only(tmp_path):
    cfg = config(tmp_path, stages=["phantom"])
    run_pipeline(cfg)
    files = set(os.listdir(cfg.out_dir))
    assert files == {"phantom.raw", "phantom.raw.json", "config.json"}
    meta = json.load(open(os.path.join(cfg.out_dir, "phantom.raw.json")))
    assert meta["shape"] == [8, 8, 8]
    assert meta["config_hash"] == cfg.config_hash()


def test_full_run_is_deterministic(tmp_path):
    a = run_pipeline(config(tmp_path, "a"))
    b = run_pipeline(config(tmp_path, "b"))
    assert a["metrics"] == b["metrics"]
    assert artifact_bytes(tmp_path / "a") == artifact_bytes(tmp_path / "b")
    names = set(artifact_bytes(tmp_path / "a"))
    for key, fname in ARTIFACTS.items():
        assert fname in names
    assert any(n.startswith("slices") for n in names)


def test_resumed_run_matches_single_run(tmp_path):
    run_pipeline(config(tmp_path, "full"))
    run_pipeline(config(tmp_path, "split", stages=["phantom", "project"]))
    run_pipeline(config(tmp_path, "split", stages=["radon"]))
    run_pipeline(config(tmp_path, "split", stages=["reconstruct", "metrics"]))
    assert artifact_bytes(tmp_path / "full") == artifact_bytes(tmp_path / "split")


def test_mismatched_resume_is_refused(tmp_path):
    run_pipeline(config(tmp_path, stages=["phantom", "project"]))
    other = config(tmp_path, stages=["radon"], shadow="zero")
    with pytest.raises(StageError) as err:
        run_pipeline(other)
    assert err.value.stage == "radon"
    assert "different configuration" in str(err.value)


def test_missing_input_is_stage_tagged(tmp_path):
    with pytest.raises(StageError, match=r"\[reconstruct\]"):
        run_pipeline(config(tmp_path, stages=["reconstruct"]))


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        config(tmp_path, stages=["phantom", "radon"])
    with pytest.raises(ValueError):
        config(tmp_path, stages=["bogus"])
    with pytest.raises(ValueError):
        config(tmp_path, stages=[])
    with pytest.raises(ValueError):
        config(tmp_path, phantom="no/such/file.json")
    with pytest.raises(ValueError):
        config(tmp_path, shadow="spline")
    assert config(tmp_path, shadow="linear").shadow == "linear_theta"


def test_config_dict_round_trip(tmp_path):
    cfg = config(tmp_path, shadow="oracle", far_source=False)
    back = RunConfig.from_dict(cfg.to_dict())
    assert back == cfg
    assert back.config_hash() == cfg.config_hash()
    assert config(tmp_path, shadow="zero").config_hash() != cfg.config_hash()
    # where the run goes does not change what it computes
    assert config(tmp_path, "elsewhere", shadow="oracle", far_source=False).config_hash() == cfg.config_hash()


def test_volume_and_json_phantom_sources(tmp_path):
    vol = voxelize(builtin_phantom("head", 64.0), 8)
    vpath = tmp_path / "head.raw"
    save_volume(vpath, vol)
    report = run_pipeline(config(tmp_path, "v", phantom=str(vpath)))
    assert np.isfinite(report["metrics"]["psnr"])
    jpath = tmp_path / "head.json"
    builtin_phantom("head", 64.0).to_json(jpath)
    report = run_pipeline(config(tmp_path, "j", phantom=str(jpath), projector="analytic"))
    assert np.isfinite(report["metrics"]["psnr"])
    with pytest.raises(ValueError):
        config(tmp_path, phantom=str(vpath), projector="analytic")


def test_export_slices_round_trip(tmp_path, rng):
    vol = rng.standard_normal((5, 6, 7))
    (path,) = export_slices(vol, 1, [2], tmp_path)
    side = json.load(open(path + ".json"))
    pix = read_pgm(path)
    img = vol[:, 2, :]
    assert pix.shape == img.shape
    lo, hi = side["lo"], side["hi"]
    assert (lo, hi) == (img.min(), img.max())
    assert_array_equal(pix, np.rint((img - lo) / (hi - lo) * 255).astype(np.uint8))
    back = lo + pix * (hi - lo) / 255
    assert np.abs(back - img).max() <= (hi - lo) / 255


def test_export_zero_slice_and_bad_index(tmp_path):
    (path,) = export_slices(np.zeros((4, 4, 4)), 0, [0], tmp_path)
    assert not read_pgm(path).any()
    with pytest.raises(IndexError):
        export_slices(np.zeros((4, 4, 4)), 0, [4], tmp_path)
