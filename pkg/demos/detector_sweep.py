"""Image quality as the detector gets finer.

The object grid stays fixed while the detector resolution doubles; both
metrics should improve at every step.
"""

import tempfile

from radon3d import Geometry, RunConfig, run_pipeline

base = Geometry(sx=64.0, nx=16, su=256.0, nu=16, SP=1500.0, SO=1000.0, n_proj=180)

with tempfile.TemporaryDirectory() as tmp:
    for nu in (16, 32, 64):
        cfg = RunConfig(geometry=base.replace(nu=nu), out_dir=f"{tmp}/nu{nu}")
        report = run_pipeline(cfg)
        m = report["metrics"]
        print(f"nu={nu:3d}  PSNR {m['psnr']:6.2f} dB  MSSIM {m['mssim']:.3f}")
