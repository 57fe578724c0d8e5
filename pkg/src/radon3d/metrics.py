"""Image quality metrics: PSNR, CNR and mean SSIM."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

__all__ = [
    "RegionSpec",
    "SsimParams",
    "psnr",
    "cnr",
    "mssim",
    "metric_rows",
    "write_metrics_csv",
    "CSV_FIELDS",
]

CSV_FIELDS = ("run_id", "metric", "value", "parameters")


def _box_slices(box, shape):
    if len(box) != len(shape):
        raise ValueError("region box dimensionality does not match the image")
    out = []
    for (lo, hi), size in zip(box, shape):
        if not 0 <= lo < hi <= size:
            raise ValueError(f"region box {box} outside image of shape {shape}")
        out.append(slice(lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class RegionSpec:
    """ROI and reference boxes as ``((lo, hi), ...)`` half-open index ranges."""

    roi: tuple
    ref: tuple

    def __post_init__(self):
        overlap = all(
            max(a[0], b[0]) < min(a[1], b[1]) for a, b in zip(self.roi, self.ref)
        )
        if overlap:
            raise ValueError("ROI and reference boxes overlap")


@dataclass(frozen=True)
class SsimParams:
    mu_max: float = 1.0
    window: int = 8

    def __post_init__(self):
        if self.mu_max <= 0:
            raise ValueError("mu_max must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    @property
    def c1(self):
        return (0.01 * self.mu_max) ** 2

    @property
    def c2(self):
        return (0.03 * self.mu_max) ** 2


def _same_shape(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def psnr(recon, reference, mu_max=1.0):
    """``10 log10(mu_max^2 / MSE)``; identical inputs give ``inf``."""
    a, b = _same_shape(recon, reference)
    if mu_max <= 0:
        raise ValueError("mu_max must be positive")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10 * np.log10(mu_max**2 / mse))


def cnr(recon, regions):
    """``|mu_roi - mu_ref| / sqrt(var_roi + var_ref)``."""
    img = np.asarray(recon, dtype=float)
    roi = img[_box_slices(regions.roi, img.shape)]
    ref = img[_box_slices(regions.ref, img.shape)]
    var = roi.var() + ref.var()
    if var == 0:
        raise ValueError("both regions have zero variance")
    return float(abs(roi.mean() - ref.mean()) / np.sqrt(var))


def _ssim_map(a, b, params):
    # Window statistics over every full w x w window of the last two axes.
    w = params.window
    size = (1,) * (a.ndim - 2) + (w, w)
    lo = w // 2  # scipy centres an even window at index w // 2
    crop = tuple(slice(None) for _ in range(a.ndim - 2)) + (
        slice(lo, a.shape[-2] - (w - 1 - lo)),
        slice(lo, a.shape[-1] - (w - 1 - lo)),
    )

    def mean(x):
        return uniform_filter(x, size=size, mode="constant")[crop]

    ma, mb = mean(a), mean(b)
    va = mean(a * a) - ma**2
    vb = mean(b * b) - mb**2
    cov = mean(a * b) - ma * mb
    c1, c2 = params.c1, params.c2
    return ((2 * ma * mb + c1) * (2 * cov + c2)) / (
        (ma**2 + mb**2 + c1) * (va + vb + c2)
    )


def mssim(recon, reference, params=None, axis=2):
    """Mean SSIM over all 8x8 windows at stride 1.

    Volumes are compared slice by slice across ``axis``; 2D images directly.
    Window statistics are plain (unweighted) population moments.
    """
    params = SsimParams() if params is None else params
    a, b = _same_shape(recon, reference)
    if a.ndim == 3:
        a = np.moveaxis(a, axis, 0)
        b = np.moveaxis(b, axis, 0)
    elif a.ndim != 2:
        raise ValueError("mssim needs a 2D image or a 3D volume")
    if min(a.shape[-2:]) < params.window:
        raise ValueError("image smaller than the SSIM window")
    return float(np.mean(_ssim_map(a, b, params)))


def metric_rows(run_id, recon, reference, mu_max=1.0, regions=None, params=None):
    """CSV-ready rows ``(run_id, metric, value, parameters)``."""
    params = SsimParams(mu_max=mu_max) if params is None else params
    rows = [
        (run_id, "psnr", psnr(recon, reference, mu_max), f"mu_max={mu_max}"),
        (
            run_id,
            "mssim",
            mssim(recon, reference, params),
            f"window={params.window};mu_max={params.mu_max}",
        ),
    ]
    if regions is not None:
        rows.append(
            (run_id, "cnr", cnr(recon, regions), f"roi={regions.roi};ref={regions.ref}")
        )
    return rows


def write_metrics_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for row in rows:
            w.writerow([row[0], row[1], repr(float(row[2])), row[3]])
