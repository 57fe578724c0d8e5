import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from radon3d.metrics import (
    CSV_FIELDS,
    RegionSpec,
    SsimParams,
    cnr,
    metric_rows,
    mssim,
    psnr,
    write_metrics_csv,
)


def direct_mssim(a, b, mu_max=1.0, w=8):
    c1, c2 = (0.01 * mu_max) ** 2, (0.03 * mu_max) ** 2
    vals = []
    for z in range(a.shape[2]):
        for i in range(a.shape[0] - w + 1):
            for j in range(a.shape[1] - w + 1):
                x = a[i : i + w, j : j + w, z]
                y = b[i : i + w, j : j + w, z]
                mx, my = x.mean(), y.mean()
                cov = ((x - mx) * (y - my)).mean()
                vals.append(
                    (2 * mx * my + c1) * (2 * cov + c2)
                    / ((mx**2 + my**2 + c1) * (x.var() + y.var() + c2))
                )
    return np.mean(vals)


def test_psnr_examples():
    ref = np.ones((4, 4, 4))
    assert psnr(ref, ref) == float("inf")
    assert psnr(np.zeros_like(ref), ref, 1.0) == pytest.approx(0.0)
    assert psnr(np.zeros_like(ref), ref, 10.0) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        psnr(ref, ref[:2])
    with pytest.raises(ValueError):
        psnr(ref, ref, 0.0)


@given(a=st.floats(1e-3, 1.0), b=st.floats(1e-3, 1.0))
def test_psnr_decreases_with_perturbation(a, b):
    noise = np.random.default_rng(0).standard_normal((6, 6))
    ref = np.zeros((6, 6))
    if a < b:
        assert psnr(ref + a * noise, ref) > psnr(ref + b * noise, ref)


def test_cnr_examples():
    img = np.zeros((4, 8))
    img[:, :4] = 2.0
    img[:, 4:] = np.array([1.0, -1.0] * 8).reshape(4, 4)
    regions = RegionSpec(roi=((0, 4), (0, 4)), ref=((0, 4), (4, 8)))
    assert cnr(img, regions) == pytest.approx(2.0)
    same = np.tile([1.0, -1.0], (4, 4))
    assert cnr(same, regions) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        cnr(np.ones((4, 8)), regions)


def test_cnr_matches_direct_statistics(rng):
    img = rng.standard_normal((10, 10, 10))
    regions = RegionSpec(((1, 4), (1, 4), (1, 4)), ((6, 9), (6, 9), (6, 9)))
    roi = img[1:4, 1:4, 1:4].ravel()
    ref = img[6:9, 6:9, 6:9].ravel()
    want = abs(roi.mean() - ref.mean()) / np.sqrt(roi.var() + ref.var())
    assert cnr(img, regions) == pytest.approx(want)


def test_region_validation():
    with pytest.raises(ValueError):
        RegionSpec(((0, 4), (0, 4)), ((2, 6), (2, 6)))
    with pytest.raises(ValueError):
        cnr(np.zeros((4, 4)), RegionSpec(((0, 2), (0, 2)), ((2, 9), (2, 4))))


def test_ssim_params():
    p = SsimParams(mu_max=2.0)
    assert p.c1 == pytest.approx(4e-4)
    assert p.c2 == pytest.approx(36e-4)
    with pytest.raises(ValueError):
        SsimParams(mu_max=0.0)


def test_mssim_identical_is_one(rng):
    a = rng.random((10, 11, 3))
    assert mssim(a, a) == pytest.approx(1.0)


def test_mssim_matches_direct_windows(rng):
    a = rng.random((11, 10, 2))
    b = a + 0.2 * rng.standard_normal(a.shape)
    assert mssim(a, b) == pytest.approx(direct_mssim(a, b), abs=1e-12)


def test_mssim_constant_shift_closed_form(rng):
    a = rng.random((9, 9, 1))
    shift = 0.3
    b = a + shift
    c1 = 1e-4
    want = []
    for i in range(2):
        for j in range(2):
            m = a[i : i + 8, j : j + 8, 0].mean()
            want.append((2 * m * (m + shift) + c1) / (m**2 + (m + shift) ** 2 + c1))
    assert mssim(a, b) == pytest.approx(np.mean(want), abs=1e-12)
    assert mssim(a, b) < 1


def test_mssim_symmetry_and_permutations(rng):
    a, b = rng.random((2, 12, 12, 4))
    assert mssim(a, b) == mssim(b, a)
    perm = rng.permutation(4)
    assert mssim(a[:, :, perm], b[:, :, perm]) == pytest.approx(mssim(a, b))
    assert mssim(a[::-1, :, :], b[::-1, :, :]) == pytest.approx(mssim(a, b))
    assert psnr(a[::-1, ::-1], b[::-1, ::-1]) == pytest.approx(psnr(a, b))


def test_mssim_2d_and_errors(rng):
    a = rng.random((8, 8))
    assert mssim(a, a) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mssim(np.zeros((7, 7)), np.zeros((7, 7)))
    with pytest.raises(ValueError):
        mssim(np.zeros(8), np.zeros(8))


def test_csv_rows(tmp_path, rng):
    a = rng.random((8, 8, 8))
    regions = RegionSpec(((0, 2), (0, 2), (0, 2)), ((4, 8), (4, 8), (4, 8)))
    rows = metric_rows("run1", a, a + 0.01, regions=regions)
    assert [r[1] for r in rows] == ["psnr", "mssim", "cnr"]
    path = tmp_path / "m.csv"
    write_metrics_csv(path, rows)
    with open(path) as fh:
        got = list(csv.reader(fh))
    assert tuple(got[0]) == CSV_FIELDS
    assert float(got[1][2]) == rows[0][2]
    assert_allclose(float(got[2][2]), rows[1][2])
