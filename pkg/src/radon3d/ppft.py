"""Pseudo-polar Fourier transforms in 2D and 3D.

The image/volume is indexed by centred coordinates ``-n/2 .. n/2-1`` on every
axis (storage slot 0 holds coordinate ``-n/2``).  The trigonometric
polynomial sampled by the transform is::

    I_hat(xi) = sum_x I(x) * exp(-2j*pi/m * (xi . x))

with ``m = 3n+1`` in 3D and ``m = 2n+1`` in 2D.  Sector ``i`` holds the
samples whose pseudo-radius ``k`` runs along axis ``i-1``; the two remaining
frequency coordinates are ``-2*l*k/n`` and ``-2*j*k/n`` in increasing axis
order.  Sector arrays are indexed ``[k, l(, j)]`` with ``k`` in
``-m//2 .. m//2`` and ``l, j`` in ``-n/2 .. n/2``, each stored from its most
negative value.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import cfft, frft, pad_centered

__all__ = ["PPFTResult", "GridPoint", "ppft3", "ppft2", "grid_points", "check_side"]


def check_side(arr, ndim):
    arr = np.asarray(arr)
    if arr.ndim != ndim or len(set(arr.shape)) != 1:
        raise ValueError(f"expected a cubic {ndim}D array, got shape {arr.shape}")
    n = arr.shape[0]
    if n < 2 or n % 2:
        raise ValueError(f"side length must be even and >= 2, got {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("input contains non-finite values")
    return n


@dataclass
class PPFTResult:
    """Pseudo-polar samples, one array per sector along axis 0."""

    sectors: np.ndarray
    n: int

    def __getitem__(self, i):
        return self.sectors[i]

    @property
    def m(self):
        return self.sectors.shape[1]


@dataclass(frozen=True)
class GridPoint:
    sector: int
    k: int
    l: int
    j: int
    xi: tuple


def _sweep(data, n, m, axis):
    # Along ``axis`` evaluate sum_v x[v] exp(-2j*pi*(2k/n)*l*v/m) for
    # l = -n/2..n/2, then reverse l so the sample sits at -2lk/n.
    k = np.arange(m) - m // 2
    shape = [1] * data.ndim
    shape[0] = m
    shape.pop(axis)
    alpha = (2.0 * k / n).reshape(shape)
    out = frft(data, alpha, m, n_out=n + 1, in_start=-n // 2, out_start=-n // 2, axis=axis)
    return np.flip(out, axis=axis)


def _sector_first_axis(arr, m):
    n = arr.shape[0]
    data = cfft(pad_centered(arr, m, axis=0), axis=0)
    for ax in range(1, arr.ndim):
        data = _sweep(data, n, m, ax)
    return data


def ppft3(volume):
    """3D pseudo-polar Fourier transform.

    Parameters
    ----------
    volume : ndarray, shape (n, n, n)
        Real volume with ``n`` even.

    Returns
    -------
    PPFTResult
        ``sectors`` has shape ``(3, 3n+1, n+1, n+1)``.
    """
    n = check_side(volume, 3)
    m = 3 * n + 1
    vol = np.asarray(volume, dtype=float)
    sectors = np.stack(
        [_sector_first_axis(np.moveaxis(vol, i, 0), m) for i in range(3)]
    )
    return PPFTResult(sectors, n)


def ppft2(image):
    """2D pseudo-polar Fourier transform; sectors of shape ``(2n+1, n+1)``."""
    n = check_side(image, 2)
    m = 2 * n + 1
    img = np.asarray(image, dtype=float)
    sectors = np.stack(
        [_sector_first_axis(np.moveaxis(img, i, 0), m) for i in range(2)]
    )
    return PPFTResult(sectors, n)


def grid_points(n, sector):
    """Enumerate the 3D pseudo-polar grid points of one sector.

    Returns a list of :class:`GridPoint` with frequency coordinates
    ``xi = (xi1, xi2, xi3)``.
    """
    if n % 2:
        raise ValueError("n must be even")
    if sector not in (1, 2, 3):
        raise ValueError("sector must be 1, 2 or 3")
    half = 3 * n // 2
    pts = []
    for k in range(-half, half + 1):
        for l in range(-n // 2, n // 2 + 1):
            for j in range(-n // 2, n // 2 + 1):
                a, b = -2 * l * k / n, -2 * j * k / n
                xi = [a, b]
                xi.insert(sector - 1, float(k))
                pts.append(GridPoint(sector, k, l, j, tuple(xi)))
    return pts
