"""Discrete Radon transforms on the linogram (slope/intercept) grid.

2D: family 1 holds the lines ``a0 = q*a1 + p`` (basically horizontal when
axis 0 is the image row), family 2 the lines ``a1 = q*a0 + p``.
3D: family ``i`` holds the planes where the coordinate along axis ``i-1``
equals ``q1*(first other) + q2*(second other) + p``.

Slopes are ``q = 2l/n`` for ``l = -n/2..n/2`` and intercepts ``p`` run over
``-n..n`` (2D) or ``-3n/2..3n/2`` (3D), all in sample units.  Arrays are
indexed ``[family, p, l(, j)]``.  Line/plane sums use trigonometric
interpolation with the Dirichlet kernel of length ``m``; ``du`` is carried
as metadata only.

Each family is the inverse centred DFT, along the pseudo-radius, of the
matching pseudo-polar sector.
"""

from dataclasses import dataclass, field

import numpy as np

from .ppft import check_side, ppft2, ppft3
from .spectral import cfft, crop_centered, dirichlet_kernel, icfft, icfftn

__all__ = [
    "Drt2Result",
    "RadonSpace4D",
    "drt2",
    "drt3",
    "idrt3",
    "brute_force_drt2",
    "brute_force_drt3",
    "slopes",
    "intercepts",
]

BRUTE_FORCE_MAX_N = 16


@dataclass
class Drt2Result:
    """2D DRT, ``data`` shaped ``(2, 2n+1, n+1)``."""

    data: np.ndarray
    du: float = 1.0

    @property
    def n(self):
        return self.data.shape[2] - 1

    @property
    def horizontal(self):
        return self.data[0]

    @property
    def vertical(self):
        return self.data[1]


@dataclass
class RadonSpace4D:
    """3D DRT, ``data`` shaped ``(3, 3n+1, n+1, n+1)``."""

    data: np.ndarray
    du: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 4 or d.shape[0] != 3:
            raise ValueError(f"bad Radon array shape {d.shape}")
        n = d.shape[2] - 1
        if d.shape != (3, 3 * n + 1, n + 1, n + 1) or n % 2:
            raise ValueError(f"bad Radon array shape {d.shape}")

    @property
    def n(self):
        return self.data.shape[2] - 1


def slopes(n):
    return (np.arange(n + 1) - n // 2) / (n / 2)


def intercepts(n, dim=3):
    half = (3 * n // 2) if dim == 3 else n
    return np.arange(-half, half + 1)


def drt2(image, du=1.0):
    """Fast 2D DRT through the pseudo-polar FFT."""
    pp = ppft2(image)
    data = icfft(pp.sectors, axis=1).real
    return Drt2Result(data, du)


def drt3(volume, du=1.0):
    """Fast 3D DRT, ``O(n^3 log n)``."""
    pp = ppft3(volume)
    data = icfft(pp.sectors, axis=1).real
    return RadonSpace4D(data, du)


def _check_brute(n):
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(
            f"brute-force DRT limited to n <= {BRUTE_FORCE_MAX_N} (got {n})"
        )


def brute_force_drt2(image, du=1.0):
    """Literal interpolated line sums; oracle for :func:`drt2`."""
    n = check_side(image, 2)
    _check_brute(n)
    m = 2 * n + 1
    img = np.asarray(image, dtype=float)
    x = np.arange(n) - n // 2
    p = intercepts(n, dim=2)
    out = np.empty((2, m, n + 1))
    for fam in range(2):
        f = np.moveaxis(img, fam, 0)  # f[a_dep, a_free]
        for li, q in enumerate(slopes(n)):
            # weight[p, free, dep] = D(q*free + p - dep)
            arg = q * x[None, :, None] + p[:, None, None] - x[None, None, :]
            w = dirichlet_kernel(arg, m)
            out[fam, :, li] = np.einsum("pfd,df->p", w, f)
    return Drt2Result(out, du)


def brute_force_drt3(volume, du=1.0):
    """Literal interpolated plane sums; oracle for :func:`drt3`."""
    n = check_side(volume, 3)
    _check_brute(n)
    m = 3 * n + 1
    vol = np.asarray(volume, dtype=float)
    x = np.arange(n) - n // 2
    p = intercepts(n)
    q = slopes(n)
    out = np.empty((3, m, n + 1, n + 1))
    for fam in range(3):
        f = np.moveaxis(vol, fam, 0)  # f[dep, b, c]
        for li, q1 in enumerate(q):
            for ji, q2 in enumerate(q):
                shift = q1 * x[:, None] + q2 * x[None, :]  # (b, c)
                arg = shift[None, :, :, None] + p[:, None, None, None] - x
                w = dirichlet_kernel(arg, m)
                out[fam, :, li, ji] = np.einsum("pbcd,dbc->p", w, f)
    return RadonSpace4D(out, du)


def _layer_operator(n, K):
    """Least-squares map used by one shell of the inverse.

    Inputs are the ``n+1`` pseudo-polar samples at ``xi = -2lK/n`` stacked
    on top of the already-recovered integer frequencies ``|t| > K``; outputs
    are the integer frequencies ``|t| <= K``.  Both are samples of the
    same one-dimensional trigonometric polynomial of ``n`` terms.
    """
    m = 3 * n + 1
    t = np.arange(m) - m // 2
    v = np.arange(n) - n // 2
    xi = -2.0 * (np.arange(n + 1) - n // 2) * K / n
    ext = t[np.abs(t) > K]
    inner = t[np.abs(t) <= K]
    known = np.concatenate([xi, ext])
    A = np.exp(-2j * np.pi * np.outer(known, v) / m)
    B = np.exp(-2j * np.pi * np.outer(inner, v) / m)
    return B @ np.linalg.pinv(A, rcond=1e-13), xi, ext, inner


def idrt3(radon):
    """Inverse 3D DRT.

    The pseudo-polar samples are recovered with a 1D DFT along ``p``.  The
    Cartesian ``(3n+1)^3`` frequency grid is then filled one cubic shell at a
    time, from the outermost (``max|xi| = 3n/2``) inward.  For each family
    slice ``k`` the inverse fractional transforms along ``l`` and then ``j``
    are solved as small least-squares fits that also use every frequency
    already recovered on the outer shells, which keeps each step well
    conditioned.  Frequencies lying on several family slices are taken
    from the lowest family index.  A centred 3D inverse DFT followed by
    truncation of the padding gives the volume.

    Parameters
    ----------
    radon : RadonSpace4D or ndarray

    Returns
    -------
    ndarray, shape (n, n, n)
    """
    data = radon.data if isinstance(radon, RadonSpace4D) else radon
    data = np.asarray(data, dtype=float)
    RadonSpace4D(data)  # shape validation
    if not np.all(np.isfinite(data)):
        raise ValueError("Radon data contains non-finite values")
    n = data.shape[2] - 1
    m = 3 * n + 1
    h = m // 2
    pp = cfft(data, axis=1)

    grid = np.zeros((m, m, m), dtype=complex)
    done = np.zeros((m, m, m), dtype=bool)
    t = np.arange(m) - h
    for K in range(h, -1, -1):
        W, xi, ext, inner = _layer_operator(n, K)
        to_grid = dirichlet_kernel(xi[:, None] - t[None, :], m)
        ei, ii = ext + h, inner + h
        shell = []
        for fam in range(3):
            plane_view = np.moveaxis(grid, fam, 0)
            for k in ((K, -K) if K else (0,)):
                samples = pp[fam, k + h]
                if k < 0:
                    # xi flips sign with k; reorder so abscissae match K > 0.
                    samples = samples[::-1, ::-1]
                plane = plane_view[k + h]
                # Outer-shell values off the integer grid, at xi_j on axis b.
                ext_rows = plane[ei] @ to_grid.T
                along_a = W @ np.concatenate([samples, ext_rows], axis=0)
                along_b = np.concatenate([along_a, plane[np.ix_(ii, ei)]], axis=1)
                shell.append((fam, k, along_b @ W.T))
        for fam, k, values in shell:
            plane = np.moveaxis(grid, fam, 0)[k + h]
            owned = np.moveaxis(done, fam, 0)[k + h]
            block = np.ix_(ii, ii)
            fresh = ~owned[block]
            sub = plane[block]
            sub[fresh] = values[fresh]
            plane[block] = sub
            owned[block] = True

    vol = icfftn(grid)
    for ax in range(3):
        vol = crop_centered(vol, n, axis=ax)
    return vol.real
