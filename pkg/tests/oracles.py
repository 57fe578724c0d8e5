"""Direct (slow) reference evaluations used by several test modules."""

import numpy as np

from radon3d.ppft import grid_points


def direct_ppft3(vol):
    """Trigonometric sum at every pseudo-polar grid point, O(n^6)."""
    n = vol.shape[0]
    m = 3 * n + 1
    x = np.arange(n) - n // 2
    X = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    flat = vol.reshape(-1)
    out = np.empty((3, m, n + 1, n + 1), dtype=complex)
    h, c = m // 2, n // 2
    for sector in (1, 2, 3):
        pts = grid_points(n, sector)
        xi = np.array([p.xi for p in pts])
        vals = np.exp(-2j * np.pi * (xi @ X.T) / m) @ flat
        for p, v in zip(pts, vals):
            out[sector - 1, p.k + h, p.l + c, p.j + c] = v
    return out


def direct_ppft2(img):
    n = img.shape[0]
    m = 2 * n + 1
    x = np.arange(n) - n // 2
    out = np.empty((2, m, n + 1), dtype=complex)
    for k in range(-(m // 2), m // 2 + 1):
        for l in range(-n // 2, n // 2 + 1):
            a = -2 * l * k / n
            # sector 1: k along axis 0; sector 2: k along axis 1
            e1 = np.exp(-2j * np.pi * (k * x[:, None] + a * x[None, :]) / m)
            e2 = np.exp(-2j * np.pi * (a * x[:, None] + k * x[None, :]) / m)
            out[0, k + m // 2, l + n // 2] = np.sum(e1 * img)
            out[1, k + m // 2, l + n // 2] = np.sum(e2 * img)
    return out
