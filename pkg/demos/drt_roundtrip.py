"""Round trip through the 3D discrete Radon transform.

The forward transform sums a volume over every plane of the pseudo-polar
family; the inverse recovers the volume to machine precision.
"""

import time

import numpy as np

from radon3d import drt3, idrt3

rng = np.random.default_rng(0)
n = 16
vol = rng.standard_normal((n, n, n))

radon = drt3(vol)
# three plane families, 3n+1 intercepts, (n+1)^2 slope pairs
print("radon shape", radon.data.shape)

t0 = time.perf_counter()
back = idrt3(radon)
print(f"inverse in {time.perf_counter() - t0:.2f} s")

err = np.linalg.norm(back - vol) / np.linalg.norm(vol)
print(f"relative error {err:.2e}")

# the zero-slope plane of family 3 at intercept p sums the slice z = p
p = 3
row = radon.data[2, p + 3 * n // 2, n // 2, n // 2]
print("plane sum", row, "slice sum", vol[:, :, p + n // 2].sum())
