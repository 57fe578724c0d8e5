"""Cone-beam projections to the 3D pseudo-polar Radon grid.

For every source angle the weighted projection goes through the 2D DRT and a
forward difference along the intercept, which approximates the derivative
along ``s`` of the detector line integrals.  Rebinning maps every grid point
of the 3D DRT to its detector line (single source position, see
:func:`radon3d.geometry.map_to_detector`) and samples that derivative there.
The result is the radial derivative of the 3D Radon transform, expressed in
DRT units per mm, which :func:`integrate_radial` turns back into plane sums.

Unit bookkeeping: a DRT plane sum equals the continuous plane integral
divided by ``dm^2 * sqrt(1 + q1^2 + q2^2)``, i.e. by ``dm^3 / drho`` with
``drho = dm / sqrt(1 + q1^2 + q2^2)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .drt import RadonSpace4D, drt2, slopes
from .geometry import Geometry, map_to_detector, radon_grid, shadow_mask
from .phantom import detector_coordinates

__all__ = [
    "WeightedProjection",
    "RadonDerivative4D",
    "default_far_source",
    "preweight",
    "detector_radon_derivative",
    "rebin",
    "integrate_radial",
    "fill_shadow_zone",
    "radial_step",
    "radon_shadow",
    "line_correlations",
    "calibrate_scale",
    "SHADOW_STRATEGIES",
]

SHADOW_STRATEGIES = ("zero", "linear_theta", "oracle")


@dataclass
class WeightedProjection:
    values: np.ndarray
    psi: float
    du_virtual: float


@dataclass
class RadonDerivative4D:
    """Radial derivative on the 3D DRT grid, DRT units per mm.

    Entry ``p`` holds the derivative at ``p - 1/2``, the middle of the
    interval from the previous sample, so ``data[:, 0]`` is always 0 and
    ``(R[p] - R[p-1]) / drho`` is the exact discrete counterpart.
    ``shadow`` flags samples that no source position can see.
    """

    data: np.ndarray
    du: float = 1.0
    shadow: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        RadonSpace4D(self.data)  # shape validation
        if self.shadow is None:
            self.shadow = np.zeros(self.data.shape, dtype=bool)

    @property
    def n(self):
        return self.data.shape[2] - 1


def default_far_source(geom):
    """Skip the ``SO/SA`` weight when the source is at least ``10 sx`` away."""
    return geom.SO >= 10 * geom.sx


def preweight(proj, geom, far_source=None, psi=0.0):
    """Multiply a virtual-detector image by ``SO / SA`` per pixel.

    ``SA = sqrt(u^2 + v^2 + SO^2)`` is the source-to-pixel distance.  With
    ``far_source`` the weight is taken as 1.
    """
    proj = np.asarray(proj, dtype=float)
    if proj.shape != (geom.nu, geom.nu):
        raise ValueError(f"expected a {geom.nu}x{geom.nu} projection")
    if far_source is None:
        far_source = default_far_source(geom)
    if far_source:
        return WeightedProjection(proj.copy(), psi, geom.du_virtual)
    c = detector_coordinates(geom)
    sa = np.sqrt(c[:, None] ** 2 + c[None, :] ** 2 + geom.SO**2)
    return WeightedProjection(proj * (geom.SO / sa), psi, geom.du_virtual)


def detector_radon_derivative(wp):
    """Forward difference along ``p`` of the 2D DRT of a weighted projection.

    Returns an array ``(2, 2nu, nu+1)`` whose entry ``i`` along axis 1 is
    ``R[p+1] - R[p]`` for ``p = i - nu``, i.e. it sits at ``p + 1/2``.
    """
    values = wp.values if isinstance(wp, WeightedProjection) else np.asarray(wp)
    r = drt2(values).data
    return np.diff(r, axis=1)


def radial_step(n, dm):
    """Per-line radial spacing ``dm / sqrt(1 + q1^2 + q2^2)``, shape (n+1, n+1)."""
    q = slopes(n)
    return dm / np.sqrt(1 + q[:, None] ** 2 + q[None, :] ** 2)


def _detector_sample(stack, fam_mask, psi_idx, p_idx, l_idx):
    out = np.zeros(psi_idx.shape)
    for fam in (1, 2):
        sel = fam_mask == fam
        if not np.any(sel):
            continue
        # period-pad psi so linear interpolation wraps from the last
        # projection back to the first
        vol = stack[:, fam - 1]
        vol = np.concatenate([vol, vol[:1]], axis=0)
        coords = np.stack([psi_idx[sel], p_idx[sel], l_idx[sel]])
        out[sel] = map_coordinates(vol, coords, order=1, mode="constant", cval=0.0)
    return out


def rebin(derivs, geom):
    """Rebin per-projection detector derivatives onto the 3D Radon grid.

    Parameters
    ----------
    derivs : ndarray, shape (n_proj, 2, 2nu, nu+1)
        Output of :func:`detector_radon_derivative` for ``geom.psi``.
    geom : Geometry

    Returns
    -------
    RadonDerivative4D
        Shadow-zone points are 0 and flagged.  The first sample of every
        radial line is 0.
    """
    derivs = np.asarray(derivs, dtype=float)
    if derivs.ndim != 4 or derivs.shape[0] == 0:
        raise ValueError("empty or malformed projection stack")
    nu = geom.nu
    if derivs.shape[1:] != (2, 2 * nu, nu + 1) or derivs.shape[0] != geom.n_proj:
        raise ValueError(
            f"projection stack {derivs.shape} does not match the geometry"
        )
    n, dm, du, SO = geom.nx, geom.dm, geom.du_virtual, geom.SO

    pts = radon_grid(n, dm, p_offset=-0.5)
    shadow = shadow_mask(pts, geom)
    s, alpha, psi = map_to_detector(
        np.where(shadow, 0.0, pts.rho), pts.theta, pts.phi, SO
    )
    c, sn = np.cos(alpha), np.sin(alpha)
    horiz = np.abs(sn) >= np.abs(c)
    lead = np.where(horiz, sn, c)  # ds/dp per pixel unit, signed
    q = np.where(horiz, -c, -sn) / lead
    p_det = s / (lead * du)

    dpsi = 2 * np.pi / geom.n_proj
    sample = _detector_sample(
        derivs,
        np.where(horiz, 1, 2),
        psi / dpsi,
        p_det + nu - 0.5,
        q * nu / 2 + nu / 2,
    )
    dt = du * np.sqrt(1 + q**2)
    ds = lead * du
    cos2b = SO**2 / (SO**2 + s**2)
    drho = radial_step(n, dm)[None, None]
    # d/drho of the plane integral, then into DRT units (drho / dm^3), then
    # back to the family's own orientation along p.
    value = sample * dt / (ds * cos2b) * (drho / dm**3) * pts.sign
    value = np.where(shadow, 0.0, value)
    value[:, 0] = 0.0
    return RadonDerivative4D(value, du=dm, shadow=shadow)


def integrate_radial(deriv, dm=None):
    """Cumulative integral along ``p`` with spacing ``drho`` per line.

    Each interval ``[p-1, p]`` contributes ``drho`` times the derivative
    sampled at its midpoint (entry ``p``).  The running sum starts from 0
    at the most negative intercept and telescopes exactly when the entries
    are first differences divided by ``drho``.
    """
    data = deriv.data if isinstance(deriv, RadonDerivative4D) else np.asarray(deriv)
    data = np.asarray(data, dtype=float)
    if not np.all(np.isfinite(data)):
        raise ValueError("derivative contains non-finite values")
    if dm is None:
        dm = deriv.du if isinstance(deriv, RadonDerivative4D) else 1.0
    n = data.shape[2] - 1
    h = radial_step(n, dm)[None, None]
    out = np.zeros_like(data)
    out[:, 1:] = np.cumsum(data[:, 1:] * h, axis=1)
    meta = dict(deriv.meta) if isinstance(deriv, RadonDerivative4D) else {}
    return RadonSpace4D(out, du=dm, meta=meta)


def radon_shadow(geom):
    """Shadow mask for the integrated Radon data.

    A sample is unusable when it lies in the shadow zone itself or when the
    derivative is missing on both sides of it, as on radial lines that are
    shadowed end to end: there the running sum never sees a measured value.
    """
    half = shadow_mask(radon_grid(geom.nx, geom.dm, p_offset=-0.5), geom)
    enclosed = half.copy()
    enclosed[:, :-1] &= half[:, 1:]
    return shadow_mask(geom.nx, geom) | enclosed


def _fill_line(values, bad):
    # linear interpolation of the masked entries of a 1D line from the
    # nearest unmasked neighbours; one-sided gaps copy the nearest value
    good = ~bad
    if not np.any(bad) or not np.any(good):
        return values
    idx = np.arange(values.size)
    out = values.copy()
    out[bad] = np.interp(idx[bad], idx[good], values[good])
    return out


def fill_shadow_zone(radon, mask, strategy="linear_theta", oracle_radon=None):
    """Fill the shadow-zone entries of a Radon array.

    ``linear_theta`` interpolates along the slope index that moves the
    normal toward the rotation axis: ``j`` (the z slope) for families 1
    and 2, and ``l`` for family 3, whose axial normal lies along z already.
    Lines that are shadowed end to end fall back to the other slope index
    and finally to zero.
    """
    data = radon.data if isinstance(radon, RadonSpace4D) else np.asarray(radon)
    data = np.array(data, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != data.shape:
        raise ValueError("mask shape does not match the Radon data")
    if strategy not in SHADOW_STRATEGIES and strategy != "linear":
        raise ValueError(f"unknown shadow strategy {strategy!r}")
    if strategy == "oracle":
        if oracle_radon is None:
            raise ValueError("oracle strategy needs oracle_radon")
        ref = getattr(oracle_radon, "data", oracle_radon)
        data[mask] = np.asarray(ref)[mask]
    elif strategy == "zero":
        data[mask] = 0.0
    else:
        filled = data.copy()
        left = mask.copy()
        for fam in range(3):
            for axis in ((3, 2) if fam < 2 else (2, 3)):
                sub = np.moveaxis(filled[fam], axis - 1, -1)
                sub_bad = np.moveaxis(left[fam], axis - 1, -1)
                for idx in np.ndindex(sub.shape[:-1]):
                    bad = sub_bad[idx]
                    if np.any(bad) and not np.all(bad):
                        sub[idx] = _fill_line(sub[idx], bad)
                        sub_bad[idx] = False
        filled[left] = 0.0
        data = filled
    du = radon.du if isinstance(radon, RadonSpace4D) else 1.0
    meta = dict(radon.meta) if isinstance(radon, RadonSpace4D) else {}
    return RadonSpace4D(data, du=du, meta=meta)


def line_correlations(radon, reference, mask=None):
    """Pearson correlation per radial line ``(family, l, j)``.

    Lines containing a masked point, or with zero variance in either
    array, get NaN.
    """
    a = np.asarray(getattr(radon, "data", radon), dtype=float)
    b = np.asarray(getattr(reference, "data", reference), dtype=float)
    a = a - a.mean(axis=1, keepdims=True)
    b = b - b.mean(axis=1, keepdims=True)
    num = (a * b).sum(axis=1)
    den = np.sqrt((a * a).sum(axis=1) * (b * b).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    if mask is not None:
        r = np.where(np.asarray(mask).any(axis=1), np.nan, r)
    return r


def calibrate_scale(radon, reference, mask=None):
    """Least-squares global factor ``c`` minimising ``|c*radon - reference|``."""
    a = np.asarray(getattr(radon, "data", radon), dtype=float)
    b = np.asarray(getattr(reference, "data", reference), dtype=float)
    keep = np.ones(a.shape, bool) if mask is None else ~np.asarray(mask)
    den = np.sum(a[keep] ** 2)
    if den == 0:
        raise ValueError("cannot calibrate against an all-zero Radon array")
    return float(np.sum(a[keep] * b[keep]) / den)
