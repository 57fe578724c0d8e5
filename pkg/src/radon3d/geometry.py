"""Scanner geometry and coordinate conversions.

Conventions
-----------
* Object axes 0, 1, 2 are x, y, z; the source orbits in the z = 0 plane at
  ``S(psi) = SO * (cos psi, sin psi, 0)``.
* The virtual detector passes through the rotation axis, perpendicular to
  the central ray.  Its in-plane axes are ``e_u = (-sin psi, cos psi, 0)``
  (columns, array axis 1) and ``e_v = (0, 0, 1)`` (rows, array axis 0).
* A detector line is ``u cos(alpha) + v sin(alpha) = s``.
* A 3D plane is ``n . x = rho`` with unit normal
  ``n = (sin t cos f, sin t sin f, cos t)``.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "Geometry",
    "RadonPoint",
    "DetectorPoint",
    "VirtualDetector",
    "virtualize_detector",
    "radon_to_detector",
    "map_to_detector",
    "line_to_polar",
    "polar_to_line",
    "family_normals",
    "plane_to_spherical",
    "radon_grid",
    "shadow_mask",
]

GEOMETRY_KEYS = ("sx", "nx", "su", "nu", "SP", "SO", "n_proj")


@dataclass(frozen=True)
class Geometry:
    """Circular-orbit cone-beam geometry (lengths in mm)."""

    sx: float
    nx: int
    su: float
    nu: int
    SP: float
    SO: float
    n_proj: int = 360

    def __post_init__(self):
        if self.nx % 2 or self.nu % 2 or self.nx < 2 or self.nu < 2:
            raise ValueError("nx and nu must be even and >= 2")
        if self.n_proj < 1:
            raise ValueError("n_proj must be >= 1")
        if not self.SO < self.SP:
            raise ValueError("source-to-origin distance must be below SP")
        if not self.SO > self.sx * np.sqrt(3) / 2:
            raise ValueError("source lies inside the object cube")

    @property
    def dm(self):
        """Object voxel size."""
        return self.sx / self.nx

    @property
    def virtual_side(self):
        return self.su * self.SO / self.SP

    @property
    def du_virtual(self):
        return self.virtual_side / self.nu

    @property
    def psi(self):
        """Source angles, equally spaced on [0, 2 pi)."""
        return 2 * np.pi * np.arange(self.n_proj) / self.n_proj

    def replace(self, **changes):
        d = asdict(self)
        d.update(changes)
        return Geometry(**d)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(GEOMETRY_KEYS)
        if unknown:
            raise ValueError(f"unknown geometry keys: {sorted(unknown)}")
        missing = set(GEOMETRY_KEYS) - set(d)
        if missing:
            raise ValueError(f"missing geometry keys: {sorted(missing)}")
        return cls(
            sx=float(d["sx"]),
            nx=int(d["nx"]),
            su=float(d["su"]),
            nu=int(d["nu"]),
            SP=float(d["SP"]),
            SO=float(d["SO"]),
            n_proj=int(d["n_proj"]),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


@dataclass
class RadonPoint:
    """Plane ``n(theta, phi) . x = rho``; ``sign`` is the sign of the
    slope/intercept ``p`` it came from (+1 when ``p >= 0``)."""

    rho: object
    theta: object
    phi: object
    sign: object = 1


@dataclass
class DetectorPoint:
    s: float
    alpha: float
    psi: float


@dataclass
class VirtualDetector:
    values: np.ndarray
    side: float

    @property
    def pixel(self):
        return self.side / self.values.shape[-1]


def virtualize_detector(proj, geom):
    """Reinterpret a physical ``nu x nu`` detector image on the virtual plane.

    Samples are untouched; only the side length shrinks by ``SO/SP``.
    """
    proj = np.asarray(proj)
    if proj.shape[-2:] != (geom.nu, geom.nu):
        raise ValueError(f"expected a {geom.nu}x{geom.nu} detector image")
    return VirtualDetector(proj, geom.su * geom.SO / geom.SP)


def map_to_detector(rho, theta, phi, SO):
    """Vectorised Radon-shell mapping ``(rho, theta, phi) -> (s, alpha, psi)``.

    Shadow-zone points come back as NaN in all three outputs.
    """
    rho, theta, phi = np.broadcast_arrays(
        np.asarray(rho, float), np.asarray(theta, float), np.asarray(phi, float)
    )
    if np.any(np.abs(rho) >= SO):
        raise ValueError("|rho| must be smaller than SO")
    sin_t = np.sin(theta)
    reach = SO * np.abs(sin_t)
    shadow = np.abs(rho) > reach
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(reach > 0, rho / np.where(reach > 0, reach, 1.0), 0.0)
    ratio = np.clip(ratio, -1.0, 1.0)
    # With sin(theta) < 0 never occurring (theta in [0, pi]) the plain
    # arccos is the non-negative branch.
    psi = np.mod(phi - np.arccos(ratio), 2 * np.pi)

    s = rho * SO / np.sqrt(SO**2 - rho**2)
    a = sin_t * np.sin(phi - psi)
    b = np.cos(theta)
    alpha = np.arctan2(b, a)

    nan = np.nan
    s = np.where(shadow, nan, s)
    alpha = np.where(shadow, nan, alpha)
    psi = np.where(shadow, nan, psi)
    return s, alpha, psi


def radon_to_detector(point, geom):
    """Map one Radon characteristic point to the detector.

    Returns ``None`` for shadow-zone points, which no source position on the
    circular orbit can see.
    """
    SO = geom.SO if isinstance(geom, Geometry) else float(geom)
    s, alpha, psi = map_to_detector(point.rho, point.theta, point.phi, SO)
    if np.isnan(s):
        return None
    return DetectorPoint(float(s), float(alpha), float(psi))


def _family_index(family):
    if family in (1, "horizontal", "h"):
        return 1
    if family in (2, "vertical", "v"):
        return 2
    raise ValueError(f"unknown line family {family!r}")


def line_to_polar(family, q, p):
    """Slope/intercept line to ``(s, alpha)`` with ``s = |p| / sqrt(1+q^2)``.

    ``alpha`` is the principal angle from the slope alone, so ``p`` and
    ``-p`` map to the same ``(s, alpha)``.
    """
    fam = _family_index(family)
    q = np.asarray(q, float)
    s = np.abs(p) / np.sqrt(1 + q**2)
    if fam == 1:
        with np.errstate(divide="ignore"):
            alpha = np.where(q == 0, np.pi / 2, np.arctan(-1 / np.where(q == 0, 1, q)))
    else:
        alpha = np.arctan(-q)
    if np.ndim(s) == 0:
        return float(s), float(alpha)
    return s, alpha


def polar_to_line(s, alpha):
    """Inverse of :func:`line_to_polar` for the line ``u cos a + v sin a = s``.

    Like its inverse this works on unoriented lines: ``alpha`` and
    ``alpha + pi`` give the same ``q``, and ``p`` carries the sign of ``s``.
    Picks the horizontal family when ``|tan alpha| >= 1`` so that
    ``|q| <= 1``.  Returns ``(family, q, p)`` with family 1 (horizontal) or
    2 (vertical); arrays in, arrays out.
    """
    s = np.asarray(s, float)
    alpha = np.asarray(alpha, float)
    c, sn = np.cos(alpha), np.sin(alpha)
    # the tolerance keeps the diagonal alpha = pi/4 in the horizontal family
    horiz = np.abs(sn) >= np.abs(c) - 1e-12
    lead = np.where(horiz, sn, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(horiz, -c, -sn) / lead
        p = s / np.abs(lead)
    family = np.where(horiz, 1, 2)
    if family.ndim == 0:
        return int(family), float(q), float(p)
    return family, q, p


def family_normals(family, q1, q2):
    """Unit normals of the planes of one 3D DRT family.

    ``family`` is 1, 2 or 3.  Returns an array with a trailing axis of 3.
    """
    q1, q2 = np.broadcast_arrays(np.asarray(q1, float), np.asarray(q2, float))
    norm = np.sqrt(1 + q1**2 + q2**2)
    comps = [-q1 / norm, -q2 / norm]
    comps.insert(family - 1, 1 / norm)
    return np.stack(comps, axis=-1)


def plane_to_spherical(family, q1, q2, p, dm=1.0):
    """Slope/intercept plane of a 3D DRT family to spherical Radon coordinates.

    The returned ``rho`` is non-negative; when ``p < 0`` the normal is
    flipped so the same plane is described, and ``sign`` records it.
    """
    if family in ("x", "y", "z"):
        family = "xyz".index(family) + 1
    nvec = family_normals(family, q1, q2)
    p = np.asarray(p, float)
    norm = np.sqrt(1 + np.asarray(q1, float) ** 2 + np.asarray(q2, float) ** 2)
    sign = np.where(p < 0, -1.0, 1.0)
    nvec = nvec * sign[..., None]
    rho = np.abs(p) * dm / norm
    theta = np.arccos(np.clip(nvec[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(nvec[..., 1], nvec[..., 0]), 2 * np.pi)
    if rho.ndim == 0:
        return RadonPoint(float(rho), float(theta), float(phi), float(sign))
    return RadonPoint(rho, theta, phi, sign)


def radon_grid(n, dm=1.0, p_offset=0.0):
    """Spherical coordinates of every sample of a ``RadonSpace4D``.

    Arrays are shaped ``(3, 3n+1, n+1, n+1)`` like the Radon data.  With
    ``p_offset`` the intercepts are shifted, e.g. ``-0.5`` for the midpoints
    between consecutive samples.
    """
    q = (np.arange(n + 1) - n // 2) / (n / 2)
    p = np.arange(3 * n + 1) - 3 * n // 2 + p_offset
    P, Q1, Q2 = np.meshgrid(p, q, q, indexing="ij")
    parts = [plane_to_spherical(f, Q1, Q2, P, dm) for f in (1, 2, 3)]
    return RadonPoint(
        np.stack([r.rho for r in parts]),
        np.stack([r.theta for r in parts]),
        np.stack([r.phi for r in parts]),
        np.stack([r.sign for r in parts]),
    )


def shadow_mask(points, geom):
    """True where ``|rho| > SO |sin theta|``.

    ``points`` is a :class:`RadonPoint` (arrays) or an even grid size ``n``,
    in which case :func:`radon_grid` is evaluated with the geometry's voxel
    size.
    """
    if isinstance(points, (int, np.integer)):
        points = radon_grid(int(points), geom.dm)
    SO = geom.SO if isinstance(geom, Geometry) else float(geom)
    return np.abs(points.rho) > SO * np.abs(np.sin(points.theta))
