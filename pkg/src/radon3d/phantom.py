"""Ellipsoid phantoms and a circular-orbit cone-beam forward projector."""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .geometry import Geometry
from .storage import load_volume, save_volume

__all__ = [
    "Ellipsoid",
    "Phantom",
    "shepp_logan_ellipsoids",
    "head_ellipsoids",
    "shepp_logan_3d",
    "builtin_phantom",
    "voxel_coordinates",
    "voxelize",
    "cone_beam_project",
    "detector_coordinates",
    "load_phantom_json",
    "save_volume",
    "load_volume",
]

# Schabel's 3D modified Shepp-Logan table (Toft contrast), normalised to the
# unit cube [-1, 1]^3:  A  a  b  c  x0  y0  z0  phi  theta  psi  (degrees).
_MODIFIED_SHEPP_LOGAN = np.array([
    [1.0, 0.6900, 0.920, 0.810, 0.00, 0.0000, 0.00, 0, 0, 0],
    [-0.8, 0.6624, 0.874, 0.780, 0.00, -0.0184, 0.00, 0, 0, 0],
    [-0.2, 0.1100, 0.310, 0.220, 0.22, 0.0000, 0.00, -18, 0, 10],
    [-0.2, 0.1600, 0.410, 0.280, -0.22, 0.0000, 0.00, 18, 0, 10],
    [0.1, 0.2100, 0.250, 0.410, 0.00, 0.3500, -0.15, 0, 0, 0],
    [0.1, 0.0460, 0.046, 0.050, 0.00, 0.1000, 0.25, 0, 0, 0],
    [0.1, 0.0460, 0.046, 0.050, 0.00, -0.1000, 0.25, 0, 0, 0],
    [0.1, 0.0460, 0.023, 0.050, -0.08, -0.6050, 0.00, 0, 0, 0],
    [0.1, 0.0230, 0.023, 0.020, 0.00, -0.6060, 0.00, 0, 0, 0],
    [0.1, 0.0230, 0.046, 0.020, 0.06, -0.6050, 0.00, 0, 0, 0],
])

# Procedural head-like phantom (same normalised layout): skull, brain,
# ventricles, a few grey/white matter blobs, orbits.
_HEAD = np.array([
    [1.00, 0.72, 0.94, 0.86, 0.00, 0.00, 0.00, 0, 0, 0],
    [-0.72, 0.67, 0.89, 0.80, 0.00, -0.01, 0.02, 0, 0, 0],
    [0.06, 0.55, 0.70, 0.55, 0.00, -0.05, 0.10, 0, 0, 0],
    [-0.16, 0.07, 0.24, 0.12, -0.11, 0.02, 0.08, 15, 0, 0],
    [-0.16, 0.07, 0.24, 0.12, 0.11, 0.02, 0.08, -15, 0, 0],
    [0.10, 0.12, 0.12, 0.10, -0.30, -0.40, -0.10, 0, 0, 0],
    [0.08, 0.14, 0.10, 0.12, 0.32, -0.35, 0.20, 30, 0, 0],
    [-0.12, 0.09, 0.09, 0.08, -0.24, 0.58, -0.30, 0, 0, 0],
    [-0.12, 0.09, 0.09, 0.08, 0.24, 0.58, -0.30, 0, 0, 0],
    [0.15, 0.05, 0.05, 0.05, 0.00, 0.30, 0.35, 0, 0, 0],
])


@dataclass
class Ellipsoid:
    """Additive ellipsoid; ``angle`` rotates it about the z axis (rad)."""

    center: tuple
    axes: tuple
    angle: float = 0.0
    density: float = 1.0

    def __post_init__(self):
        self.center = tuple(float(c) for c in self.center)
        self.axes = tuple(float(a) for a in self.axes)
        if len(self.center) != 3 or len(self.axes) != 3:
            raise ValueError("center and axes need three components")
        if min(self.axes) <= 0:
            raise ValueError("semi-axes must be positive")

    def _rotation(self):
        c, s = np.cos(self.angle), np.sin(self.angle)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def to_local(self, pts):
        """Object-frame points (..., 3) to the ellipsoid's scaled frame."""
        local = (np.asarray(pts) - self.center) @ self._rotation()
        return local / np.asarray(self.axes)

    def contains(self, pts):
        return np.sum(self.to_local(pts) ** 2, axis=-1) <= 1.0

    def chord(self, origin, direction):
        """Length of the intersection of rays with the ellipsoid.

        ``origin`` is (3,) or (..., 3); ``direction`` (..., 3) unit vectors.
        """
        rot = self._rotation()
        ax = np.asarray(self.axes)
        o = ((np.asarray(origin) - self.center) @ rot) / ax
        e = (np.asarray(direction) @ rot) / ax
        a = np.sum(e * e, axis=-1)
        b = np.sum(o * e, axis=-1)
        c = np.sum(o * o, axis=-1) - 1.0
        disc = b * b - a * c
        return np.where(disc > 0, 2.0 * np.sqrt(np.maximum(disc, 0.0)) / a, 0.0)

    def volume(self):
        return 4.0 / 3.0 * np.pi * np.prod(self.axes)

    def to_dict(self):
        return {
            "center": list(self.center),
            "axes": list(self.axes),
            "angle": self.angle,
            "density": self.density,
        }


@dataclass
class Phantom:
    ellipsoids: list = field(default_factory=list)
    sx: float = 64.0
    max_density: float = None

    def __post_init__(self):
        half = self.sx / 2
        for e in self.ellipsoids:
            reach = np.abs(np.asarray(e.center)) + max(e.axes)
            if np.any(reach > half + 1e-9):
                raise ValueError("ellipsoid extends outside the object cube")
        if self.max_density is None:
            self.max_density = _max_density(self.ellipsoids, self.sx)

    def evaluate(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1])
        for e in self.ellipsoids:
            out += np.where(e.contains(pts), e.density, 0.0)
        return out

    def integral(self):
        """Exact integral of the density over space."""
        return sum(e.density * e.volume() for e in self.ellipsoids)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(
                {"sx": self.sx, "ellipsoids": [e.to_dict() for e in self.ellipsoids]},
                fh,
                indent=2,
            )


def _max_density(ellipsoids, sx, n=96):
    # Largest value of the additive sum, found on a fine grid plus the
    # ellipsoid centres (tiny ellipsoids may fall between grid nodes).
    if not ellipsoids:
        return 0.0
    x = (np.arange(n) + 0.5) / n * sx - sx / 2
    pts = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    best = 0.0
    for chunk in np.array_split(pts.reshape(-1, 3), 8):
        best = max(best, _sum_at(ellipsoids, chunk).max())
    centers = np.array([e.center for e in ellipsoids])
    return float(max(best, _sum_at(ellipsoids, centers).max()))


def _sum_at(ellipsoids, pts):
    out = np.zeros(len(pts))
    for e in ellipsoids:
        out += np.where(e.contains(pts), e.density, 0.0)
    return out


def _from_table(table, sx):
    half = sx / 2
    ells = []
    for A, a, b, c, x0, y0, z0, phi, theta, psi in table:
        if theta != 0:
            raise ValueError("only z-axis rotations are supported")
        ells.append(
            Ellipsoid(
                center=(x0 * half, y0 * half, z0 * half),
                axes=(a * half, b * half, c * half),
                angle=np.deg2rad(phi + psi),
                density=A,
            )
        )
    return ells


def shepp_logan_ellipsoids(sx=64.0):
    """The ten ellipsoids of the 3D modified Shepp-Logan phantom, in mm."""
    return _from_table(_MODIFIED_SHEPP_LOGAN, sx)


def head_ellipsoids(sx=32.0):
    return _from_table(_HEAD, sx)


def builtin_phantom(name, sx):
    if name in ("shepp-logan", "shepp_logan", "sl"):
        return Phantom(shepp_logan_ellipsoids(sx), sx, max_density=1.0)
    if name == "head":
        return Phantom(head_ellipsoids(sx), sx, max_density=1.0)
    raise ValueError(f"unknown builtin phantom {name!r}")


def voxel_coordinates(n, sx):
    """Sample positions ``(i - n/2) * sx/n`` matching the DRT index origin."""
    return (np.arange(n) - n // 2) * (sx / n)


def voxelize(phantom, n, sx=None):
    """Point-sample a phantom at the voxel positions of an ``n^3`` grid.

    ``sx`` overrides the phantom's own cube side.
    """
    if n % 2:
        raise ValueError("n must be even")
    x = voxel_coordinates(n, phantom.sx if sx is None else sx)
    pts = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    return phantom.evaluate(pts)


def shepp_logan_3d(n, sx=64.0):
    """Voxelised modified Shepp-Logan phantom of side ``n``."""
    return voxelize(builtin_phantom("shepp-logan", sx), n)


def load_phantom_json(path):
    """Load ``{"sx": ..., "ellipsoids": [...]}`` or a bare list of records.

    Each record has ``center`` and ``axes`` (mm), optional ``angle`` (rad)
    and ``density``.  A bare list needs an ``sx`` big enough to hold it and
    defaults to the smallest cube enclosing every ellipsoid's bounding box.
    """
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        records, sx = doc, None
    else:
        records, sx = doc["ellipsoids"], doc.get("sx")
    ells = [
        Ellipsoid(
            center=r["center"],
            axes=r["axes"],
            angle=float(r.get("angle", 0.0)),
            density=float(r.get("density", 1.0)),
        )
        for r in records
    ]
    if sx is None:
        sx = 2 * max(max(abs(c) + max(e.axes) for c in e.center) for e in ells)
    return Phantom(ells, float(sx))


def detector_coordinates(geom):
    """Virtual-detector sample positions (mm), centred like the DRT index."""
    return (np.arange(geom.nu) - geom.nu // 2) * geom.du_virtual


def _rays(geom, psi):
    src = geom.SO * np.array([np.cos(psi), np.sin(psi), 0.0])
    e_u = np.array([-np.sin(psi), np.cos(psi), 0.0])
    e_v = np.array([0.0, 0.0, 1.0])
    c = detector_coordinates(geom)
    # rows are v (axis 0), columns u (axis 1)
    pix = c[:, None, None] * e_v + c[None, :, None] * e_u
    d = pix - src
    return src, d / np.linalg.norm(d, axis=-1, keepdims=True)


def cone_beam_project(obj, geom, psi=None):
    """Cone-beam line integrals on the virtual detector.

    Parameters
    ----------
    obj : Phantom or ndarray
        A phantom is projected analytically (exact chord lengths); a voxel
        volume of side ``geom.nx`` is ray-marched with trilinear sampling
        and step ``dm/2``.
    geom : Geometry
    psi : array_like, optional
        Source angles; defaults to ``geom.psi``.

    Returns
    -------
    ndarray, shape (n_psi, nu, nu)
        Indexed ``[psi, v, u]``.
    """
    psi = geom.psi if psi is None else np.atleast_1d(np.asarray(psi, float))
    if isinstance(obj, Phantom):
        for e in obj.ellipsoids:
            if np.linalg.norm(e.center) + max(e.axes) >= geom.SO:
                raise ValueError("source orbit passes through the object")
        return np.stack([_project_analytic(obj, geom, a) for a in psi])
    vol = np.asarray(obj, dtype=float)
    if vol.shape != (geom.nx,) * 3:
        raise ValueError(f"volume must be {geom.nx}^3")
    return np.stack([_project_voxels(vol, geom, a) for a in psi])


def _project_analytic(phantom, geom, psi):
    src, d = _rays(geom, psi)
    out = np.zeros(d.shape[:2])
    for e in phantom.ellipsoids:
        out += e.density * e.chord(src, d)
    return out


def _project_voxels(vol, geom, psi):
    n = vol.shape[0]
    dm = geom.dm
    src, d = _rays(geom, psi)
    radius = geom.sx * np.sqrt(3) / 2 + dm
    step = dm / 2
    n_steps = int(np.ceil(2 * radius / step))
    t = geom.SO - radius + (np.arange(n_steps) + 0.5) * step
    out = np.zeros(d.shape[:2])
    for chunk in np.array_split(np.arange(n_steps), max(1, n_steps // 16)):
        pts = src + t[chunk, None, None, None] * d  # (c, nu, nu, 3)
        idx = pts / dm + n // 2
        vals = map_coordinates(
            vol, np.moveaxis(idx, -1, 0).reshape(3, -1), order=1, mode="constant"
        )
        out += vals.reshape(pts.shape[:-1]).sum(axis=0)
    return out * step
