"""Cone-beam CT reconstruction through the 3D discrete Radon transform.

Modules
-------
spectral   centred FFTs, fractional Fourier transform, Dirichlet kernel
ppft       2D/3D pseudo-polar Fourier transforms
drt        discrete Radon transforms and the 3D inverse
geometry   scanner geometry and Radon/detector coordinate maps
phantom    ellipsoid phantoms and the cone-beam projector
grangeat   projections to 3D Radon data
metrics    PSNR, CNR and mean SSIM
pipeline   persisted end-to-end runs
"""

from .drt import RadonSpace4D, drt2, drt3, idrt3
from .geometry import Geometry
from .grangeat import (
    detector_radon_derivative,
    fill_shadow_zone,
    integrate_radial,
    preweight,
    rebin,
)
from .metrics import cnr, mssim, psnr
from .phantom import cone_beam_project, shepp_logan_3d
from .pipeline import RunConfig, run_pipeline
from .ppft import ppft2, ppft3
from .storage import load_volume, save_volume

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "RadonSpace4D",
    "RunConfig",
    "cnr",
    "cone_beam_project",
    "detector_radon_derivative",
    "drt2",
    "drt3",
    "fill_shadow_zone",
    "idrt3",
    "integrate_radial",
    "load_volume",
    "mssim",
    "ppft2",
    "ppft3",
    "preweight",
    "psnr",
    "rebin",
    "run_pipeline",
    "save_volume",
    "shepp_logan_3d",
]
