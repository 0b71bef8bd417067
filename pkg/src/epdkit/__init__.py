"""Euler-Poisson-Darboux means, shifted k-plane transforms and their inversion."""

__version__ = "0.1.0"

from .classify import AdmissibilityQuery, AdmissibilityReport, classify
from .grid import ConfigurationError, Field, Grid, dft_forward, dft_inverse, read_field, write_field
from .kplane import (
    PlaneParam,
    Sinogram,
    StiefelFrame,
    divergence_demo,
    kplane_transform,
    random_frames,
    shifted_kplane,
    shifted_kplane_alpha,
    shifted_kplane_ball,
    sinogram,
    uniform_frames,
)
from .meanops import (
    DomainError,
    OperatorSpec,
    UnsupportedRepresentationError,
    ball_mean,
    epd_mean_spatial,
    epd_mean_spectral,
    epd_solution,
    spherical_mean,
)
from .phantoms import PhantomSpec, render
from .radial import RadialProfile, counterexample_profile, erdelyi_kober, radial_kplane
from .reconstruct import (
    ReconParams,
    Reconstruction,
    shifted_sinogram_invert,
    single_radius_invert,
    two_radius_invert,
)
from .specfun import bessel_j, bessel_zeros, gamma_fn, is_zero_quotient, normalized_bessel
