"""Certified series and sphere harmonic checks for Lieb-Thirring type bounds on S^2."""

from ._version import __version__
from .em_certifier import certify, em_upper_bound, find_p_star, m0, m1, phi, phi_coefficients
from .errors import (
    BracketError,
    DomainError,
    NegativePotentialError,
    NonConvergentError,
    PoleError,
    QuadratureError,
)
from .inequality_lab import (
    alt_trace_check,
    b_p,
    build_family,
    compare_constants,
    density,
    gn_ratio,
    theorem1_ratio,
    variational_step_check,
)
from .spectral_series import CertifiedValue, TailMethod, asymptotic_defect, eval_I, eval_J, eval_R
from .sphere_basis import HarmonicIndex, SpectralCoeffs, SpherePoint, build_rule, sph_harmonic, synthesize

__all__ = [
    "__version__",
    "BracketError",
    "CertifiedValue",
    "DomainError",
    "HarmonicIndex",
    "NegativePotentialError",
    "NonConvergentError",
    "PoleError",
    "QuadratureError",
    "SpectralCoeffs",
    "SpherePoint",
    "TailMethod",
    "alt_trace_check",
    "asymptotic_defect",
    "b_p",
    "build_family",
    "build_rule",
    "certify",
    "compare_constants",
    "density",
    "em_upper_bound",
    "eval_I",
    "eval_J",
    "eval_R",
    "find_p_star",
    "gn_ratio",
    "m0",
    "m1",
    "phi",
    "phi_coefficients",
    "sph_harmonic",
    "synthesize",
    "theorem1_ratio",
    "variational_step_check",
]
