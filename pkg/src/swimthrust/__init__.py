"""Mean thrust of a sphere driven by a stretching dipole and a torsional oscillation.

The package evaluates the second-order thrust ``G(h)`` and the mean
swimming-velocity coefficient ``gamma1 = G / (6 pi)`` as functions of the
Stokes number ``h``, along with the checks that back up each ingredient.
"""

from .fields import DomainError, ModelParams, SpacePoint, build_model
from .quadrature import QuadratureError, QuadResult, SurfaceRule, VolumeRule, integrate_exterior, integrate_surface
from .sweep import AnalysisResult, ConfigError, SweepConfig, SweepTable, ZeroCrossing, analyze, find_zero_crossing, run_sweep
from .thrust import ThrustResult, propulsion_velocity, thrust_raw, thrust_reduced
from .verification import VerificationReport, run_all

__all__ = [
    "AnalysisResult", "ConfigError", "DomainError", "ModelParams", "QuadResult", "QuadratureError",
    "SpacePoint", "SurfaceRule", "SweepConfig", "SweepTable", "ThrustResult", "VerificationReport",
    "VolumeRule", "ZeroCrossing", "analyze", "build_model", "find_zero_crossing", "integrate_exterior",
    "integrate_surface", "propulsion_velocity", "run_all", "run_sweep", "thrust_raw", "thrust_reduced",
]
__version__ = "0.1.0"
