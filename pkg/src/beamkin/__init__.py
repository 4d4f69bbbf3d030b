"""
Kinetic photon-distribution model of laser beam statistics in a turbulent
atmosphere: mean-field moments and phase-space density, intensity
correlations with a phase diffuser, beam wander, and a kinetic Monte-Carlo.
"""

from .errors import ConfigError, NumericalError, RegimeError, RegimeWarning, SimulationError
from .fluctuations import (
    CorrelationDecomposition,
    DiffuserParams,
    correlation_no_diffuser,
    correlation_with_diffuser,
    scintillation_index,
)
from .kinetic_mc import InitialMode, McConfig, McEstimate, simulate_photons
from .meanfield import (
    BeamParams,
    ExactMeanPDF,
    Moments,
    mean_intensity,
    mean_pdf_asymptotic,
    mean_pdf_exact,
    moments,
    regime_check,
)
from .numerics import QuadratureSettings
from .scenario import Scenario, load_scenario, parse_scenario_text
from .spectrum import GammaMode, SpectrumModel
from .wandering import WanderReport, wander_classical, wander_report, wander_shot

__all__ = [
    "BeamParams",
    "ConfigError",
    "CorrelationDecomposition",
    "DiffuserParams",
    "ExactMeanPDF",
    "GammaMode",
    "InitialMode",
    "McConfig",
    "McEstimate",
    "Moments",
    "NumericalError",
    "QuadratureSettings",
    "RegimeError",
    "RegimeWarning",
    "Scenario",
    "SimulationError",
    "SpectrumModel",
    "WanderReport",
    "correlation_no_diffuser",
    "correlation_with_diffuser",
    "load_scenario",
    "mean_intensity",
    "mean_pdf_asymptotic",
    "mean_pdf_exact",
    "moments",
    "parse_scenario_text",
    "regime_check",
    "scintillation_index",
    "simulate_photons",
    "wander_classical",
    "wander_report",
    "wander_shot",
]
