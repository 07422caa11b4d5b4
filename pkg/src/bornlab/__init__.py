"""Triple-slit interference null-test toolkit.

Computes the interference hierarchy and its order-3 test statistics from
amplitudes or measured counts, simulates the eight-combination far-field
diffraction experiment, and quantifies how source, mask and detector
imperfections masquerade as a violation of the quadratic probability
rule.
"""

from ._backend import BACKEND, HAS_NUMBA
from .config import ConfigError, RunConfig, load_config, parse_config, serialize_config
from .experiment import (
    CountsRecord,
    RhoSeries,
    estimate_rho_series,
    rho_per_repetition,
    run_experiment,
)
from .interference import (
    BORN,
    COMBINATIONS,
    DEFAULT_GUARD,
    PATH_LABELS,
    PathAmplitudes,
    ProbabilityRule,
    ProbabilityVector,
    SorkinCurves,
    SorkinResult,
    epsilon,
    interference_term,
    rule_probability,
    sorkin,
    sorkin_curves,
)
from .optics import (
    BLOCKING,
    OPENING,
    CombinationAperture,
    CombinationMask,
    OpticalConfig,
    SlitPlate,
    build_combination_aperture,
    combination_mask_for_plate,
    far_field_amplitude,
    pattern_set,
    stack_patterns,
    triple_slit_plate,
)
from .systematics import (
    DetectorModel,
    PowerModel,
    RhoSweep,
    detector_response,
    detector_rho_sweep,
    misalignment_rho_sweep,
    poisson_sigma,
    power_sigma,
    power_sigma_curves,
    uniform_displacement_sampler,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BLOCKING",
    "BORN",
    "COMBINATIONS",
    "ConfigError",
    "CombinationAperture",
    "CombinationMask",
    "CountsRecord",
    "DEFAULT_GUARD",
    "DetectorModel",
    "HAS_NUMBA",
    "OPENING",
    "OpticalConfig",
    "PATH_LABELS",
    "PathAmplitudes",
    "PowerModel",
    "ProbabilityRule",
    "ProbabilityVector",
    "RhoSeries",
    "RhoSweep",
    "RunConfig",
    "SlitPlate",
    "SorkinCurves",
    "SorkinResult",
    "build_combination_aperture",
    "combination_mask_for_plate",
    "detector_response",
    "detector_rho_sweep",
    "epsilon",
    "estimate_rho_series",
    "far_field_amplitude",
    "interference_term",
    "load_config",
    "misalignment_rho_sweep",
    "parse_config",
    "pattern_set",
    "poisson_sigma",
    "power_sigma",
    "power_sigma_curves",
    "rho_per_repetition",
    "rule_probability",
    "run_experiment",
    "serialize_config",
    "sorkin",
    "sorkin_curves",
    "stack_patterns",
    "triple_slit_plate",
    "uniform_displacement_sampler",
]
