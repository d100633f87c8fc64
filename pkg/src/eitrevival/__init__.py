"""Collapse and revival of EIT quantum-memory retrieval in a magnetic field."""
__version__ = "0.1.0"

from .zeeman import (
    DEFAULT_CONSTANTS,
    DomainError,
    PhysicalConstants,
    Scheme,
    larmor_frequency,
    spin_wave_detuning,
    selection_rule_allowed,
    allowed_pairs,
)
from .interference import (
    CoherenceMatrix,
    DecayEnvelope,
    DiagonalCoherences,
    EnvelopeLaw,
    ModelParams,
    ValidationError,
    interference,
    invert_relative_amplitude,
    relative_amplitude,
    retrieval,
    retrieval_two_level,
    revival_times,
)
from .populations import (
    Lineshape,
    PumpState,
    RemainderPolicy,
    SelectivityModel,
    apply_detuning_selectivity,
    calibrate_width,
    pump_distribution,
)
from .dephasing import CloudGeometry, combined_lifetime, gradient_from_lifetime, gradient_lifetime, motional_lifetime
from .estimation import (
    EstimationError,
    FieldIndistinguishableError,
    FitResult,
    NoiseSpec,
    NoOscillationError,
    RetrievalCurve,
    estimate_stray_field,
    fit_curve,
    synthesize_curve,
)
from .scan import Objective, ScanSpec, ScanVariable, optimize_detuning, scan_detuning, scan_field
