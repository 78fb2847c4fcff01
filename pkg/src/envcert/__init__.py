"""Global-stability certification for periodic population models.

Build maps with make_model, assemble them with make_system, and run
certify_global_stability; or drive everything from a YAML config via
the envcert command-line tool.
"""

from .certify import (
    CandidateRecord,
    ConditionsReport,
    DiagnosisReport,
    LocalStability,
    OracleReport,
    SchwarzianReport,
    StabilityCertificate,
    certify_global_stability,
    closed_form_conditions,
    default_candidates,
    diagnose_failure,
    local_stability,
    schwarzian,
    schwarzian_test,
    two_cycle_oracle,
)
from .config import SystemConfig, config_from_dict, config_to_system, parse_system_config
from .envelopes import (
    CommonEnvelopeReport,
    Envelope,
    EnvelopeVerdict,
    FitReport,
    InvolutionReport,
    SandwichReport,
    StructuralReport,
    check_decreasing,
    check_involution,
    common_envelope,
    envelops,
    fit_mobius,
    make_custom_envelope,
    make_mobius,
    make_piecewise_bh,
    make_reciprocal,
    sandwich_check,
    structural_check,
)
from .models import (
    FAMILIES,
    AxiomReport,
    AxiomViolation,
    Interval,
    PopulationModel,
    make_model,
    verify_population_axioms,
)
from .numerics import (
    GridConfig,
    SignReport,
    adaptive_sign_check,
    bracketed_root,
    fd_derivative,
    scan_roots,
)
from .periodic import (
    GeometricCycle,
    MonotonicityReport,
    PeriodicSystem,
    compose_array,
    compose_eval,
    composition_derivative,
    composition_derivative_array,
    find_fixed_points,
    find_geometric_cycles,
    iterate_orbit,
    make_system,
    monotonicity_bound,
)

__version__ = "0.1.0"
