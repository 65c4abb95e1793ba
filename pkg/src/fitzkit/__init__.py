"""Desk-scale toolkit for monotone set-valued operators.

Computes Fitzpatrick functions of sampled operators, builds the standard
operator zoo (finite graphs, monotone linear maps, subdifferentials, normal
cones, duality maps, shifts, perturbations), and runs near-convexity
criteria as executable checks that emit witness-carrying certificates.
"""

__version__ = "0.1.0"

from .errors import (
    DimensionMismatchError,
    FitzkitError,
    NoClosedFormError,
    NotMaximalError,
    NotSeparableError,
    ScenarioParseError,
    ValidationError,
    VacuousForFiniteGraphError,
    ZOnDomainError,
)
from .vecspace import (
    Box,
    DEFAULT_TOL,
    Grid,
    PairPoint,
    Polytope,
    ToleranceConfig,
    as_vector,
    conv_hull,
    dist_to_polytope,
    dot,
    hausdorff,
    pair,
    project_onto_generated_set,
    separate,
)
from .operators import (
    BoxIndicator,
    DualityMapOp,
    Fiber,
    FiniteGraph,
    FunSum,
    GraphOp,
    LinearOp,
    NormPower,
    NormalConeOp,
    OperatorSpec,
    PerturbedOp,
    Quadratic,
    ShiftedOp,
    SubdiffOp,
    TranslatedNormPower,
    duality_map,
    fiber,
    graph_sample,
    inverse_graph,
    maximality_probe,
    membership,
    monotone_check,
    monotonically_related,
    perturb,
    resolvent,
    shift_operator,
    unique_domain_points,
)
from .certificates import Certificate, QuotientTrace, Verdict
from .fitzpatrick import (
    DomainScan,
    Finite,
    FitzValue,
    InfiniteSuspected,
    fitz_domain_projection,
    fitz_finite,
    fitz_inequality_check,
    fitz_linear,
    fitz_sampled,
    shift_identity_check,
)
from .criteria import (
    blowup_witness_sequence,
    br_check,
    conv_domain_certificate,
    near_convexity_certificate,
    simons_lower_bound_check,
    sup_quotient,
    theorem36_experiment,
)
from .harness import (
    Report,
    ScenarioConfig,
    emit_report,
    load_scenario,
    run_suite,
)

__all__ = [
    "__version__",
    # substrate
    "Box",
    "Grid",
    "PairPoint",
    "Polytope",
    "ToleranceConfig",
    "DEFAULT_TOL",
    "as_vector",
    "conv_hull",
    "dist_to_polytope",
    "dot",
    "hausdorff",
    "pair",
    "project_onto_generated_set",
    "separate",
    # operators
    "BoxIndicator",
    "DualityMapOp",
    "Fiber",
    "FiniteGraph",
    "FunSum",
    "GraphOp",
    "LinearOp",
    "NormPower",
    "NormalConeOp",
    "OperatorSpec",
    "PerturbedOp",
    "Quadratic",
    "ShiftedOp",
    "SubdiffOp",
    "TranslatedNormPower",
    "duality_map",
    "fiber",
    "graph_sample",
    "inverse_graph",
    "maximality_probe",
    "membership",
    "monotone_check",
    "monotonically_related",
    "perturb",
    "resolvent",
    "shift_operator",
    "unique_domain_points",
    # fitzpatrick
    "DomainScan",
    "Finite",
    "FitzValue",
    "InfiniteSuspected",
    "fitz_domain_projection",
    "fitz_finite",
    "fitz_inequality_check",
    "fitz_linear",
    "fitz_sampled",
    "shift_identity_check",
    # certificates and criteria
    "Certificate",
    "QuotientTrace",
    "Verdict",
    "blowup_witness_sequence",
    "br_check",
    "conv_domain_certificate",
    "near_convexity_certificate",
    "simons_lower_bound_check",
    "sup_quotient",
    "theorem36_experiment",
    # harness
    "Report",
    "ScenarioConfig",
    "emit_report",
    "load_scenario",
    "run_suite",
    # errors
    "DimensionMismatchError",
    "FitzkitError",
    "NoClosedFormError",
    "NotMaximalError",
    "NotSeparableError",
    "ScenarioParseError",
    "ValidationError",
    "VacuousForFiniteGraphError",
    "ZOnDomainError",
]
