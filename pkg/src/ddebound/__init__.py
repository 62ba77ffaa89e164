"""Exponential envelope certificates for scalar linear delay equations.

Given x'(t) + sum_k b_k(t) x(h_k(t)) = f(t) with bounded delays, this
package computes explicit bounds of the form

    |x(t)| <= M exp(-lambda (t - t0)) (...)   or its growing mirror,

together with the checkable positivity / contraction conditions that
make them valid, and verifies the resulting envelopes against
numerically integrated trajectories.
"""

from .expr import (
    Expr,
    ExprDomainError,
    ExprError,
    ExprSyntaxError,
    UnknownIdentifier,
    evaluate,
    parse,
    sample,
    to_source,
)
from .problem import (
    DDEProblem,
    DelayTerm,
    GridSpec,
    ValidationReport,
    default_grid,
    validate,
)
from .norms import (
    NormEstimate,
    PositivityViolation,
    inf_bound,
    liminf_estimate,
    sup_norm,
    sup_ratio_norm,
)
from .solver import (
    NonFiniteRightSide,
    StepSizeWarning,
    StepTooLarge,
    Trajectory,
    default_step,
    fundamental,
    fundamental_family,
    reconstruct_via_representation,
    solve,
)
from .estimates import (
    BracketFailure,
    ClassicCheck,
    CriticalRate,
    DECAYING,
    DecayCheck,
    EnvelopeCertificate,
    FundamentalBound,
    GROWING,
    HypothesisFailure,
    NoFeasibleRate,
    TunedRate,
    certificate_from_text,
    certificate_to_text,
    certify_decay,
    certify_growth,
    certify_growth_explicit,
    classic_stability_check,
    critical_decay_rate,
    fundamental_bound,
    optimize_decay_rate,
    optimize_growth_rate,
    quick_decay_check,
    trivial_growth_bound,
)
from .verify import (
    CertificateMismatch,
    VerificationReport,
    check_envelope,
    crossover_time,
    envelope_values,
    history_norm,
)
from .problemfile import (
    CertifyOptions,
    ProblemFile,
    ProblemFileError,
    SolveOptions,
    load_problem_file,
    parse_problem_file,
)
from .examples import EXAMPLE_IDS, example_text, load_example

__version__ = "0.1.0"

__all__ = [
    "Expr",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifier",
    "evaluate",
    "parse",
    "sample",
    "to_source",
    "DDEProblem",
    "DelayTerm",
    "GridSpec",
    "ValidationReport",
    "default_grid",
    "validate",
    "NormEstimate",
    "PositivityViolation",
    "inf_bound",
    "liminf_estimate",
    "sup_norm",
    "sup_ratio_norm",
    "NonFiniteRightSide",
    "StepSizeWarning",
    "StepTooLarge",
    "Trajectory",
    "default_step",
    "fundamental",
    "fundamental_family",
    "reconstruct_via_representation",
    "solve",
    "BracketFailure",
    "ClassicCheck",
    "CriticalRate",
    "DECAYING",
    "DecayCheck",
    "EnvelopeCertificate",
    "FundamentalBound",
    "GROWING",
    "HypothesisFailure",
    "NoFeasibleRate",
    "TunedRate",
    "certificate_from_text",
    "certificate_to_text",
    "certify_decay",
    "certify_growth",
    "certify_growth_explicit",
    "classic_stability_check",
    "critical_decay_rate",
    "fundamental_bound",
    "optimize_decay_rate",
    "optimize_growth_rate",
    "quick_decay_check",
    "trivial_growth_bound",
    "CertificateMismatch",
    "VerificationReport",
    "check_envelope",
    "crossover_time",
    "envelope_values",
    "history_norm",
    "CertifyOptions",
    "ProblemFile",
    "ProblemFileError",
    "SolveOptions",
    "load_problem_file",
    "parse_problem_file",
    "load_example",
    "example_text",
    "EXAMPLE_IDS",
    "__version__",
]
