"""Truthful affine scores from convex functions.

Constructors turn convex functions into proper scoring rules, truthful
payments, and finite-property elicitation schemes; verifiers check the
converse directions (properness, cyclic monotonicity, implementability,
power-diagram structure) on finite desk-scale instances, always
returning a certificate or a concrete counterexample.
"""

from .core import (
    DEFAULT_TOL,
    CheckReport,
    ConvexSpec,
    DimensionMismatchError,
    DomainError,
    ElicitError,
    EvaluationError,
    InconsistentAnchorsError,
    LinearFamily,
    MaxAffine,
    NegEntropy,
    NonPositiveScaleError,
    NotImplementableError,
    NotMonotoneError,
    ScoreTable,
    SquaredNorm,
    TypeSpace,
    UnreachableActionError,
    Witness,
    bregman_divergence,
    check_subgradient_selection,
    conjugate,
    eval_convex,
    subgradient,
)
from .duality import (
    Equilibrium,
    biconjugate,
    check_duality_identities,
    dual_property,
    dual_report_score,
    dual_type_score,
    elicitation_game_equilibria,
)
from .monotone import (
    check_cmon,
    check_local_truthful,
    check_path_independence,
    check_wmon,
)
from .payments import (
    PaymentResult,
    RevenueInterval,
    StepAllocation,
    check_revenue_equivalence,
    myerson_payment,
    revenue_interval,
    rochet_payments,
)
from .properties import (
    FitWeightsResult,
    LabeledSample,
    Labeling,
    PowerDiagramSpec,
    bregman_to_power,
    check_level_set_convexity,
    check_wmon_cells,
    fit_weights,
    homothet_transform,
    power_cells,
    score_from_diagram,
)
from .scoring import (
    DecisionScoreSpec,
    OutcomeScoreTable,
    check_expert_separation,
    check_proper,
    check_truthful,
    expected_score,
    make_decision_score,
    make_direct_score,
    make_scoring_rule,
    simplex_grid,
)

__version__ = "0.1.0"
