"""Worst-case (sublinear) and convex expectations on finite outcome spaces.

Credal sets with exact hull membership and separation, penalty-generated
convex expectations with minimal-penalty evaluation, conditional
expectations through kernels with pasting and tower-property checking, a
nonlinear Fubini checker, and robust one-step and multi-period risk
measures with exact primal-dual verification.
"""

__version__ = "0.1.0"

from .conditional import (
    AdditivityReport,
    CredalKernel,
    PenaltyKernel,
    TowerReport,
    TowerWitness,
    check_penalty_additivity,
    check_tower,
    compose,
    composed_atoms,
    conditional_convex,
    conditional_expectation,
    pasting,
)
from .credal import (
    CredalSet,
    SeparationCertificate,
    conjugate_indicator,
    equal_sets,
    marginal_set,
    membership,
    separate,
    sublinear_expectation,
)
from .demos import DEMOS, DemoReport
from .errors import (
    CredalkitError,
    NotSeparableError,
    SizeGuardError,
    SpaceMismatchError,
    ValidationError,
)
from .fubini import FubiniReport, check_fubini, interchange_gap
from .penalty import PenaltyAtoms, convex_expectation, envelope_atoms, minimal_penalty
from .risk import (
    LossSpec,
    OceResult,
    ScenarioTree,
    avar_dual_evaluate,
    avar_dual_set,
    compose_risk,
    compose_sublinear,
    oce,
)
from .spaces import (
    Kernel,
    OutcomeSpace,
    ProbVector,
    ProductSpace,
    RandomVariable,
    disintegrate,
    expectation,
    product,
    slice_u,
    swap_measure,
    swap_variable,
)

__all__ = [
    "AdditivityReport",
    "CredalKernel",
    "CredalSet",
    "CredalkitError",
    "DEMOS",
    "DemoReport",
    "FubiniReport",
    "Kernel",
    "LossSpec",
    "NotSeparableError",
    "OceResult",
    "OutcomeSpace",
    "PenaltyAtoms",
    "PenaltyKernel",
    "ProbVector",
    "ProductSpace",
    "RandomVariable",
    "ScenarioTree",
    "SeparationCertificate",
    "SizeGuardError",
    "SpaceMismatchError",
    "TowerReport",
    "TowerWitness",
    "ValidationError",
    "avar_dual_evaluate",
    "avar_dual_set",
    "check_fubini",
    "check_penalty_additivity",
    "check_tower",
    "compose",
    "compose_risk",
    "compose_sublinear",
    "composed_atoms",
    "conditional_convex",
    "conditional_expectation",
    "conjugate_indicator",
    "convex_expectation",
    "disintegrate",
    "envelope_atoms",
    "equal_sets",
    "expectation",
    "interchange_gap",
    "marginal_set",
    "membership",
    "minimal_penalty",
    "oce",
    "pasting",
    "product",
    "separate",
    "slice_u",
    "sublinear_expectation",
    "swap_measure",
    "swap_variable",
]
