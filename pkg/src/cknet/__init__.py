"""Causal knowledge transport on networks.

Gaussian-mixture measure algebra, linear additive-noise SCMs with hard and
soft interventions, alpha-abstractions with interventional-consistency
checking, and network sheaves/cosheaves that move causal knowledge between
subjects (global sections, relative measures along paths).
"""

from cknet.measures import (
    AffineMap,
    GaussianComponent,
    GaussianMixture,
    convex_combine,
    measures_equal,
    mixture_distance,
    pushforward,
    sample,
    w2_gaussian,
)
from cknet.scm import (
    CausalKnowledge,
    Intervention,
    LinearSCM,
    apply_intervention,
    generate_ck,
    intervention_map,
    is_valid_soft_measure,
    mixing_map,
    observational_measure,
    validate_scm,
)
from cknet.abstraction import (
    Abstraction,
    abstract_measure,
    check_ic,
    check_right_inverse,
    default_extension,
    validate_abstraction,
)
from cknet.sheaf import (
    CausalSheaf,
    Cochain0,
    Network,
    edge_disagreement,
    energy,
    is_global_section,
    observational_cochain,
    project_cochain,
    search_section,
    validate_sheaf,
)
from cknet.rck import PathQuery, embed_measure, rck_family, relative_measure

__all__ = [
    "AffineMap",
    "GaussianComponent",
    "GaussianMixture",
    "convex_combine",
    "measures_equal",
    "mixture_distance",
    "pushforward",
    "sample",
    "w2_gaussian",
    "CausalKnowledge",
    "Intervention",
    "LinearSCM",
    "apply_intervention",
    "generate_ck",
    "intervention_map",
    "is_valid_soft_measure",
    "mixing_map",
    "observational_measure",
    "validate_scm",
    "Abstraction",
    "abstract_measure",
    "check_ic",
    "check_right_inverse",
    "default_extension",
    "validate_abstraction",
    "CausalSheaf",
    "Cochain0",
    "Network",
    "edge_disagreement",
    "energy",
    "is_global_section",
    "observational_cochain",
    "project_cochain",
    "search_section",
    "validate_sheaf",
    "PathQuery",
    "embed_measure",
    "rck_family",
    "relative_measure",
]
