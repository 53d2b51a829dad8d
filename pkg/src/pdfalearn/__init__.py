"""Learning and analysis of PDFA under constrained (null-probability) models."""

from .automata import (
    CongruenceMode,
    GuideAutomaton,
    LanguageModel,
    Pdfa,
    PdfaLanguageModel,
    StatePartition,
    compose,
    congruence_partition,
    is_defined,
    isomorphic,
    materialize_compose,
    next_dist,
    prefix_prob,
    quotient,
    string_prob,
    termination_mass,
    trim,
    walk,
)
from .equivcheck import CeKind, Counterexample, hk_equiv, shortest_defined_ce_prefix
from .learner import (
    ClassificationTree,
    LearnerConfig,
    LearnerMode,
    LearnerMonitor,
    learn,
)
from .randgen import GenSpec, assign_distributions, random_dfa, random_pdfa
from .simplex import (
    Alphabet,
    Distribution,
    ExactPartitioner,
    Partitioner,
    QuantizationPartitioner,
    TopKPartitioner,
    TopP,
    TopR,
    ZERO_CLASS,
    apply_sampling,
    normalize,
)
from .teacher import PacParams, exact_teacher, filter_teacher, pac_teacher

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "CeKind",
    "ClassificationTree",
    "CongruenceMode",
    "Counterexample",
    "Distribution",
    "ExactPartitioner",
    "GenSpec",
    "GuideAutomaton",
    "LanguageModel",
    "LearnerConfig",
    "LearnerMode",
    "LearnerMonitor",
    "PacParams",
    "Partitioner",
    "Pdfa",
    "PdfaLanguageModel",
    "QuantizationPartitioner",
    "StatePartition",
    "TopKPartitioner",
    "TopP",
    "TopR",
    "ZERO_CLASS",
    "apply_sampling",
    "assign_distributions",
    "compose",
    "congruence_partition",
    "exact_teacher",
    "filter_teacher",
    "hk_equiv",
    "is_defined",
    "isomorphic",
    "learn",
    "materialize_compose",
    "next_dist",
    "normalize",
    "pac_teacher",
    "prefix_prob",
    "quotient",
    "random_dfa",
    "random_pdfa",
    "shortest_defined_ce_prefix",
    "string_prob",
    "termination_mass",
    "trim",
    "walk",
]
