"""Abstractions of labelled Markov chains and PCTL checking with error bounds."""

from .abstraction import (
    BlockAbstraction,
    GammaRelaxation,
    Imdpa,
    LumpedChain,
    Mdpa,
    abstract_block,
    build_imdpa,
    build_standard_abstraction,
    envelope,
    gamma_relaxation,
    imdpa_to_mdpa,
    optimal_error,
    optimal_set,
    representative_error,
)
from .engine import (
    CheckResult,
    ComparisonTable,
    ErrorBound,
    check_imdpa,
    check_lmc,
    check_mdp,
    compare_abstractions,
    extremal_probability,
    propagate_error,
)
from .intervals import (
    Empty,
    Infinite,
    IntervalMatrix,
    IntervalRow,
    Singleton,
    classify,
    contains,
    tighten,
    vertices,
)
from .model import (
    LabeledMarkovChain,
    LabelPartition,
    Path,
    TraceSet,
    abstraction_rows,
    block_probability,
    partition_by_labels,
    path_probability,
    trace_set_probability,
    validate_model,
)
from .pctl import desugar, parse_formula, to_text
from .serialization import case_study, load_model

__all__ = [
    "BlockAbstraction",
    "CheckResult",
    "ComparisonTable",
    "Empty",
    "ErrorBound",
    "GammaRelaxation",
    "Imdpa",
    "Infinite",
    "IntervalMatrix",
    "IntervalRow",
    "LabelPartition",
    "LabeledMarkovChain",
    "LumpedChain",
    "Mdpa",
    "Path",
    "Singleton",
    "TraceSet",
    "abstract_block",
    "abstraction_rows",
    "block_probability",
    "build_imdpa",
    "build_standard_abstraction",
    "case_study",
    "check_imdpa",
    "check_lmc",
    "check_mdp",
    "classify",
    "compare_abstractions",
    "contains",
    "desugar",
    "envelope",
    "extremal_probability",
    "gamma_relaxation",
    "imdpa_to_mdpa",
    "load_model",
    "optimal_error",
    "optimal_set",
    "parse_formula",
    "partition_by_labels",
    "path_probability",
    "propagate_error",
    "representative_error",
    "tighten",
    "to_text",
    "trace_set_probability",
    "validate_model",
    "vertices",
]

__version__ = "0.1.0"
