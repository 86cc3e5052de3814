"""Pseudorandom matchings in hypergraphs with small codegree."""

from .applications import (
    Pattern,
    count_injections,
    is_t_avoiding,
    latin_instance,
    latin_square,
    mad,
    rainbow_hypergraph,
    rainbow_run,
    steiner_hypergraph,
    steiner_run,
)
from .coloring import MatchingDecomposition, decompose, validate
from .errors import NibbleError, RetriesExhausted
from .generators import random_hypergraph
from .hypergraph import (
    DegreeStats,
    Hypergraph,
    build,
    codegree,
    degree,
    edge_subgraph,
    induced,
    is_matching,
    load_hgr,
    regularize,
    save_hgr,
    stats,
)
from .matcher import MatchReport, PipelineParams, derive_params, run_pipeline
from .oracle import LabConfig, concentration_lab, enumerate_matchings, max_matching
from .verify import verify_report
from .weights import (
    TupleWeightFunction,
    check_hypotheses,
    is_clean,
    norm_k,
    shadow,
    total,
    uniform_weight,
    vertex_cover_weight,
)

__version__ = "0.1.0"
