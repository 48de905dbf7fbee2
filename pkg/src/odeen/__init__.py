"""Odeen: a rule-guessing environment with a complete offline toolchain.

Six-cell structures are tagged by secret rules of a small formal
language; the package provides the language (grammar + interpreter),
the full rule-by-structure semantic matrix, reproducible dataset
splits, conjecture-based and exhaustive solvers, the official metrics,
and a playable HTTP game master.
"""

from .bitrow import SemanticRow
from .dataset import Board, Game, Split, SplitConfig, generate_split, verify_representativity
from .grammar import (
    Conj,
    ObjPredicate,
    Quantifier,
    RelProp,
    RuleAst,
    SimpleProp,
    enumerate_rules,
    index_rule,
    parse,
    render,
    rule_count,
    rule_index,
    sample_rule,
)
from .interpreter import evaluate, evaluate_row, naive_row
from .metrics import MetricsReport, hamming, nrs_game, r_acc_game, score_run, t_acc_game
from .semantics import (
    EquivalenceClass,
    SemanticMatrix,
    build_matrix,
    equivalence_classes,
    load_matrix,
    rules_equivalent,
    save_matrix,
)
from .solvers import (
    CostCounter,
    Prediction,
    SolverConfig,
    crn_solve,
    cumulative_discovery_curve,
    exhaustive_solve,
    hit_rate,
)
from .universe import (
    Cell,
    Structure,
    UNIVERSE_SIZE,
    enumerate_universe,
    index_of,
    parse_structure,
    render_structure,
    structure_of,
)

__version__ = "0.1.0"
