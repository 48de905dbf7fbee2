"""Board solvers: exhaustive consistency filtering and the conjecture loop.

The conjecture loop draws t candidate explanations from a generator,
scores each by its hit rate on the board, and answers with either the
best-scoring candidate (ties go to the first generated) or, in strict
mode, the first candidate consistent with the whole board, admitting
ignorance when none is.

Cost counters follow the standard accounting: one generator call per
conjecture, one interpreter call per (conjecture, board entry) pair,
plus one interpreter call per eval structure when a rule is produced.
The exhaustive solver charges rule_count * board_size + eval_size
interpreter-equivalent lookups even though it scans precomputed rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .dataset import Board, Game, game_rng
from .grammar import (
    RuleAst,
    index_rule,
    parse,
    render,
    rule_count,
    rule_index,
    try_parse,
)
from .interpreter import evaluate
from .semantics import SemanticMatrix
from .universe import Structure, structure_of


class SolverError(RuntimeError):
    """Solver infrastructure failure; deliberately distinct from 'unknown'."""


@dataclass
class CostCounter:
    cg_calls: int = 0
    i_calls: int = 0
    wall_seconds: float = 0.0


@dataclass
class Prediction:
    game_id: str
    rule: str | None  # canonical text, or raw generator text under a plugin interpreter
    tags: tuple[int, ...] | None
    costs: CostCounter = field(default_factory=CostCounter)
    distinct_conjectures: int | None = None

    @property
    def is_unknown(self) -> bool:
        return self.rule is None


BEST_HIT_RATE = "best_hit_rate"
STRICT = "strict"


@dataclass(frozen=True)
class SolverConfig:
    t: int = 300
    mode: str = BEST_HIT_RATE
    tie_break: str = "first"  # only first-generated is supported

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError("conjecture budget t must be >= 1")
        if self.mode not in (BEST_HIT_RATE, STRICT):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.tie_break != "first":
            raise ValueError("only tie_break='first' is supported")


class ConjectureSource(Protocol):
    """Anything that proposes explanation strings for a board."""

    def conjectures(self, board: Board, n: int, seed: int) -> list[str]: ...


class InterpreterBackend(Protocol):
    """Scores arbitrary strings; may accept what the grammar rejects."""

    def labels(self, rule_text: str, structures: Sequence[int]) -> list[int] | None: ...


def uniform_conjectures(n: int, seed: int) -> list[str]:
    """n uniform rule texts; the one sampling stream shared with the stdio plugin."""
    rng = np.random.default_rng(seed)
    return [render(index_rule(int(i))) for i in rng.integers(rule_count(), size=n)]


class UniformSource:
    """Board-blind uniform sampler over the whole rule language."""

    def conjectures(self, board: Board, n: int, seed: int) -> list[str]:
        return uniform_conjectures(n, seed)


class EnumerationSource:
    """Emits rules in canonical order; the brute-force generator."""

    def conjectures(self, board: Board, n: int, seed: int) -> list[str]:
        total = rule_count()
        if n > total:
            raise SolverError(f"enumeration source holds {total} rules, asked for {n}")
        return [render(index_rule(i)) for i in range(n)]


class OracleSource:
    """Always proposes one fixed rule text (testing aid)."""

    def __init__(self, text: str):
        self.text = text

    def conjectures(self, board: Board, n: int, seed: int) -> list[str]:
        return [self.text] * n


class HardcodedInterpreter:
    """The in-process ground-truth interpreter; rejects ungrammatical text."""

    def labels(self, rule_text: str, structures: Sequence[int]) -> list[int] | None:
        ast = try_parse(rule_text)
        if ast is None:
            return None
        return [evaluate(ast, structure_of(s)) for s in structures]


def hit_rate(rule: RuleAst, board: Board, interpreter=evaluate) -> float:
    """Fraction of board entries the rule tags correctly."""
    if len(board) == 0:
        raise ValueError("hit rate needs a nonempty board")
    hits = sum(
        1 for s, y in board.entries if interpreter(rule, structure_of(s)) == y
    )
    return hits / len(board)


def exhaustive_solve(game: Game, matrix: SemanticMatrix) -> Prediction:
    """Keep every rule consistent with the whole board; representativity
    leaves one equivalence class, whose smallest rule is the answer."""
    t0 = time.perf_counter()
    survivors = np.arange(matrix.rule_count, dtype=np.int64)
    for s_idx, y in game.board.entries:
        survivors = survivors[matrix.column_bits(s_idx, survivors) == y]
        if survivors.size == 0:
            break
    costs = CostCounter(cg_calls=0, i_calls=matrix.rule_count * len(game.board))
    if survivors.size == 0:
        costs.wall_seconds = time.perf_counter() - t0
        return Prediction(game.game_id, None, None, costs)
    rep = int(survivors[0])
    eval_idx = np.array(game.eval_structures, dtype=np.int64)
    tags = tuple(int(b) for b in matrix.row(rep).bits(eval_idx))
    costs.i_calls += len(game.eval_structures)
    costs.wall_seconds = time.perf_counter() - t0
    return Prediction(game.game_id, render_rule(rep), tags, costs)


def render_rule(rule_idx: int) -> str:
    return render(index_rule(rule_idx))


def _score_conjecture(
    text: str,
    board: Board,
    board_structures: list[Structure],
    backend: InterpreterBackend | None,
) -> tuple[float, bool]:
    """(hit rate, eligible). Ungrammatical text scores 0 and is ineligible
    under the hardcoded interpreter; a plugin may score anything."""
    if backend is None:
        ast = try_parse(text)
        if ast is None:
            return 0.0, False
        hits = sum(
            1
            for st, (_, y) in zip(board_structures, board.entries)
            if evaluate(ast, st) == y
        )
        return hits / len(board), True
    labels = backend.labels(text, [s for s, _ in board.entries])
    if labels is None:
        return 0.0, False
    hits = sum(1 for lab, (_, y) in zip(labels, board.entries) if lab == y)
    return hits / len(board), True


def crn_solve(
    game: Game,
    cg: ConjectureSource,
    cfg: SolverConfig,
    seed: int,
    interpreter: InterpreterBackend | None = None,
) -> Prediction:
    """Generate t conjectures, verify them against the board, answer or abstain."""
    t0 = time.perf_counter()
    board = game.board
    if len(board) == 0:
        raise SolverError(f"game {game.game_id} has an empty board")
    texts = cg.conjectures(board, cfg.t, seed)
    if len(texts) != cfg.t:
        raise SolverError(
            f"conjecture source returned {len(texts)} strings, expected {cfg.t}"
        )
    board_structures = [structure_of(s) for s, _ in board.entries]

    best_text: str | None = None
    best_rate = -1.0
    for text in texts:
        rate, eligible = _score_conjecture(text, board, board_structures, interpreter)
        if not eligible:
            continue
        if cfg.mode == STRICT:
            if rate == 1.0:
                best_text = text
                break
        elif rate > best_rate:
            best_rate = rate
            best_text = text

    costs = CostCounter(cg_calls=cfg.t, i_calls=cfg.t * len(board))
    distinct = len(set(texts))
    if best_text is None:
        costs.wall_seconds = time.perf_counter() - t0
        return Prediction(game.game_id, None, None, costs, distinct)

    eval_structures = list(game.eval_structures)
    if interpreter is None:
        ast = try_parse(best_text)
        assert ast is not None  # eligibility guaranteed it parses
        tags = tuple(evaluate(ast, structure_of(s)) for s in eval_structures)
        rule_text = render(ast)
    else:
        labels = interpreter.labels(best_text, eval_structures)
        if labels is None or len(labels) != len(eval_structures):
            raise SolverError("interpreter backend failed to tag the eval structures")
        tags = tuple(int(x) for x in labels)
        rule_text = best_text
    costs.i_calls += len(eval_structures)
    costs.wall_seconds = time.perf_counter() - t0
    return Prediction(game.game_id, rule_text, tags, costs, distinct)


def cumulative_discovery_curve(
    games: Iterable[Game],
    cg: ConjectureSource,
    matrix: SemanticMatrix,
    t_max: int,
    seed: int = 0,
) -> list[float]:
    """curve[t-1] = fraction of games whose secret's class was generated
    within the first t conjectures."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    rep_map = matrix.class_rep_map()
    first_hits: list[int | None] = []
    n_games = 0
    for game in games:
        n_games += 1
        secret_rep = rep_map[rule_index(parse(game.rule_text))]
        game_seed = int(game_rng(seed, f"curve-{game.game_id}").integers(2**63))
        texts = cg.conjectures(game.board, t_max, game_seed)
        hit: int | None = None
        for pos, text in enumerate(texts):
            ast = try_parse(text)
            if ast is not None and rep_map[rule_index(ast)] == secret_rep:
                hit = pos
                break
        first_hits.append(hit)
    if n_games == 0:
        raise ValueError("no games given")
    return [
        sum(1 for h in first_hits if h is not None and h < t) / n_games
        for t in range(1, t_max + 1)
    ]
