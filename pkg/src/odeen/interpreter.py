"""Rule evaluation: the ground-truth interpreter for the Odeen language.

Relation semantics (positions 0..5, a witness is always a piece other
than the subject):

    touching          some witness at distance exactly 1 (an empty cell breaks it)
    at_the_right_of   some witness strictly left of the subject (any distance;
                      set right_of_adjacent for the immediate-left-only variant)
    surrounded_by     the two immediate neighbor cells both hold matching
                      witnesses, so positions 0 and 5 can never be surrounded

A relational proposition counts subject pieces having at least one
witness (not witness pairs); the quantifier is applied to that count.
Contradictory or vacuous rules evaluate like any other.

Two row builders are provided: naive_row loops structure by structure
through evaluate, and evaluate_row vectorizes atomic propositions over
the whole universe and combines conjunctions bitwise.  They must agree
bit for bit; naive_row is the reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .bitrow import SemanticRow
from .grammar import (
    AT_THE_RIGHT_OF,
    BASE_RELATIONS,
    CONJ_AND,
    Color,
    Conj,
    ObjPredicate,
    OBJ_PREDICATES,
    Quantifier,
    QtyKind,
    RelProp,
    RuleAst,
    SURROUNDED_BY,
    Shape,
    SimpleProp,
    TOUCHING,
)
from .universe import CELL_KINDS, STRUCTURE_LEN, Structure, UNIVERSE_SIZE

Label = int  # 0 or 1


class InterpreterError(RuntimeError):
    """Evaluation impossible (e.g. extra relation without a counter)."""


class Piece(NamedTuple):
    """A non-empty cell viewed as a piece; shape is never Shape.PYRAMID."""

    position: int
    color: Color
    shape: Shape


# cell code -> (color, shape); codes 1..3 blue, 4..6 red
_CODE_COLOR = (None, Color.BLUE, Color.BLUE, Color.BLUE, Color.RED, Color.RED, Color.RED)
_CODE_SHAPE = (
    None,
    Shape.BLOCK, Shape.PYRAMID_UP, Shape.PYRAMID_DOWN,
    Shape.BLOCK, Shape.PYRAMID_UP, Shape.PYRAMID_DOWN,
)
# 36 interned pieces, one per (position, nonempty cell code)
_PIECE_TABLE = tuple(
    tuple(
        Piece(pos, _CODE_COLOR[code], _CODE_SHAPE[code]) if code else None
        for code in range(CELL_KINDS)
    )
    for pos in range(STRUCTURE_LEN)
)


def pieces_of(s: Structure) -> tuple[Piece, ...]:
    """The pieces of a structure, left to right."""
    table = _PIECE_TABLE
    return tuple(table[pos][code] for pos, code in enumerate(s.cells) if code)


def matches(p: Piece, obj: ObjPredicate) -> bool:
    """Piece-level predicate match; Shape.PYRAMID accepts both orientations."""
    if obj.color is not None and p.color != obj.color:
        return False
    shape = obj.shape
    if shape is None:
        return True
    if shape == Shape.PYRAMID:
        return p.shape != Shape.BLOCK
    return p.shape == shape


@dataclass(frozen=True)
class EvalOptions:
    """Interpretation variants kept for experimentation."""

    right_of_adjacent: bool = False


DEFAULT_OPTIONS = EvalOptions()

# Counting callbacks for relations registered beyond the printed three.
_REL_COUNTERS: dict[str, Callable[[Sequence[Piece], ObjPredicate, ObjPredicate], int]] = {}


def register_relation_counter(
    name: str, fn: Callable[[Sequence[Piece], ObjPredicate, ObjPredicate], int]
) -> None:
    """Attach a subject-count callback for an extra relation terminal."""
    _REL_COUNTERS[name] = fn


def clear_relation_counters() -> None:
    _REL_COUNTERS.clear()


def count_simple(s: Structure, obj: ObjPredicate) -> int:
    """Number of pieces in s matching obj."""
    return _count_simple(pieces_of(s), obj)


def count_rel(
    s: Structure,
    subj: ObjPredicate,
    rel: str,
    obj: ObjPredicate,
    options: EvalOptions = DEFAULT_OPTIONS,
) -> int:
    """Number of pieces matching subj that have a relation witness matching obj."""
    return _count_rel(pieces_of(s), subj, rel, obj, options)


def apply_qty(q: Quantifier, count: int) -> bool:
    kind = q.kind
    if kind == QtyKind.AT_LEAST:
        return count >= q.num
    if kind == QtyKind.EXACTLY:
        return count == q.num
    if kind == QtyKind.AT_MOST:
        return count <= q.num
    return count == 0  # ZERO


def evaluate(rule: RuleAst, s: Structure, options: EvalOptions = DEFAULT_OPTIONS) -> Label:
    """Truth of a rule on a single structure: 1 (satisfied) or 0."""
    return _evaluate_pieces(rule, pieces_of(s), options)


# ---------------------------------------------------------------------------
# Per-structure evaluation core (shared by evaluate and naive_row)


def _count_simple(pieces: Sequence[Piece], obj: ObjPredicate) -> int:
    color = obj.color
    shape = obj.shape
    n = 0
    for p in pieces:
        if color is not None and p[1] != color:
            continue
        if shape is not None:
            ps = p[2]
            if shape == Shape.PYRAMID:
                if ps == Shape.BLOCK:
                    continue
            elif ps != shape:
                continue
        n += 1
    return n


def _count_rel(
    pieces: Sequence[Piece],
    subj: ObjPredicate,
    rel: str,
    obj: ObjPredicate,
    options: EvalOptions,
) -> int:
    if rel not in BASE_RELATIONS:
        try:
            counter = _REL_COUNTERS[rel]
        except KeyError:
            raise InterpreterError(
                f"relation {rel!r} has no counting callback registered"
            ) from None
        return counter(pieces, subj, obj)

    right_adjacent = options.right_of_adjacent
    n = 0
    for p in pieces:
        if not matches(p, subj):
            continue
        pos = p[0]
        if rel == TOUCHING:
            for q in pieces:
                if q is not p and abs(q[0] - pos) == 1 and matches(q, obj):
                    n += 1
                    break
        elif rel == AT_THE_RIGHT_OF:
            for q in pieces:
                qpos = q[0]
                if (qpos == pos - 1 if right_adjacent else qpos < pos) and matches(q, obj):
                    n += 1
                    break
        else:  # SURROUNDED_BY
            left = right = False
            for q in pieces:
                if q[0] == pos - 1:
                    left = matches(q, obj)
                elif q[0] == pos + 1:
                    right = matches(q, obj)
            if left and right:
                n += 1
    return n


def _evaluate_pieces(rule: RuleAst, pieces: Sequence[Piece], options: EvalOptions) -> Label:
    if isinstance(rule, SimpleProp):
        return 1 if apply_qty(rule.qty, _count_simple(pieces, rule.obj)) else 0
    if isinstance(rule, RelProp):
        return 1 if apply_qty(
            rule.qty, _count_rel(pieces, rule.subject, rule.rel, rule.object, options)
        ) else 0
    if isinstance(rule, Conj):
        left = _evaluate_pieces(rule.left, pieces, options)
        if rule.op == CONJ_AND:
            return left and _evaluate_pieces(rule.right, pieces, options)
        return left or _evaluate_pieces(rule.right, pieces, options)
    raise TypeError(f"not a rule AST: {rule!r}")


_universe_pieces_cache: list[tuple[Piece, ...]] | None = None


def _universe_pieces() -> list[tuple[Piece, ...]]:
    global _universe_pieces_cache
    if _universe_pieces_cache is None:
        table = _PIECE_TABLE
        out = []
        for index in range(UNIVERSE_SIZE):
            rem = index
            pieces = []
            for pos in range(STRUCTURE_LEN - 1, -1, -1):
                rem, code = divmod(rem, CELL_KINDS)
                if code:
                    pieces.append(table[pos][code])
            pieces.reverse()
            out.append(tuple(pieces))
        _universe_pieces_cache = out
    return _universe_pieces_cache


def naive_row(rule: RuleAst, options: EvalOptions = DEFAULT_OPTIONS) -> SemanticRow:
    """Reference row builder: evaluate the rule structure by structure."""
    bits = np.fromiter(
        (_evaluate_pieces(rule, ps, options) for ps in _universe_pieces()),
        dtype=np.uint8,
        count=UNIVERSE_SIZE,
    )
    return SemanticRow.from_bools(bits)


# ---------------------------------------------------------------------------
# Vectorized row evaluation over the whole universe

_cells_grid_cache: np.ndarray | None = None


def _cells_grid() -> np.ndarray:
    """Cell codes of every structure: uint8 array (117649, 6), row = index."""
    global _cells_grid_cache
    if _cells_grid_cache is None:
        idx = np.arange(UNIVERSE_SIZE, dtype=np.int64)
        grid = np.empty((UNIVERSE_SIZE, STRUCTURE_LEN), dtype=np.uint8)
        for pos in range(STRUCTURE_LEN - 1, -1, -1):
            idx, rem = np.divmod(idx, CELL_KINDS)
            grid[:, pos] = rem
        _cells_grid_cache = grid
    return _cells_grid_cache


def _obj_table(obj: ObjPredicate) -> np.ndarray:
    """bool[7]: does each cell code match the predicate (empty never does)."""
    table = np.zeros(CELL_KINDS, dtype=bool)
    for code in range(1, CELL_KINDS):
        p = _PIECE_TABLE[0][code]
        table[code] = matches(p, obj)
    return table


_OBJ_INDEX = {obj: i for i, obj in enumerate(OBJ_PREDICATES)}
_match_grids: dict[int, np.ndarray] = {}
_simple_count_cache: dict[int, np.ndarray] = {}
_witness_cache: dict[tuple, np.ndarray] = {}


def _match_grid(obj: ObjPredicate) -> np.ndarray:
    key = _OBJ_INDEX.get(obj)
    if key is None:  # predicates are interned by construction, but stay total
        return _obj_table(obj)[_cells_grid()]
    grid = _match_grids.get(key)
    if grid is None:
        grid = _obj_table(obj)[_cells_grid()]
        _match_grids[key] = grid
    return grid


def _simple_counts(obj: ObjPredicate) -> np.ndarray:
    key = _OBJ_INDEX.get(obj)
    if key is not None and key in _simple_count_cache:
        return _simple_count_cache[key]
    counts = _match_grid(obj).sum(axis=1, dtype=np.uint8)
    if key is not None:
        _simple_count_cache[key] = counts
    return counts


def _witness_grid(rel: str, obj: ObjPredicate, options: EvalOptions) -> np.ndarray:
    """Per position: does a witness for (rel, obj) exist there."""
    key = (rel, _OBJ_INDEX.get(obj), options.right_of_adjacent)
    cached = _witness_cache.get(key) if key[1] is not None else None
    if cached is not None:
        return cached
    m = _match_grid(obj)
    w = np.zeros_like(m)
    if rel == TOUCHING:
        w[:, 1:] |= m[:, :-1]
        w[:, :-1] |= m[:, 1:]
    elif rel == AT_THE_RIGHT_OF:
        if options.right_of_adjacent:
            w[:, 1:] = m[:, :-1]
        else:
            w[:, 1:] = np.logical_or.accumulate(m, axis=1)[:, :-1]
    elif rel == SURROUNDED_BY:
        w[:, 1:-1] = m[:, :-2] & m[:, 2:]
    else:
        raise InterpreterError(f"no vectorized witness for relation {rel!r}")
    if key[1] is not None:
        _witness_cache[key] = w
    return w


def _rel_counts(
    subj: ObjPredicate, rel: str, obj: ObjPredicate, options: EvalOptions
) -> np.ndarray:
    return (_match_grid(subj) & _witness_grid(rel, obj, options)).sum(axis=1, dtype=np.uint8)


def _apply_qty_vec(q: Quantifier, counts: np.ndarray) -> np.ndarray:
    kind = q.kind
    if kind == QtyKind.AT_LEAST:
        return counts >= q.num
    if kind == QtyKind.EXACTLY:
        return counts == q.num
    if kind == QtyKind.AT_MOST:
        return counts <= q.num
    return counts == 0


def _atom_bools(rule: SimpleProp | RelProp, options: EvalOptions) -> np.ndarray:
    if isinstance(rule, SimpleProp):
        return _apply_qty_vec(rule.qty, _simple_counts(rule.obj))
    if rule.rel in BASE_RELATIONS:
        counts = _rel_counts(rule.subject, rule.rel, rule.object, options)
        return _apply_qty_vec(rule.qty, counts)
    # registered extra relation: no vectorized path, walk the universe
    counts = np.fromiter(
        (_count_rel(ps, rule.subject, rule.rel, rule.object, options)
         for ps in _universe_pieces()),
        dtype=np.uint8,
        count=UNIVERSE_SIZE,
    )
    return _apply_qty_vec(rule.qty, counts)


def evaluate_row(rule: RuleAst, options: EvalOptions = DEFAULT_OPTIONS) -> SemanticRow:
    """Truth row of a rule over the full universe, factored through atoms."""
    if isinstance(rule, Conj):
        left = evaluate_row(rule.left, options)
        right = evaluate_row(rule.right, options)
        return left & right if rule.op == CONJ_AND else left | right
    return SemanticRow.from_bools(_atom_bools(rule, options))
