"""The Odeen rule language: tokenizer, parser, renderer, and enumerator.

Productions (terminals spelled exactly as they appear in rule text):

    RULE   ::= PROP_S | PROP | PROP_S CONJ PROP_S
    PROP   ::= QTY OBJ REL OBJ
    PROP_S ::= QTY OBJ
    OBJ    ::= COL | SHAPE | COL SHAPE
    QTY    ::= "at_least" NUM | "exactly" NUM | "at_most" NUM | "zero"
    SHAPE  ::= "pyramid" ORIEN | "pyramid" | "block"
    REL    ::= "touching" | "surrounded_by" | "at_the_right_of"
    ORIEN  ::= "pointing_up" | "pointing_down"
    NUM    ::= "1" | "2"
    CONJ   ::= "and" | "or"
    COL    ::= "red" | "blue"

Every rule has a canonical index: RULE alternatives in production order
(simple, relational, conjunction), the rightmost field varying fastest,
field alternatives in listing order.  The printed productions yield
98 + 4,116 + 19,208 = 23,422 rules; the originally published total of
24,794 differs by exactly one extra REL alternative (98 * 4 * 14 = 5,488
relational rules), which can be reproduced via register_relation().
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, Union

import numpy as np

# Reference rule count reported with the original Odeen release; the printed
# productions above give 23,422.  Surfaced so stats output can show the gap.
PUBLISHED_RULE_COUNT = 24794


class Color(IntEnum):
    RED = 0
    BLUE = 1


class Shape(IntEnum):
    """Shape predicates; PYRAMID matches either orientation, BLOCK is the square."""

    PYRAMID_UP = 0
    PYRAMID_DOWN = 1
    PYRAMID = 2
    BLOCK = 3


class QtyKind(IntEnum):
    AT_LEAST = 0
    EXACTLY = 1
    AT_MOST = 2
    ZERO = 3


TOUCHING = "touching"
SURROUNDED_BY = "surrounded_by"
AT_THE_RIGHT_OF = "at_the_right_of"
BASE_RELATIONS = (TOUCHING, SURROUNDED_BY, AT_THE_RIGHT_OF)

CONJ_AND = "and"
CONJ_OR = "or"
_CONJ_OPS = (CONJ_AND, CONJ_OR)

_COLOR_WORDS = {"red": Color.RED, "blue": Color.BLUE}
_QTY_WORDS = {"at_least": QtyKind.AT_LEAST, "exactly": QtyKind.EXACTLY, "at_most": QtyKind.AT_MOST}


class GrammarError(ValueError):
    """Problems with grammar configuration (not rule text)."""


class RuleSyntaxError(ValueError):
    """Rule text rejected by the grammar; position is the offending token index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


@dataclass(frozen=True)
class Quantifier:
    kind: QtyKind
    num: int | None  # 1 or 2; None only for ZERO

    def __post_init__(self) -> None:
        if self.kind is QtyKind.ZERO:
            if self.num is not None:
                raise GrammarError("zero quantifier carries no number")
        elif self.num not in (1, 2):
            raise GrammarError(f"quantifier number must be 1 or 2, got {self.num}")


@dataclass(frozen=True)
class ObjPredicate:
    color: Color | None
    shape: Shape | None

    def __post_init__(self) -> None:
        if self.color is None and self.shape is None:
            raise GrammarError("object predicate needs a color or a shape")


@dataclass(frozen=True)
class SimpleProp:
    qty: Quantifier
    obj: ObjPredicate


@dataclass(frozen=True)
class RelProp:
    qty: Quantifier
    subject: ObjPredicate
    rel: str
    object: ObjPredicate


@dataclass(frozen=True)
class Conj:
    left: SimpleProp
    op: str
    right: SimpleProp

    def __post_init__(self) -> None:
        if self.op not in _CONJ_OPS:
            raise GrammarError(f"conjunction op must be one of {_CONJ_OPS}, got {self.op!r}")


RuleAst = Union[SimpleProp, RelProp, Conj]

# Canonical field orders (BNF listing order, rightmost varies fastest).
QUANTIFIERS: tuple[Quantifier, ...] = (
    Quantifier(QtyKind.AT_LEAST, 1),
    Quantifier(QtyKind.AT_LEAST, 2),
    Quantifier(QtyKind.EXACTLY, 1),
    Quantifier(QtyKind.EXACTLY, 2),
    Quantifier(QtyKind.AT_MOST, 1),
    Quantifier(QtyKind.AT_MOST, 2),
    Quantifier(QtyKind.ZERO, None),
)

_SHAPES = (Shape.PYRAMID_UP, Shape.PYRAMID_DOWN, Shape.PYRAMID, Shape.BLOCK)
OBJ_PREDICATES: tuple[ObjPredicate, ...] = tuple(
    [ObjPredicate(c, None) for c in (Color.RED, Color.BLUE)]
    + [ObjPredicate(None, s) for s in _SHAPES]
    + [ObjPredicate(c, s) for c in (Color.RED, Color.BLUE) for s in _SHAPES]
)

_QTY_INDEX = {q: i for i, q in enumerate(QUANTIFIERS)}
_OBJ_INDEX = {o: i for i, o in enumerate(OBJ_PREDICATES)}

# Extra relation terminals registered at startup (experimentation hook).
_extra_relations: list[str] = []


def relations() -> tuple[str, ...]:
    """Relation terminals in canonical order: the three printed ones, then extras."""
    return BASE_RELATIONS + tuple(_extra_relations)


def register_relation(name: str) -> None:
    """Add a relation terminal to the grammar (call before any enumeration).

    Extends parsing, enumeration, and counting; evaluation additionally
    needs a counting callback registered with the interpreter.  Not safe
    to call while other threads are using the grammar.
    """
    if " " in name or not name:
        raise GrammarError(f"relation terminal must be a single word, got {name!r}")
    if name in relations() or name in _terminals_static():
        raise GrammarError(f"terminal {name!r} already in the grammar")
    _extra_relations.append(name)


def clear_extra_relations() -> None:
    _extra_relations.clear()


def _terminals_static() -> set[str]:
    return {
        "at_least", "exactly", "at_most", "zero", "1", "2",
        "red", "blue", "pyramid", "block", "pointing_up", "pointing_down",
        "and", "or",
    }


def terminals() -> set[str]:
    """Every terminal of the current grammar."""
    return _terminals_static() | set(relations())


# ---------------------------------------------------------------------------
# Text <-> AST


def tokenize(text: str) -> list[str]:
    """Split rule text on single spaces; no validation happens here."""
    return text.split(" ") if text else []


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise RuleSyntaxError("unexpected end of rule", self.pos)
        self.pos += 1
        return tok

    def fail(self, message: str) -> RuleSyntaxError:
        return RuleSyntaxError(message, self.pos)

    def quantifier(self) -> Quantifier:
        tok = self.take()
        if tok == "zero":
            return Quantifier(QtyKind.ZERO, None)
        kind = _QTY_WORDS.get(tok)
        if kind is None:
            self.pos -= 1
            raise self.fail(f"expected quantifier, got {tok!r}")
        num = self.take()
        if num not in ("1", "2"):
            self.pos -= 1
            raise self.fail(f"expected number 1 or 2 after {tok!r}, got {num!r}")
        return Quantifier(kind, int(num))

    def obj(self) -> ObjPredicate:
        color = None
        tok = self.peek()
        if tok in _COLOR_WORDS:
            color = _COLOR_WORDS[self.take()]
        shape = self._shape()
        if color is None and shape is None:
            raise self.fail(f"expected object predicate, got {self.peek()!r}")
        return ObjPredicate(color, shape)

    def _shape(self) -> Shape | None:
        tok = self.peek()
        if tok == "block":
            self.take()
            return Shape.BLOCK
        if tok == "pyramid":
            self.take()
            nxt = self.peek()
            if nxt == "pointing_up":
                self.take()
                return Shape.PYRAMID_UP
            if nxt == "pointing_down":
                self.take()
                return Shape.PYRAMID_DOWN
            return Shape.PYRAMID
        return None

    def simple(self) -> SimpleProp:
        return SimpleProp(self.quantifier(), self.obj())

    def rule(self) -> RuleAst:
        qty = self.quantifier()
        obj = self.obj()
        tok = self.peek()
        if tok is None:
            return SimpleProp(qty, obj)
        if tok in relations():
            rel = self.take()
            obj2 = self.obj()
            self._expect_end()
            return RelProp(qty, obj, rel, obj2)
        if tok in _CONJ_OPS:
            op = self.take()
            right = self.simple()
            self._expect_end()
            return Conj(SimpleProp(qty, obj), op, right)
        raise self.fail(f"expected relation, conjunction, or end of rule, got {tok!r}")

    def _expect_end(self) -> None:
        if self.peek() is not None:
            raise self.fail(f"trailing tokens after complete rule: {self.peek()!r}")


def parse(text: str) -> RuleAst:
    """Parse rule text into an AST, or raise RuleSyntaxError."""
    tokens = tokenize(text)
    if not tokens:
        raise RuleSyntaxError("empty rule", 0)
    return _Parser(tokens).rule()


def try_parse(text: str) -> RuleAst | None:
    try:
        return parse(text)
    except RuleSyntaxError:
        return None


_QTY_TEXT = {
    QtyKind.AT_LEAST: "at_least",
    QtyKind.EXACTLY: "exactly",
    QtyKind.AT_MOST: "at_most",
}
_SHAPE_TEXT = {
    Shape.PYRAMID_UP: "pyramid pointing_up",
    Shape.PYRAMID_DOWN: "pyramid pointing_down",
    Shape.PYRAMID: "pyramid",
    Shape.BLOCK: "block",
}
_COLOR_TEXT = {Color.RED: "red", Color.BLUE: "blue"}


def _qty_text(q: Quantifier) -> str:
    if q.kind is QtyKind.ZERO:
        return "zero"
    return f"{_QTY_TEXT[q.kind]} {q.num}"


def _obj_text(o: ObjPredicate) -> str:
    parts = []
    if o.color is not None:
        parts.append(_COLOR_TEXT[o.color])
    if o.shape is not None:
        parts.append(_SHAPE_TEXT[o.shape])
    return " ".join(parts)


def render(ast: RuleAst) -> str:
    """Canonical space-separated text; inverse of parse."""
    if isinstance(ast, SimpleProp):
        return f"{_qty_text(ast.qty)} {_obj_text(ast.obj)}"
    if isinstance(ast, RelProp):
        return (
            f"{_qty_text(ast.qty)} {_obj_text(ast.subject)} "
            f"{ast.rel} {_obj_text(ast.object)}"
        )
    if isinstance(ast, Conj):
        return f"{render(ast.left)} {ast.op} {render(ast.right)}"
    raise TypeError(f"not a rule AST: {ast!r}")


# ---------------------------------------------------------------------------
# Canonical enumeration and indexing

_N_QTY = len(QUANTIFIERS)  # 7
_N_OBJ = len(OBJ_PREDICATES)  # 14
SIMPLE_COUNT = _N_QTY * _N_OBJ  # 98
CONJ_COUNT = SIMPLE_COUNT * len(_CONJ_OPS) * SIMPLE_COUNT  # 19,208


def relational_count() -> int:
    return SIMPLE_COUNT * len(relations()) * _N_OBJ


def rule_count() -> int:
    """Total sentences of the current grammar (23,422 with the printed productions)."""
    return SIMPLE_COUNT + relational_count() + CONJ_COUNT


def category_counts() -> dict[str, int]:
    return {
        "simple": SIMPLE_COUNT,
        "relational": relational_count(),
        "conjunction": CONJ_COUNT,
        "total": rule_count(),
    }


def _simple_of(offset: int) -> SimpleProp:
    qty, obj = divmod(offset, _N_OBJ)
    return SimpleProp(QUANTIFIERS[qty], OBJ_PREDICATES[obj])


def _simple_offset(p: SimpleProp) -> int:
    return _QTY_INDEX[p.qty] * _N_OBJ + _OBJ_INDEX[p.obj]


def index_rule(index: int) -> RuleAst:
    """Rule at a canonical index; inverse of rule_index."""
    total = rule_count()
    if not 0 <= index < total:
        raise GrammarError(f"rule index {index} out of range [0, {total})")
    if index < SIMPLE_COUNT:
        return _simple_of(index)
    index -= SIMPLE_COUNT
    rels = relations()
    rel_total = relational_count()
    if index < rel_total:
        index, obj = divmod(index, _N_OBJ)
        index, rel = divmod(index, len(rels))
        qty, subj = divmod(index, _N_OBJ)
        return RelProp(QUANTIFIERS[qty], OBJ_PREDICATES[subj], rels[rel], OBJ_PREDICATES[obj])
    index -= rel_total
    index, right = divmod(index, SIMPLE_COUNT)
    left, op = divmod(index, len(_CONJ_OPS))
    return Conj(_simple_of(left), _CONJ_OPS[op], _simple_of(right))


def rule_index(ast: RuleAst) -> int:
    """Canonical index of a rule; inverse of index_rule."""
    if isinstance(ast, SimpleProp):
        return _simple_offset(ast)
    if isinstance(ast, RelProp):
        rels = relations()
        try:
            rel = rels.index(ast.rel)
        except ValueError:
            raise GrammarError(f"unknown relation {ast.rel!r}") from None
        offset = (
            (_QTY_INDEX[ast.qty] * _N_OBJ + _OBJ_INDEX[ast.subject]) * len(rels) + rel
        ) * _N_OBJ + _OBJ_INDEX[ast.object]
        return SIMPLE_COUNT + offset
    if isinstance(ast, Conj):
        offset = (
            _simple_offset(ast.left) * len(_CONJ_OPS) + _CONJ_OPS.index(ast.op)
        ) * SIMPLE_COUNT + _simple_offset(ast.right)
        return SIMPLE_COUNT + relational_count() + offset
    raise TypeError(f"not a rule AST: {ast!r}")


def enumerate_rules() -> Iterator[RuleAst]:
    """Every sentence of the grammar exactly once, in canonical index order."""
    for qty in QUANTIFIERS:
        for obj in OBJ_PREDICATES:
            yield SimpleProp(qty, obj)
    rels = relations()
    for qty in QUANTIFIERS:
        for subj in OBJ_PREDICATES:
            for rel in rels:
                for obj in OBJ_PREDICATES:
                    yield RelProp(qty, subj, rel, obj)
    simples = [_simple_of(i) for i in range(SIMPLE_COUNT)]
    for left in simples:
        for op in _CONJ_OPS:
            for right in simples:
                yield Conj(left, op, right)


def sample_rule(rng: np.random.Generator) -> RuleAst:
    """Uniform draw over all rules via the canonical index."""
    return index_rule(int(rng.integers(rule_count())))
