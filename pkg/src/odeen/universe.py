"""The Odeen universe: boards of six cells, each empty or a colored piece.

A structure is written as a 6-character string, one character per cell,
leftmost cell first:

    .   empty
    q   blue square          Q   red square
    u   blue pyramid up      U   red pyramid up
    d   blue pyramid down    D   red pyramid down

The structure index is the base-7 value of the cell codes with the
leftmost cell most significant; this fixes a canonical order on all
7^6 = 117,649 structures.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator


class Cell(IntEnum):
    EMPTY = 0
    BLUE_SQUARE = 1
    BLUE_PYRAMID_UP = 2
    BLUE_PYRAMID_DOWN = 3
    RED_SQUARE = 4
    RED_PYRAMID_UP = 5
    RED_PYRAMID_DOWN = 6


STRUCTURE_LEN = 6
CELL_KINDS = len(Cell)
UNIVERSE_SIZE = CELL_KINDS**STRUCTURE_LEN  # 117,649

CELL_CHARS = ".qudQUD"
_CHAR_TO_CODE = {ch: code for code, ch in enumerate(CELL_CHARS)}
_CELLS = tuple(Cell(code) for code in range(CELL_KINDS))
# place value of each position, leftmost most significant
_PLACE = tuple(CELL_KINDS ** (STRUCTURE_LEN - 1 - p) for p in range(STRUCTURE_LEN))


class StructureError(ValueError):
    """Malformed structure text or out-of-range index."""


@dataclass(frozen=True)
class Structure:
    """An immutable board of exactly six cells."""

    cells: tuple[Cell, ...]

    def __post_init__(self) -> None:
        if len(self.cells) != STRUCTURE_LEN:
            raise StructureError(
                f"structure must have {STRUCTURE_LEN} cells, got {len(self.cells)}"
            )

    def __str__(self) -> str:
        return render_structure(self)


def parse_structure(text: str) -> Structure:
    """Decode a 6-character structure string; errors name the bad position."""
    if len(text) != STRUCTURE_LEN:
        raise StructureError(
            f"structure text must be {STRUCTURE_LEN} characters, got {len(text)!r}"
        )
    cells = []
    for pos, ch in enumerate(text):
        code = _CHAR_TO_CODE.get(ch)
        if code is None:
            raise StructureError(f"unknown cell character {ch!r} at position {pos}")
        cells.append(_CELLS[code])
    return Structure(tuple(cells))


def render_structure(s: Structure) -> str:
    """Canonical 6-character encoding; inverse of parse_structure."""
    return "".join(CELL_CHARS[c] for c in s.cells)


def index_of(s: Structure) -> int:
    """Base-7 index of a structure, in [0, 117649)."""
    i = 0
    for c in s.cells:
        i = i * CELL_KINDS + c
    return i


def structure_of(index: int) -> Structure:
    """Inverse of index_of."""
    if not 0 <= index < UNIVERSE_SIZE:
        raise StructureError(f"structure index {index} out of range [0, {UNIVERSE_SIZE})")
    cells = [_CELLS[0]] * STRUCTURE_LEN
    for p in range(STRUCTURE_LEN - 1, -1, -1):
        index, code = divmod(index, CELL_KINDS)
        cells[p] = _CELLS[code]
    return Structure(tuple(cells))


def enumerate_universe() -> Iterator[Structure]:
    """All 117,649 structures in index order, starting from the all-empty board."""
    for i in range(UNIVERSE_SIZE):
        yield structure_of(i)
