"""The full rule-by-structure truth matrix and its derived artifacts.

Rows follow the canonical rule order, columns the canonical structure
order.  The build factors every rule through its atomic propositions:
each simple and relational proposition is evaluated once over the whole
universe, and conjunction rows are bitwise combinations of simple rows.
The result is independent of scheduling and byte-identical across runs.

File format (little-endian): magic "ODN1", u16 version, u32 rule count,
u32 structure count, then one bit-packed row per rule, LSB-first within
a byte, each row padded to a whole byte.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bitrow import ROW_BYTES, SemanticRow
from .grammar import (
    OBJ_PREDICATES,
    QUANTIFIERS,
    RelProp,
    RuleAst,
    SIMPLE_COUNT,
    relations,
    rule_count,
    rule_index,
)
from . import interpreter
from .interpreter import DEFAULT_OPTIONS, EvalOptions
from .universe import UNIVERSE_SIZE

_MAGIC = b"ODN1"
_VERSION = 1
_HEADER = struct.Struct("<4sHII")


class MatrixFormatError(ValueError):
    """Corrupt or foreign matrix file."""


@dataclass(frozen=True)
class EquivalenceClass:
    """Rules sharing one identical truth row; representative is the smallest."""

    representative: int
    members: tuple[int, ...]


class SemanticMatrix:
    """Bit-packed truth rows for every rule of the grammar."""

    def __init__(self, packed: np.ndarray, structure_count: int = UNIVERSE_SIZE):
        if packed.ndim != 2 or packed.dtype != np.uint8:
            raise ValueError("matrix payload must be a 2-D uint8 array")
        if packed.shape[1] != (structure_count + 7) // 8:
            raise ValueError("row byte width does not match structure count")
        self.packed = packed
        self.structure_count = structure_count
        self._classes: list[EquivalenceClass] | None = None
        self._representatives: np.ndarray | None = None
        self._rep_map: np.ndarray | None = None

    @property
    def rule_count(self) -> int:
        return self.packed.shape[0]

    def row(self, rule_idx: int) -> SemanticRow:
        return SemanticRow(self.packed[rule_idx])

    def bit(self, rule_idx: int, structure_idx: int) -> int:
        return int(self.packed[rule_idx, structure_idx >> 3] >> (structure_idx & 7)) & 1

    def column_bits(self, structure_idx: int, rows: np.ndarray | None = None) -> np.ndarray:
        """One column of the matrix, optionally restricted to given rows."""
        byte, bit = divmod(structure_idx, 8)
        col = self.packed[:, byte] if rows is None else self.packed[rows, byte]
        return (col >> bit) & 1

    def rows_at(self, rows: np.ndarray, structure_idxs: np.ndarray) -> np.ndarray:
        """Submatrix of labels: shape (len(rows), len(structure_idxs)), uint8."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(structure_idxs, dtype=np.int64)
        bytes_ = self.packed[rows[:, None], (cols >> 3)[None, :]]
        return (bytes_ >> (cols & 7)[None, :]).astype(np.uint8) & 1

    # -- derived statistics ------------------------------------------------

    def row_weights(self) -> np.ndarray:
        """Per-rule popcount (number of satisfying structures)."""
        return np.bitwise_count(self.packed).sum(axis=1, dtype=np.int64)

    def column_weights(self) -> np.ndarray:
        """Per-structure popcount (number of satisfied rules)."""
        totals = np.zeros(self.structure_count, dtype=np.int64)
        chunk = 1024
        for start in range(0, self.rule_count, chunk):
            block = np.unpackbits(self.packed[start : start + chunk], axis=1, bitorder="little")
            totals += block[:, : self.structure_count].sum(axis=0, dtype=np.int64)
        return totals

    def classes(self) -> list[EquivalenceClass]:
        """Partition of all rules by exact row equality, sorted by representative.

        Rows are grouped by a digest of their bytes, then verified by full
        comparison inside each digest group, so a hash collision can only
        split a group, never merge distinct rows.
        """
        if self._classes is None:
            groups: dict[bytes, list[int]] = {}
            for i in range(self.rule_count):
                digest = hashlib.blake2b(self.packed[i].tobytes(), digest_size=16).digest()
                groups.setdefault(digest, []).append(i)
            classes: list[EquivalenceClass] = []
            for members in groups.values():
                remaining = members
                while remaining:
                    rep = remaining[0]
                    rep_row = self.packed[rep]
                    same = [j for j in remaining if np.array_equal(self.packed[j], rep_row)]
                    classes.append(EquivalenceClass(same[0], tuple(same)))
                    remaining = [j for j in remaining if j not in set(same)]
            classes.sort(key=lambda c: c.representative)
            self._classes = classes
        return self._classes

    def class_representatives(self) -> np.ndarray:
        if self._representatives is None:
            self._representatives = np.array(
                [c.representative for c in self.classes()], dtype=np.int64
            )
        return self._representatives

    def class_rep_map(self) -> np.ndarray:
        """representative rule index for every rule, as int64[rule_count]."""
        if self._rep_map is None:
            rep_map = np.empty(self.rule_count, dtype=np.int64)
            for c in self.classes():
                for member in c.members:
                    rep_map[member] = c.representative
            self._rep_map = rep_map
        return self._rep_map

    def class_of(self, rule_idx: int) -> EquivalenceClass:
        rep = int(self.class_rep_map()[rule_idx])
        for c in self.classes():
            if c.representative == rep:
                return c
        raise KeyError(rule_idx)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, _VERSION, self.rule_count, self.structure_count))
            self.packed.tofile(fh)

    @classmethod
    def load(cls, path: str | Path) -> "SemanticMatrix":
        path = Path(path)
        with open(path, "rb") as fh:
            header = fh.read(_HEADER.size)
            if len(header) != _HEADER.size:
                raise MatrixFormatError(f"{path}: truncated header")
            magic, version, n_rules, n_structures = _HEADER.unpack(header)
            if magic != _MAGIC:
                raise MatrixFormatError(f"{path}: bad magic {magic!r}")
            if version != _VERSION:
                raise MatrixFormatError(f"{path}: unsupported version {version}")
            row_bytes = (n_structures + 7) // 8
            payload = np.fromfile(fh, dtype=np.uint8)
        if payload.size != n_rules * row_bytes:
            raise MatrixFormatError(
                f"{path}: expected {n_rules * row_bytes} payload bytes, got {payload.size}"
            )
        return cls(payload.reshape(n_rules, row_bytes), n_structures)


def build_matrix(options: EvalOptions = DEFAULT_OPTIONS) -> SemanticMatrix:
    """Evaluate every rule over every structure.

    Simple and relational blocks are computed from vectorized counts; the
    conjunction block combines packed simple rows bitwise.  Matches the
    per-structure interpreter loop bit for bit.
    """
    n_rules = rule_count()
    packed = np.empty((n_rules, ROW_BYTES), dtype=np.uint8)

    simple_rows = np.empty((SIMPLE_COUNT, ROW_BYTES), dtype=np.uint8)
    i = 0
    for qty in QUANTIFIERS:
        for obj in OBJ_PREDICATES:
            bits = interpreter._apply_qty_vec(qty, interpreter._simple_counts(obj))
            simple_rows[i] = np.packbits(bits, bitorder="little")
            i += 1
    packed[:SIMPLE_COUNT] = simple_rows

    i = SIMPLE_COUNT
    for qty in QUANTIFIERS:
        for subj in OBJ_PREDICATES:
            for rel in relations():
                for obj in OBJ_PREDICATES:
                    atom = RelProp(qty, subj, rel, obj)
                    bits = interpreter._atom_bools(atom, options)
                    packed[i] = np.packbits(bits, bitorder="little")
                    i += 1

    for left in range(SIMPLE_COUNT):
        left_row = simple_rows[left]
        for op_and in (True, False):
            block = (
                np.bitwise_and(left_row[None, :], simple_rows)
                if op_and
                else np.bitwise_or(left_row[None, :], simple_rows)
            )
            packed[i : i + SIMPLE_COUNT] = block
            i += SIMPLE_COUNT
    assert i == n_rules
    return SemanticMatrix(packed)


def equivalence_classes(matrix: SemanticMatrix) -> list[EquivalenceClass]:
    return matrix.classes()


def row_weights(matrix: SemanticMatrix) -> np.ndarray:
    return matrix.row_weights()


def column_weights(matrix: SemanticMatrix) -> np.ndarray:
    return matrix.column_weights()


def rules_equivalent(
    a: RuleAst, b: RuleAst, matrix: SemanticMatrix | None = None
) -> bool:
    """True iff the two rules assign identical tags to every structure."""
    if matrix is not None:
        return bool(
            np.array_equal(matrix.packed[rule_index(a)], matrix.packed[rule_index(b)])
        )
    return interpreter.evaluate_row(a) == interpreter.evaluate_row(b)


def save_matrix(matrix: SemanticMatrix, path: str | Path) -> None:
    matrix.save(path)


def load_matrix(path: str | Path) -> SemanticMatrix:
    return SemanticMatrix.load(path)
