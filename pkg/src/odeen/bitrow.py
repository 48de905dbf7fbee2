"""Bit-packed truth rows over the full universe.

A row holds one bit per structure, index ascending, packed LSB-first
into bytes; the 7 padding bits of the final byte are always zero so
rows compare and hash by raw bytes.
"""

from __future__ import annotations

import numpy as np

from .universe import UNIVERSE_SIZE

ROW_BYTES = (UNIVERSE_SIZE + 7) // 8  # 14,707
_PAD_BITS = ROW_BYTES * 8 - UNIVERSE_SIZE
_LAST_BYTE_MASK = np.uint8((1 << (8 - _PAD_BITS)) - 1)


class SemanticRow:
    """Truth values of one rule over all 117,649 structures."""

    __slots__ = ("packed",)

    def __init__(self, packed: np.ndarray):
        if packed.dtype != np.uint8 or packed.shape != (ROW_BYTES,):
            raise ValueError(f"packed row must be uint8[{ROW_BYTES}]")
        self.packed = packed

    @classmethod
    def from_bools(cls, bits: np.ndarray) -> "SemanticRow":
        if bits.shape != (UNIVERSE_SIZE,):
            raise ValueError(f"expected {UNIVERSE_SIZE} bits, got {bits.shape}")
        return cls(np.packbits(bits.astype(np.uint8), bitorder="little"))

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SemanticRow":
        return cls(np.frombuffer(raw, dtype=np.uint8).copy())

    def bit(self, index: int) -> int:
        return int(self.packed[index >> 3] >> (index & 7)) & 1

    def bits(self, indices) -> np.ndarray:
        """Labels at the given structure indices, as uint8."""
        idx = np.asarray(indices, dtype=np.int64)
        return ((self.packed[idx >> 3] >> (idx & 7)) & 1).astype(np.uint8)

    def to_bools(self) -> np.ndarray:
        return np.unpackbits(self.packed, bitorder="little")[:UNIVERSE_SIZE].astype(bool)

    def weight(self) -> int:
        return int(np.bitwise_count(self.packed).sum())

    def complement(self) -> "SemanticRow":
        out = np.bitwise_not(self.packed)
        out[-1] &= _LAST_BYTE_MASK  # keep padding bits zero
        return SemanticRow(out)

    def first_difference(self, other: "SemanticRow") -> int | None:
        """Smallest structure index where the rows disagree, or None if equal."""
        diff = np.bitwise_xor(self.packed, other.packed)
        nz = np.nonzero(diff)[0]
        if nz.size == 0:
            return None
        byte = int(nz[0])
        bit = int(diff[byte])
        return byte * 8 + (bit & -bit).bit_length() - 1

    def to_bytes(self) -> bytes:
        return self.packed.tobytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SemanticRow):
            return NotImplemented
        return bool(np.array_equal(self.packed, other.packed))

    def __and__(self, other: "SemanticRow") -> "SemanticRow":
        return SemanticRow(np.bitwise_and(self.packed, other.packed))

    def __or__(self, other: "SemanticRow") -> "SemanticRow":
        return SemanticRow(np.bitwise_or(self.packed, other.packed))

    def __xor__(self, other: "SemanticRow") -> "SemanticRow":
        return SemanticRow(np.bitwise_xor(self.packed, other.packed))

    def implies(self, other: "SemanticRow") -> bool:
        """Bitwise implication: every 1 here is a 1 in other."""
        return bool(np.array_equal(np.bitwise_and(self.packed, other.packed), self.packed))

    def __repr__(self) -> str:
        return f"SemanticRow(weight={self.weight()})"
