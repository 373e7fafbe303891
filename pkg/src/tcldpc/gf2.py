"""Packed binary words and matrices over GF(2).

Bits are stored MSB-first in bytes, so the first hex digit of a word's
text form carries its first four (first transmitted) bits.
"""

from __future__ import annotations

import re
from typing import Iterable, Sequence

import numpy as np

_HEX_RE = re.compile(r"^[0-9a-fA-F]*$")


class BitWord:
    """Immutable fixed-length binary vector.

    Storage is a ``bytes`` object of ``ceil(length / 8)`` packed bytes with
    all padding bits beyond ``length`` held at zero.
    """

    __slots__ = ("_length", "_packed")

    def __init__(self, length: int, packed: bytes):
        if length < 0:
            raise ValueError("length must be non-negative")
        nbytes = (length + 7) // 8
        if len(packed) != nbytes:
            raise ValueError(f"expected {nbytes} packed bytes, got {len(packed)}")
        pad = 8 * nbytes - length
        if pad and packed[-1] & ((1 << pad) - 1):
            raise ValueError("padding bits beyond length must be zero")
        self._length = length
        self._packed = bytes(packed)

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> BitWord:
        arr = np.asarray(bits)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        arr = arr.astype(np.uint8, copy=False)
        if arr.size and arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        return cls(arr.size, np.packbits(arr).tobytes())

    @classmethod
    def from_hex(cls, text: str, length: int | None = None) -> BitWord:
        """Parse hex text; whitespace and case are ignored.

        ``length`` may be shorter than ``4 * digits`` as long as the dropped
        trailing bits are zero.
        """
        digits = "".join(text.split())
        if not _HEX_RE.match(digits):
            raise ValueError(f"not a hex string: {text!r}")
        nbits = 4 * len(digits)
        if length is None:
            length = nbits
        if not nbits - 4 < length <= nbits:
            raise ValueError(f"{len(digits)} hex digits cannot hold exactly {length} bits")
        bits = np.array(
            [int(b) for ch in digits for b in format(int(ch, 16), "04b")], dtype=np.uint8
        )
        if bits[length:].any():
            raise ValueError("hex text has nonzero bits beyond the requested length")
        return cls.from_bits(bits[:length])

    @classmethod
    def zeros(cls, length: int) -> BitWord:
        return cls(length, bytes((length + 7) // 8))

    @classmethod
    def ones(cls, length: int) -> BitWord:
        return cls.from_bits(np.ones(length, dtype=np.uint8))

    @classmethod
    def unit(cls, length: int, position: int) -> BitWord:
        bits = np.zeros(length, dtype=np.uint8)
        bits[position] = 1
        return cls.from_bits(bits)

    # -- views --------------------------------------------------------------

    @property
    def length(self) -> int:
        return self._length

    @property
    def packed(self) -> bytes:
        return self._packed

    def bits(self) -> np.ndarray:
        """Return a fresh uint8 0/1 array of ``length`` entries."""
        raw = np.frombuffer(self._packed, dtype=np.uint8)
        return np.unpackbits(raw, count=self._length) if self._length else np.zeros(0, np.uint8)

    def to_hex(self, group: int = 0) -> str:
        """Uppercase hex, zero-padded on the right to a whole digit.

        ``group`` > 0 inserts a space every ``group`` digits.
        """
        if self._length == 0:
            return ""
        ndigits = (self._length + 3) // 4
        bits = np.zeros(4 * ndigits, dtype=np.uint8)
        bits[: self._length] = self.bits()
        text = "".join(f"{int(v):X}" for v in bits.reshape(-1, 4) @ np.array([8, 4, 2, 1]))
        if group > 0:
            text = " ".join(text[i : i + group] for i in range(0, len(text), group))
        return text

    @property
    def weight(self) -> int:
        return int(np.unpackbits(np.frombuffer(self._packed, dtype=np.uint8)).sum())

    def concat(self, *others: BitWord) -> BitWord:
        return BitWord.from_bits(np.concatenate([self.bits()] + [o.bits() for o in others]))

    # -- dunder -------------------------------------------------------------

    def __len__(self) -> int:
        return self._length

    def __getitem__(self, key):
        if isinstance(key, slice):
            return BitWord.from_bits(self.bits()[key])
        if key < 0:
            key += self._length
        if not 0 <= key < self._length:
            raise IndexError(key)
        return (self._packed[key >> 3] >> (7 - (key & 7))) & 1

    def __xor__(self, other: BitWord) -> BitWord:
        _check_same_length(self, other)
        a = np.frombuffer(self._packed, dtype=np.uint8)
        b = np.frombuffer(other._packed, dtype=np.uint8)
        return BitWord(self._length, (a ^ b).tobytes())

    def __add__(self, other: BitWord) -> BitWord:
        return self.concat(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitWord):
            return NotImplemented
        return self._length == other._length and self._packed == other._packed

    def __hash__(self) -> int:
        return hash((self._length, self._packed))

    def __repr__(self) -> str:
        return f"BitWord({self._length}, {self.to_hex()!r})"


def _check_same_length(a: BitWord, b: BitWord) -> None:
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} != {b.length}")


def hamming_distance(a: BitWord, b: BitWord) -> int:
    _check_same_length(a, b)
    return (a ^ b).weight


class BinMatrix:
    """Immutable dense binary matrix with MSB-first packed rows."""

    __slots__ = ("_rows", "_cols", "_packed")

    def __init__(self, rows: int, cols: int, packed: np.ndarray):
        packed = np.array(packed, dtype=np.uint8, copy=True)
        if packed.shape != (rows, (cols + 7) // 8):
            raise ValueError(f"packed shape {packed.shape} does not fit {rows}x{cols}")
        packed.setflags(write=False)
        self._rows = rows
        self._cols = cols
        self._packed = packed

    @classmethod
    def from_dense(cls, dense) -> BinMatrix:
        arr = np.asarray(dense, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("entries must be 0 or 1")
        rows, cols = arr.shape
        packed = np.packbits(arr, axis=1) if cols else np.zeros((rows, 0), np.uint8)
        return cls(rows, cols, packed)

    @classmethod
    def identity(cls, size: int) -> BinMatrix:
        return cls.from_dense(np.eye(size, dtype=np.uint8))

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return self._rows, self._cols

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    def dense(self) -> np.ndarray:
        if self._cols == 0:
            return np.zeros((self._rows, 0), np.uint8)
        return np.unpackbits(self._packed, axis=1, count=self._cols)

    def row(self, i: int) -> BitWord:
        return BitWord(self._cols, self._packed[i].tobytes())

    def column_weights(self) -> np.ndarray:
        return self.dense().sum(axis=0)

    def row_weights(self) -> np.ndarray:
        return self.dense().sum(axis=1)

    def nnz(self) -> int:
        return int(self.dense().sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._packed, other._packed)

    def __hash__(self) -> int:
        return hash((self.shape, self._packed.tobytes()))

    def __repr__(self) -> str:
        return f"BinMatrix({self._rows}x{self._cols}, nnz={self.nnz()})"

    # -- text formats -------------------------------------------------------

    def to_dense_text(self) -> str:
        return "\n".join("".join(map(str, r)) for r in self.dense()) + "\n"

    @classmethod
    def from_dense_text(cls, text: str) -> BinMatrix:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        return cls.from_dense([[int(c) for c in ln if c in "01"] for ln in lines])

    def to_alist(self) -> str:
        """MacKay ``alist`` text: column-major then row-major 1-based indices."""
        dense = self.dense()
        col_w = dense.sum(axis=0)
        row_w = dense.sum(axis=1)
        max_col = int(col_w.max()) if self._cols else 0
        max_row = int(row_w.max()) if self._rows else 0
        out = [
            f"{self._cols} {self._rows}",
            f"{max_col} {max_row}",
            " ".join(str(int(w)) for w in col_w),
            " ".join(str(int(w)) for w in row_w),
        ]
        for j in range(self._cols):
            idx = [str(i + 1) for i in np.flatnonzero(dense[:, j])]
            idx += ["0"] * (max_col - len(idx))
            out.append(" ".join(idx))
        for i in range(self._rows):
            idx = [str(j + 1) for j in np.flatnonzero(dense[i])]
            idx += ["0"] * (max_row - len(idx))
            out.append(" ".join(idx))
        return "\n".join(out) + "\n"

    @classmethod
    def from_alist(cls, text: str) -> BinMatrix:
        tokens = [int(tok) for tok in text.split()]
        it = iter(tokens)
        cols, rows = next(it), next(it)
        max_col, _max_row = next(it), next(it)
        col_w = [next(it) for _ in range(cols)]
        for _ in range(rows):
            next(it)
        dense = np.zeros((rows, cols), np.uint8)
        for j in range(cols):
            entries = [next(it) for _ in range(max_col)]
            for i in entries[: col_w[j]]:
                dense[i - 1, j] = 1
        # row section is redundant with the column section; consumed, not re-applied
        return cls.from_dense(dense)


def mat_vec_syndrome(h: BinMatrix, v: BitWord) -> BitWord:
    if v.length != h.cols:
        raise ValueError(f"word length {v.length} != matrix columns {h.cols}")
    vec = np.frombuffer(v.packed, dtype=np.uint8)
    anded = np.bitwise_and(h.packed, vec)
    parity = np.unpackbits(anded, axis=1).sum(axis=1) & 1
    return BitWord.from_bits(parity.astype(np.uint8))


def syndrome_dense(h_dense: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Syndromes of one word or a batch of words (last axis = columns)."""
    return (np.asarray(words, dtype=np.int64) @ h_dense.T.astype(np.int64)) & 1


def rref(dense: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) with leftmost pivoting.

    Returns the reduced matrix (zero rows last) and the pivot columns.
    """
    a = np.array(dense, dtype=np.uint8, copy=True)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        mask = a[:, c].astype(bool)
        mask[r] = False
        a[mask] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def row_reduce_systematic(h: BinMatrix) -> tuple[BinMatrix, np.ndarray, int]:
    """Row-reduce ``h`` and move pivot columns to the front.

    Returns ``(reduced, perm, rank)`` where ``reduced`` equals the reduced
    row echelon form with columns taken in order ``perm``: its leading
    ``rank x rank`` block is the identity and any dependent rows are zero.
    """
    reduced, pivots = rref(h.dense())
    rest = [c for c in range(h.cols) if c not in set(pivots)]
    perm = np.array(pivots + rest, dtype=np.int64)
    return BinMatrix.from_dense(reduced[:, perm]), perm, len(pivots)


def gf2_rank(dense: np.ndarray) -> int:
    return len(rref(dense)[1])


def null_space(h: BinMatrix) -> BinMatrix:
    """Basis of the right null space, one basis vector per row."""
    reduced, perm, rank = row_reduce_systematic(h)
    n = h.cols
    p = reduced.dense()[:rank, rank:]
    k = n - rank
    basis_perm = np.concatenate([p.T, np.eye(k, dtype=np.uint8)], axis=1)
    basis = np.zeros((k, n), np.uint8)
    basis[:, perm] = basis_perm
    return BinMatrix.from_dense(basis)


def words_to_matrix(words: Sequence[BitWord]) -> np.ndarray:
    return np.array([w.bits() for w in words], dtype=np.uint8)
