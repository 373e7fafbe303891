"""Quasi-cyclic LDPC parity-check matrices, systematic encoders and a code registry."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .gf2 import BinMatrix, BitWord, gf2_rank, row_reduce_systematic


class BlockKind(Enum):
    ZERO = "0"
    SHIFT = "P"
    IDENTITY_PLUS_SHIFT = "I+P"


@dataclass(frozen=True)
class QcBlockEntry:
    """One M x M block: zero, a circulant shift, or identity plus a shift.

    The identity itself is ``Shift(0)``.
    """

    kind: BlockKind
    shift: int = 0

    def __post_init__(self):
        if self.shift < 0:
            raise ValueError("shift exponent must be non-negative")
        if self.kind is BlockKind.IDENTITY_PLUS_SHIFT and self.shift == 0:
            raise ValueError("I + Phi^0 is the zero matrix; use a Zero block")

    @classmethod
    def zero(cls) -> QcBlockEntry:
        return cls(BlockKind.ZERO)

    @classmethod
    def identity(cls) -> QcBlockEntry:
        return cls(BlockKind.SHIFT, 0)

    @classmethod
    def phi(cls, i: int) -> QcBlockEntry:
        return cls(BlockKind.SHIFT, i)

    @classmethod
    def i_plus_phi(cls, i: int) -> QcBlockEntry:
        return cls(BlockKind.IDENTITY_PLUS_SHIFT, i)

    @property
    def weight(self) -> int:
        return {BlockKind.ZERO: 0, BlockKind.SHIFT: 1, BlockKind.IDENTITY_PLUS_SHIFT: 2}[self.kind]


@dataclass(frozen=True)
class QcMatrixSpec:
    m: int
    grid: tuple[tuple[QcBlockEntry, ...], ...]

    def __post_init__(self):
        widths = {len(r) for r in self.grid}
        if len(widths) != 1:
            raise ValueError("grid rows must have equal length")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.grid) * self.m, len(self.grid[0]) * self.m


def circulant(m: int, shift: int) -> np.ndarray:
    """Right circular shift of I_M: row r has its one at column (r + shift) mod M."""
    out = np.zeros((m, m), np.uint8)
    out[np.arange(m), (np.arange(m) + shift) % m] = 1
    return out


def build_qc_matrix(spec: QcMatrixSpec) -> BinMatrix:
    m = spec.m
    blocks = []
    for row in spec.grid:
        brow = []
        for entry in row:
            if entry.kind is not BlockKind.ZERO and entry.shift >= m:
                raise ValueError(f"shift exponent {entry.shift} out of range for M={m}")
            if entry.kind is BlockKind.ZERO:
                brow.append(np.zeros((m, m), np.uint8))
            elif entry.kind is BlockKind.SHIFT:
                brow.append(circulant(m, entry.shift))
            else:
                brow.append(circulant(m, 0) ^ circulant(m, entry.shift))
        blocks.append(brow)
    return BinMatrix.from_dense(np.block(blocks))


def _grid(rows) -> tuple[tuple[QcBlockEntry, ...], ...]:
    """Compact grid notation: int -> Phi^i, "I" -> identity, ("I", i) -> I + Phi^i, None -> 0."""
    out = []
    for row in rows:
        entries = []
        for cell in row:
            if cell is None:
                entries.append(QcBlockEntry.zero())
            elif cell == "I":
                entries.append(QcBlockEntry.identity())
            elif isinstance(cell, tuple):
                entries.append(QcBlockEntry.i_plus_phi(cell[1]))
            else:
                entries.append(QcBlockEntry.phi(cell))
        out.append(tuple(entries))
    return tuple(out)


CCSDS_128_64 = QcMatrixSpec(
    m=16,
    grid=_grid([
        [("I", 7), 2, 14, 6, None, 0, 13, "I"],
        [6, ("I", 15), 0, 1, "I", None, 0, 7],
        [4, 1, ("I", 15), 14, 11, "I", None, 3],
        [0, 1, 9, ("I", 13), 14, 1, "I", None],
    ]),
)

# Shift exponents run up to 63, so the circulant size is 64 (256 x 512 overall).
CCSDS_512_256 = QcMatrixSpec(
    m=64,
    grid=_grid([
        [("I", 63), 30, 50, 25, None, 43, 62, "I"],
        [56, ("I", 61), 50, 25, "I", None, 37, 26],
        [16, 0, ("I", 55), 27, 56, "I", None, 43],
        [35, 56, 62, ("I", 11), 58, 3, "I", None],
    ]),
)


class TannerGraph(NamedTuple):
    """Edge lists for message passing; edges are numbered in check-major order."""

    chk_ptr: np.ndarray  # (r + 1,) edge offsets per check
    edge_var: np.ndarray  # (E,) variable index of each edge
    var_ptr: np.ndarray  # (n + 1,) offsets into var_edges
    var_edges: np.ndarray  # (E,) edge ids grouped by variable


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Binary linear code with parity-check matrix ``h`` and systematic generator ``g``.

    ``info_positions`` lists where the k information bits sit in a codeword,
    in order; ``encode`` places infoword bit i at ``info_positions[i]``.
    """

    name: str
    h: BinMatrix
    g: BinMatrix
    info_positions: np.ndarray = field(repr=False)
    qc_spec: QcMatrixSpec | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.h.cols

    @property
    def k(self) -> int:
        return self.g.rows

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def h_dense(self) -> np.ndarray:
        return self.h.dense()

    @cached_property
    def g_dense(self) -> np.ndarray:
        return self.g.dense()

    @cached_property
    def graph(self) -> TannerGraph:
        h = self.h_dense
        chk, var = np.nonzero(h)  # row-major: check-major edge order
        chk_ptr = np.zeros(h.shape[0] + 1, np.int64)
        np.cumsum(np.bincount(chk, minlength=h.shape[0]), out=chk_ptr[1:])
        order = np.argsort(var, kind="stable")
        var_ptr = np.zeros(h.shape[1] + 1, np.int64)
        np.cumsum(np.bincount(var, minlength=h.shape[1]), out=var_ptr[1:])
        return TannerGraph(chk_ptr, var.astype(np.int64), var_ptr, order.astype(np.int64))

    def syndrome_weight(self, word: np.ndarray) -> int:
        return int(((self.h_dense.astype(np.int64) @ np.asarray(word, np.int64)) & 1).sum())

    def is_codeword(self, word: BitWord | np.ndarray) -> bool:
        bits = word.bits() if isinstance(word, BitWord) else word
        return self.syndrome_weight(bits) == 0

    def encode_bits(self, info: np.ndarray) -> np.ndarray:
        """Vectorized encoder over the last axis (``(..., k) -> (..., n)``)."""
        info = np.asarray(info, dtype=np.int64)
        if info.shape[-1] != self.k:
            raise ValueError(f"infoword length {info.shape[-1]} != k={self.k}")
        return ((info @ self.g_dense.astype(np.int64)) & 1).astype(np.uint8)


def code_from_parity_check(name: str, h: BinMatrix, qc_spec: QcMatrixSpec | None = None) -> LinearCode:
    """Derive a systematic generator for ``h`` and verify it.

    ``h`` must have full row rank.
    """
    reduced, perm, rank = row_reduce_systematic(h)
    if rank != h.rows:
        raise ValueError(f"parity-check matrix of {name!r} has rank {rank} < {h.rows} rows")
    r, n = h.shape
    k = n - r
    parity = reduced.dense()[:, r:]  # H' = [I_r | P] in permuted column order
    g_perm = np.concatenate([parity.T, np.eye(k, dtype=np.uint8)], axis=1)
    g = np.zeros((k, n), np.uint8)
    g[:, perm] = g_perm
    if ((g.astype(np.int64) @ h.dense().T.astype(np.int64)) & 1).any():
        raise AssertionError("derived generator is inconsistent with H")
    return LinearCode(name, h, BinMatrix.from_dense(g), perm[r:].copy(), qc_spec)


def encode(code: LinearCode, infoword: BitWord) -> BitWord:
    if infoword.length != code.k:
        raise ValueError(f"infoword length {infoword.length} != k={code.k}")
    return BitWord.from_bits(code.encode_bits(infoword.bits()))


_HAMMING_7_4_H = np.array([
    [1, 1, 0, 1, 1, 0, 0],
    [1, 0, 1, 1, 0, 1, 0],
    [0, 1, 1, 1, 0, 0, 1],
], dtype=np.uint8)


def _random_full_rank(rows: int, cols: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    while True:
        h = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
        if gf2_rank(h) == rows and h.sum(axis=0).min() > 0:
            return h


CODE_NAMES = ("ccsds-128-64", "ccsds-512-256", "toy-hamming-7-4", "toy-random-8-4")


@lru_cache(maxsize=None)
def make_code(name: str) -> LinearCode:
    """Look up a code by identifier; results are cached and immutable."""
    if name == "ccsds-128-64":
        return code_from_parity_check(name, build_qc_matrix(CCSDS_128_64), CCSDS_128_64)
    if name == "ccsds-512-256":
        return code_from_parity_check(name, build_qc_matrix(CCSDS_512_256), CCSDS_512_256)
    if name == "toy-hamming-7-4":
        return code_from_parity_check(name, BinMatrix.from_dense(_HAMMING_7_4_H))
    if name == "toy-random-8-4":
        return code_from_parity_check(name, BinMatrix.from_dense(_random_full_rank(4, 8, seed=2024)))
    raise ValueError(f"unknown code {name!r}; choose from {', '.join(CODE_NAMES)}")


def all_codewords(code: LinearCode) -> np.ndarray:
    """Enumerate all 2^k codewords, row i being the encoding of integer i (MSB-first)."""
    if code.k > 20:
        raise ValueError(f"refusing to enumerate 2^{code.k} codewords")
    idx = np.arange(2 ** code.k, dtype=np.int64)
    info = ((idx[:, None] >> np.arange(code.k - 1, -1, -1)) & 1).astype(np.uint8)
    return code.encode_bits(info)
