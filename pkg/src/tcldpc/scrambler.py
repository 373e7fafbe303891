"""Telecommand randomizer: an 8-stage LFSR restarted on every 128-bit block.

The generator polynomial is x^8 + x^6 + x^4 + x^3 + x^2 + x + 1. Seed and
register convention are not implied by the polynomial alone;
``search_lfsr_configs`` enumerates the candidates. Exactly two match the
known mask (tail sequence XOR its randomized form), and both emit the same
stream: all-ones seed read from the oldest cell, or seed 0x3D read from the
newest cell. ``TC_RANDOMIZER`` locks the all-ones form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .gf2 import BitWord

# exponents with nonzero coefficient, excluding x^8
TC_POLY_TAPS = (6, 4, 3, 2, 1, 0)
BLOCK_BITS = 128


@dataclass(frozen=True)
class LfsrConfig:
    """Fibonacci register holding the last eight sequence bits, oldest in cell 0.

    ``recurrence`` selects how the polynomial drives the feedback:
    "direct" computes s[t+8] as the XOR of s[t+j] over the tap exponents j,
    "reciprocal" uses the reversed polynomial. ``output`` is the cell read
    on each clock (0 = oldest, 7 = newest). ``seed`` loads cell 0 from its
    most significant bit.
    """

    taps: tuple[int, ...] = TC_POLY_TAPS
    seed: int = 0xFF
    recurrence: str = "direct"
    output: int = 0

    def __post_init__(self):
        if not 0 < self.seed < 256:
            raise ValueError("seed must be a nonzero 8-bit state")
        if self.recurrence not in ("direct", "reciprocal"):
            raise ValueError(f"unknown recurrence {self.recurrence!r}")
        if self.output not in (0, 7):
            raise ValueError("output must be cell 0 or cell 7")

    @property
    def feedback_cells(self) -> tuple[int, ...]:
        if self.recurrence == "direct":
            return tuple(sorted(self.taps))
        return tuple(sorted(8 - e for e in self.taps if e) + [0])


def _generate(cfg: LfsrConfig, count: int) -> np.ndarray:
    cells = [(cfg.seed >> (7 - i)) & 1 for i in range(8)]
    fb_cells = cfg.feedback_cells
    out = np.empty(count, np.uint8)
    for t in range(count):
        out[t] = cells[cfg.output]
        fb = 0
        for j in fb_cells:
            fb ^= cells[j]
        cells = cells[1:] + [fb]
    return out


def lfsr_sequence(cfg: LfsrConfig, count: int) -> BitWord:
    if count < 0:
        raise ValueError("count must be non-negative")
    return BitWord.from_bits(_generate(cfg, count))


def search_lfsr_configs(target: BitWord) -> list[LfsrConfig]:
    """All (seed, recurrence, output cell) choices whose output starts with ``target``."""
    want = target.bits()
    hits = []
    for seed, recurrence, output in product(range(1, 256), ("direct", "reciprocal"), (0, 7)):
        cfg = LfsrConfig(TC_POLY_TAPS, seed, recurrence, output)
        if np.array_equal(_generate(cfg, len(want)), want):
            hits.append(cfg)
    return hits


TC_RANDOMIZER = LfsrConfig(TC_POLY_TAPS, seed=0xFF, recurrence="direct", output=0)


@lru_cache(maxsize=4)
def _block_stream(cfg: LfsrConfig) -> np.ndarray:
    stream = _generate(cfg, BLOCK_BITS)
    stream.setflags(write=False)
    return stream


def randomizer_stream(length: int, cfg: LfsrConfig = TC_RANDOMIZER) -> np.ndarray:
    """The XOR mask for ``length`` bits, restarting every 128 bits."""
    reps = -(-length // BLOCK_BITS) if length else 0
    return np.tile(_block_stream(cfg), reps)[:length]


def randomize_bits(bits: np.ndarray, cfg: LfsrConfig = TC_RANDOMIZER) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    return bits ^ randomizer_stream(bits.shape[-1], cfg)


def randomize(data: BitWord, cfg: LfsrConfig = TC_RANDOMIZER) -> BitWord:
    return BitWord.from_bits(randomize_bits(data.bits(), cfg))


# the operation is an involution
derandomize = randomize
