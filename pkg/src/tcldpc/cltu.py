"""CLTU assembly and the receiver pipeline.

Layout: start sequence, N randomized codewords, then an optional 128-bit
tail sequence. In the standard ("randomized") placement the tail is
appended as-is and the receiver's de-randomizer turns it into t'; in the
"derandomized" placement t' is appended so the receiver recovers t.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .channel import ChannelParams, bpsk_modulate
from .codes import LinearCode, make_code
from .decoders import DecoderConfig, decode_batch
from .gf2 import BitWord, hamming_distance
from .scrambler import randomize, randomize_bits, randomizer_stream

START_SEQUENCE = BitWord.from_hex("0347 76C7 2728 95B0")
TAIL_SEQUENCE = BitWord.from_hex("5555 5556 AAAA AAAA 5555 5555 5555 5555")
RANDOMIZED_TAIL = BitWord.from_hex("AA6C CB0C C243 AC5F 39DC 7AF4 640B 5D95")


@dataclass(frozen=True)
class KnownSequences:
    start_sequence: BitWord = START_SEQUENCE
    tail_sequence: BitWord = TAIL_SEQUENCE
    randomized_tail: BitWord = RANDOMIZED_TAIL

    def consistent(self) -> bool:
        return randomize(self.tail_sequence) == self.randomized_tail


class TsMode(str, Enum):
    RANDOMIZED = "randomized"
    DERANDOMIZED = "derandomized"
    NONE = "none"


def tail_on_air(mode: TsMode, seqs: KnownSequences = KnownSequences()) -> BitWord | None:
    """The 128 tail bits actually transmitted for ``mode``."""
    mode = TsMode(mode)
    if mode is TsMode.RANDOMIZED:
        return seqs.tail_sequence
    if mode is TsMode.DERANDOMIZED:
        return seqs.randomized_tail
    return None


def tail_at_decoder(mode: TsMode, seqs: KnownSequences = KnownSequences()) -> BitWord:
    """The noiseless word the decoder sees after de-randomizing the tail block."""
    word = tail_on_air(mode, seqs)
    if word is None:
        raise ValueError("no tail sequence in this mode")
    return randomize(word)


@dataclass(frozen=True)
class CltuConfig:
    code: str = "ccsds-128-64"
    n_codewords: int = 1
    ts_mode: TsMode = TsMode.RANDOMIZED

    def __post_init__(self):
        if self.n_codewords < 1:
            raise ValueError("a CLTU carries at least one codeword")
        object.__setattr__(self, "ts_mode", TsMode(self.ts_mode))

    @property
    def linear_code(self) -> LinearCode:
        return make_code(self.code)

    @property
    def length(self) -> int:
        tail = 0 if self.ts_mode is TsMode.NONE else TAIL_SEQUENCE.length
        return START_SEQUENCE.length + self.n_codewords * self.linear_code.n + tail


@dataclass(frozen=True)
class StartDetectConfig:
    length: int = 64
    threshold: int = 13

    def __post_init__(self):
        if not 0 <= self.threshold <= self.length:
            raise ValueError("threshold must lie in [0, length]")


class CltuVerdict(str, Enum):
    ACCEPTED = "accepted"
    MISSED_START = "missed-start"
    LDPC_FAILURE = "ldpc-failure"
    TS_NOT_ACKNOWLEDGED = "ts-not-acknowledged"

    @property
    def rejected(self) -> bool:
        return self is not CltuVerdict.ACCEPTED


def build_cltu(infowords: Sequence[BitWord], cfg: CltuConfig,
               seqs: KnownSequences = KnownSequences()) -> BitWord:
    code = cfg.linear_code
    if len(infowords) != cfg.n_codewords:
        raise ValueError(f"expected {cfg.n_codewords} infowords, got {len(infowords)}")
    for u in infowords:
        if u.length != code.k:
            raise ValueError(f"infoword length {u.length} != k={code.k}")
    info = np.array([u.bits() for u in infowords], dtype=np.uint8)
    body = randomize_bits(code.encode_bits(info)).reshape(-1)
    parts = [seqs.start_sequence.bits(), body]
    tail = tail_on_air(cfg.ts_mode, seqs)
    if tail is not None:
        parts.append(tail.bits())
    return BitWord.from_bits(np.concatenate(parts))


def detect_start_sequence(received_hard: BitWord, cfg: StartDetectConfig = StartDetectConfig(),
                          start: BitWord = START_SEQUENCE) -> bool:
    """Frame-aligned hard correlator: accept if at most ``threshold`` bits differ."""
    if received_hard.length != cfg.length:
        raise ValueError(f"expected {cfg.length} hard bits, got {received_hard.length}")
    return hamming_distance(received_hard, start) <= cfg.threshold


def cltu_noise_scale(cfg: CltuConfig, params: ChannelParams) -> np.ndarray:
    """Per-symbol noise standard deviation along a CLTU.

    The start sequence is uncoded, so it sees the rate-1 noise level for the
    given Eb/N0; coded blocks and the tail use the code rate.
    """
    uncoded = ChannelParams(params.ebn0_db, rate=1.0).sigma
    scale = np.full(cfg.length, params.sigma)
    scale[: START_SEQUENCE.length] = uncoded
    return scale


def transmit_cltu(cltu: BitWord, cfg: CltuConfig, params: ChannelParams,
                  gen: np.random.Generator) -> np.ndarray:
    x = bpsk_modulate(cltu)
    return x + cltu_noise_scale(cfg, params) * gen.standard_normal(x.size)


def receive_cltu(y: np.ndarray, cfg: CltuConfig, decoder: DecoderConfig, params: ChannelParams,
                 start_cfg: StartDetectConfig = StartDetectConfig(),
                 seqs: KnownSequences = KnownSequences()) -> CltuVerdict:
    """Run the receiver chain on one noisy CLTU and report why it was rejected, if it was.

    Start-sequence detection is hard-decision and frame-aligned. The body and
    tail are de-randomized in the LLR domain (sign flips), decoded block by
    block with ``decoder``; a detected failure on any data block rejects the
    CLTU, and convergence on the tail block means the tail went unnoticed.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (cfg.length,):
        raise ValueError(f"expected {cfg.length} received values, got shape {y.shape}")
    code = cfg.linear_code
    s = start_cfg.length
    hard_start = BitWord.from_bits((y[:s] < 0).astype(np.uint8))
    if not detect_start_sequence(hard_start, start_cfg, seqs.start_sequence):
        return CltuVerdict.MISSED_START

    rest = y[s:]
    flips = 1.0 - 2.0 * randomizer_stream(rest.size)
    llr = params.llr_scale * rest * flips
    n_blocks = rest.size // code.n
    blocks = llr[: n_blocks * code.n].reshape(n_blocks, code.n)
    converged, _, _ = decode_batch(code, blocks, decoder)
    if not converged[: cfg.n_codewords].all():
        return CltuVerdict.LDPC_FAILURE
    if cfg.ts_mode is not TsMode.NONE and converged[cfg.n_codewords]:
        return CltuVerdict.TS_NOT_ACKNOWLEDGED
    return CltuVerdict.ACCEPTED


def derandomized_body(cltu: BitWord, cfg: CltuConfig) -> np.ndarray:
    """Noiseless receiver view: the de-randomized codeword blocks, shape (N, n)."""
    code = cfg.linear_code
    bits = cltu.bits()[START_SEQUENCE.length:]
    body = randomize_bits(bits)[: cfg.n_codewords * code.n]
    return body.reshape(cfg.n_codewords, code.n)
