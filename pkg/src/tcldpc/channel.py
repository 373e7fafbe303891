"""BPSK over AWGN with per-trial reproducible noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

# Stream tags keep draws for different purposes independent under one seed.
STREAM_CODEWORD = 1
STREAM_TAIL = 2
STREAM_CLTU = 3
STREAM_HISTOGRAM = 4
STREAM_GENERIC = 0


@dataclass(frozen=True)
class ChannelParams:
    """Eb/N0 in dB and code rate; unit-energy BPSK symbols.

    Use ``rate=1`` for uncoded bits such as the start sequence.
    """

    ebn0_db: float
    rate: float = 0.5

    def __post_init__(self):
        if not 0 < self.rate <= 1:
            raise ValueError("rate must lie in (0, 1]")

    @property
    def noise_variance(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_variance)

    @property
    def llr_scale(self) -> float:
        return 2.0 / self.noise_variance


@dataclass(frozen=True)
class RngStream:
    """Identifies an independent random stream: (master seed, purpose tag, index).

    The generator returned by ``generator()`` is a pure function of these
    three values, so trial ``index`` sees the same draws no matter which
    worker runs it or in what order.
    """

    seed: int
    index: int
    tag: int = STREAM_GENERIC

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.tag, self.index)))


def bpsk_modulate(bits) -> np.ndarray:
    """0 -> +1.0, 1 -> -1.0 (accepts a BitWord or any 0/1 array)."""
    arr = bits.bits() if hasattr(bits, "bits") else np.asarray(bits)
    return 1.0 - 2.0 * arr.astype(np.float64)


def add_noise(x: np.ndarray, params: ChannelParams, gen: np.random.Generator) -> np.ndarray:
    return x + params.sigma * gen.standard_normal(x.shape)


def channel_llr(y: np.ndarray, params: ChannelParams) -> np.ndarray:
    """LLR = 2y/sigma^2; positive values favour bit 0."""
    return params.llr_scale * y


def transmit(x: np.ndarray, params: ChannelParams, rng: RngStream | np.random.Generator):
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    y = add_noise(np.asarray(x, dtype=np.float64), params, gen)
    return y, channel_llr(y, params)


def bit_error_probability(ebn0_db: float) -> float:
    """Uncoded BPSK bit error probability 0.5 * erfc(sqrt(Eb/N0))."""
    if ebn0_db == -math.inf:
        return 0.5
    return float(0.5 * erfc(math.sqrt(10.0 ** (ebn0_db / 10.0))))
