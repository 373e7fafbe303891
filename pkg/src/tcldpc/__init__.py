"""Telecommand LDPC coding chain: codes, randomizer, decoders, CLTU framing and rejection analysis."""

__version__ = "0.1.0"

from .gf2 import BinMatrix, BitWord, hamming_distance
from .codes import LinearCode, encode, make_code
from .scrambler import derandomize, lfsr_sequence, randomize
from .channel import ChannelParams, bit_error_probability
from .decoders import DecoderConfig, decode, decode_batch, exhaustive_ml_decode
from .cltu import CltuConfig, KnownSequences, StartDetectConfig, TsMode, build_cltu, receive_cltu

__all__ = [
    "BinMatrix", "BitWord", "hamming_distance",
    "LinearCode", "encode", "make_code",
    "derandomize", "lfsr_sequence", "randomize",
    "ChannelParams", "bit_error_probability",
    "DecoderConfig", "decode", "decode_batch", "exhaustive_ml_decode",
    "CltuConfig", "KnownSequences", "StartDetectConfig", "TsMode", "build_cltu", "receive_cltu",
]
