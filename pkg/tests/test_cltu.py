import math

import numpy as np
import pytest
from scipy import stats

from tcldpc.channel import ChannelParams, RngStream, bpsk_modulate
from tcldpc.cltu import (START_SEQUENCE, CltuConfig, CltuVerdict, KnownSequences, StartDetectConfig, TsMode,
                         build_cltu, derandomized_body, detect_start_sequence, receive_cltu, tail_at_decoder,
                         transmit_cltu)
from tcldpc.codes import encode
from tcldpc.decoders import DecoderConfig
from tcldpc.estimators import p_md_analytic, simulate_start_detection
from tcldpc.gf2 import BitWord
from tcldpc.scrambler import randomize

from conftest import START_HEX, T_HEX, T_PRIME_HEX


def infowords(count, seed=0):
    rng = np.random.default_rng(seed)
    return [BitWord.from_bits(rng.integers(0, 2, 64)) for _ in range(count)]


def noiseless(cltu):
    return 10.0 * bpsk_modulate(cltu)


def test_known_sequences():
    seqs = KnownSequences()
    assert seqs.consistent()
    assert seqs.start_sequence.to_hex() == START_HEX.replace(" ", "")
    assert seqs.tail_sequence == BitWord.from_hex(T_HEX)
    assert seqs.randomized_tail == BitWord.from_hex(T_PRIME_HEX)


@pytest.mark.parametrize("n,mode,length", [
    (1, "randomized", 320), (1, "derandomized", 320), (1, "none", 192), (10, "randomized", 1472), (40, "none", 5184),
])
def test_lengths(n, mode, length):
    cfg = CltuConfig(n_codewords=n, ts_mode=mode)
    cltu = build_cltu(infowords(n), cfg)
    assert cltu.length == cfg.length == length


def test_receiver_view_of_tail():
    for mode, expected in (("randomized", T_PRIME_HEX), ("derandomized", T_HEX)):
        cltu = build_cltu(infowords(1), CltuConfig(ts_mode=mode))
        tail = cltu[cltu.length - 128:]
        assert randomize(tail) == BitWord.from_hex(expected)
        assert tail_at_decoder(TsMode(mode)) == BitWord.from_hex(expected)
    with pytest.raises(ValueError):
        tail_at_decoder(TsMode.NONE)


@pytest.mark.parametrize("n", [1, 3, 10])
def test_body_derandomizes_to_codewords(code128, n):
    us = infowords(n, seed=n)
    cfg = CltuConfig(n_codewords=n)
    blocks = derandomized_body(build_cltu(us, cfg), cfg)
    for u, b in zip(us, blocks):
        assert BitWord.from_bits(b) == encode(code128, u)


def test_build_errors():
    with pytest.raises(ValueError):
        build_cltu(infowords(2), CltuConfig(n_codewords=1))
    with pytest.raises(ValueError):
        build_cltu([BitWord.zeros(63)], CltuConfig())
    with pytest.raises(ValueError):
        CltuConfig(n_codewords=0)
    with pytest.raises(ValueError):
        CltuConfig(ts_mode="sideways")


def test_start_detection_threshold():
    cfg = StartDetectConfig(64, 13)
    assert detect_start_sequence(START_SEQUENCE, cfg)
    assert detect_start_sequence(START_SEQUENCE, StartDetectConfig(64, 0))
    flips = np.zeros(64, np.uint8)
    flips[:13] = 1
    assert detect_start_sequence(START_SEQUENCE ^ BitWord.from_bits(flips), cfg)
    flips[13] = 1
    assert not detect_start_sequence(START_SEQUENCE ^ BitWord.from_bits(flips), cfg)
    with pytest.raises(ValueError):
        StartDetectConfig(64, 65)
    with pytest.raises(ValueError):
        detect_start_sequence(BitWord.zeros(63), cfg)


def within_three_sigma_coverage(events, trials, p):
    # exact binomial band with the coverage of +-3 sigma; stays valid when trials * p << 1
    tail = stats.norm.sf(3.0)
    return stats.binom.ppf(tail, trials, p) <= events <= stats.binom.isf(tail, trials, p)


def test_start_detection_monte_carlo_matches_analytic():
    trials = 1_000_000
    est = simulate_start_detection(StartDetectConfig(), 2.0, trials, seed=3)
    assert within_three_sigma_coverage(est.events, trials, p_md_analytic(64, 13, 2.0))
    # a regime where misses are frequent enough for the normal band too
    est = simulate_start_detection(StartDetectConfig(64, 6), -2.0, 200_000, seed=4)
    p = p_md_analytic(64, 6, -2.0)
    assert abs(est.events - 200_000 * p) <= 3 * math.sqrt(200_000 * p * (1 - p))
    assert within_three_sigma_coverage(est.events, 200_000, p)


DEC = DecoderConfig("llr-spa", 100)
PARAMS = ChannelParams(3.0)


@pytest.mark.parametrize("n", [1, 10])
def test_noiseless_randomized_accepted(n):
    cfg = CltuConfig(n_codewords=n)
    assert receive_cltu(noiseless(build_cltu(infowords(n), cfg)), cfg, DEC, PARAMS) is CltuVerdict.ACCEPTED


def test_noiseless_derandomized_accepted():
    cfg = CltuConfig(ts_mode="derandomized")
    assert receive_cltu(noiseless(build_cltu(infowords(1), cfg)), cfg, DEC, PARAMS) is CltuVerdict.ACCEPTED


def test_codeword_tail_not_acknowledged(code128):
    cfg = CltuConfig()
    cltu = build_cltu(infowords(1), cfg)
    fake_tail = randomize(encode(code128, infowords(1, seed=9)[0]))
    cltu = cltu[: cltu.length - 128] + fake_tail
    verdict = receive_cltu(noiseless(cltu), cfg, DEC, PARAMS)
    assert verdict is CltuVerdict.TS_NOT_ACKNOWLEDGED and verdict.rejected


def test_complemented_start_missed():
    cfg = CltuConfig()
    cltu = build_cltu(infowords(1), cfg)
    y = noiseless(cltu)
    y[:64] = -y[:64]
    assert receive_cltu(y, cfg, DEC, PARAMS) is CltuVerdict.MISSED_START


def test_garbled_block_is_ldpc_failure():
    cfg = CltuConfig(n_codewords=2)
    y = noiseless(build_cltu(infowords(2), cfg))
    y[64 + 128:64 + 256] = 0.3 * np.random.default_rng(1).standard_normal(128)
    assert receive_cltu(y, cfg, DEC, PARAMS) is CltuVerdict.LDPC_FAILURE


def test_no_tail_mode_accepts():
    cfg = CltuConfig(n_codewords=2, ts_mode="none")
    assert receive_cltu(noiseless(build_cltu(infowords(2), cfg)), cfg, DEC, PARAMS) is CltuVerdict.ACCEPTED


def test_receive_length_check():
    with pytest.raises(ValueError):
        receive_cltu(np.zeros(100), CltuConfig(), DEC, PARAMS)


def test_noisy_verdicts_partition():
    cfg = CltuConfig(n_codewords=1)
    cltu = build_cltu(infowords(1), cfg)
    params = ChannelParams(0.0)
    counts = {v: 0 for v in CltuVerdict}
    for i in range(300):
        y = transmit_cltu(cltu, cfg, params, RngStream(7, i).generator())
        counts[receive_cltu(y, cfg, DecoderConfig("msa", 20), params)] += 1
    assert sum(counts.values()) == 300
    assert counts[CltuVerdict.LDPC_FAILURE] > 0 and counts[CltuVerdict.ACCEPTED] > 0


def test_start_sequence_uses_uncoded_noise():
    cfg = CltuConfig()
    cltu = build_cltu(infowords(1), cfg)
    params = ChannelParams(1.0)
    y = np.stack([transmit_cltu(cltu, cfg, params, RngStream(0, i).generator()) for i in range(2000)])
    resid = y - bpsk_modulate(cltu)
    assert resid[:, :64].var() == pytest.approx(ChannelParams(1.0, 1.0).noise_variance, rel=0.02)
    assert resid[:, 64:].var() == pytest.approx(params.noise_variance, rel=0.02)
