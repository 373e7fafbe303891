import numpy as np
import pytest

from tcldpc.channel import ChannelParams
from tcldpc.codes import all_codewords, make_code
from tcldpc.decoders import DecoderConfig, ErrorClass, decode, decode_batch, exhaustive_ml_decode
from tcldpc.gf2 import BitWord

ALGOS = ["llr-spa", "msa", "nmsa"]


def noisy_codewords(code, count, ebn0, seed, scale=True):
    rng = np.random.default_rng(seed)
    info = rng.integers(0, 2, (count, code.k), dtype=np.uint8)
    words = code.encode_bits(info)
    params = ChannelParams(ebn0, code.rate)
    y = 1.0 - 2.0 * words + params.sigma * rng.standard_normal(words.shape)
    return words, (params.llr_scale * y if scale else y)


def syndrome_ok(code, hard):
    return not ((hard.astype(int) @ code.h_dense.T.astype(int)) & 1).any()


def test_config_validation():
    assert DecoderConfig("spa").algorithm == "llr-spa"
    for bad in ({"algorithm": "bp"}, {"max_iterations": 0}, {"normalization_factor": 0.0},
                {"normalization_factor": 1.2}, {"llr_clip_magnitude": -1.0}):
        with pytest.raises(ValueError):
            DecoderConfig(**bad)


@pytest.mark.parametrize("algo", ALGOS)
def test_noiseless_codeword_iteration_zero(code128, algo):
    c = code128.encode_bits(np.random.default_rng(0).integers(0, 2, 64, dtype=np.uint8))
    out = decode(code128, 10.0 * (1 - 2.0 * c), DecoderConfig(algo), BitWord.from_bits(c))
    assert out.converged and out.iterations_used == 0
    assert out.hard_word == BitWord.from_bits(c)
    assert out.error_class is ErrorClass.CORRECT


@pytest.mark.parametrize("algo", ALGOS)
def test_single_flip_corrected(code128, algo):
    rng = np.random.default_rng(1)
    for pos in (0, 37, 127):
        c = code128.encode_bits(rng.integers(0, 2, 64, dtype=np.uint8))
        llr = 10.0 * (1 - 2.0 * c)
        llr[pos] = -llr[pos]
        out = decode(code128, llr, DecoderConfig(algo), BitWord.from_bits(c))
        assert out.converged and out.iterations_used >= 1
        assert out.error_class is ErrorClass.CORRECT


def test_rejects_bad_input(code128):
    with pytest.raises(ValueError):
        decode(code128, np.zeros(127), DecoderConfig())
    llr = np.zeros(128)
    llr[3] = np.nan
    with pytest.raises(ValueError):
        decode(code128, llr, DecoderConfig())
    llr[3] = np.inf
    with pytest.raises(ValueError):
        decode_batch(code128, llr[None, :], DecoderConfig())


def test_zero_llr_tie_is_bit_zero(code128):
    out = decode(code128, np.zeros(128), DecoderConfig(max_iterations=1))
    assert out.converged and out.iterations_used == 0 and out.hard_word.weight == 0


def test_check_iteration_zero_knob(code128):
    llr = np.full(128, 5.0)
    on = decode(code128, llr, DecoderConfig(check_iteration_zero=True))
    off = decode(code128, llr, DecoderConfig(check_iteration_zero=False))
    assert (on.iterations_used, off.iterations_used) == (0, 1)
    assert on.hard_word == off.hard_word


@pytest.mark.parametrize("algo", ALGOS)
def test_converged_implies_zero_syndrome_and_classes(code128, algo):
    words, llr = noisy_codewords(code128, 400, 2.0, seed=5)
    conv, iters, hard = decode_batch(code128, llr, DecoderConfig(algo, 30))
    assert syndrome_ok(code128, hard[conv])
    assert (iters <= 30).all() and (iters[~conv] == 30).all()
    assert 0 < conv.mean() < 1


def test_hamming_outputs_are_codewords():
    code = make_code("toy-hamming-7-4")
    _, llr = noisy_codewords(code, 1000, 3.0, seed=8)
    for algo in ALGOS:
        conv, _, hard = decode_batch(code, llr, DecoderConfig(algo, 20))
        assert syndrome_ok(code, hard[conv])


def test_batch_rows_independent(code128):
    _, llr = noisy_codewords(code128, 300, 2.5, seed=9)
    cfg = DecoderConfig("llr-spa", 50)
    conv, iters, hard = decode_batch(code128, llr, cfg)
    for i in (0, 17, 150, 299):
        c1, it1, h1 = decode_batch(code128, llr[i:i + 1], cfg)
        assert c1[0] == conv[i] and it1[0] == iters[i] and np.array_equal(h1[0], hard[i])
    perm = np.random.default_rng(0).permutation(300)
    c2, it2, h2 = decode_batch(code128, llr[perm], cfg)
    assert np.array_equal(c2, conv[perm]) and np.array_equal(it2, iters[perm]) and np.array_equal(h2, hard[perm])


def test_empty_batch(code128):
    conv, iters, hard = decode_batch(code128, np.zeros((0, 128)), DecoderConfig())
    assert conv.shape == (0,) and hard.shape == (0, 128)


@pytest.mark.parametrize("alpha", [0.1, 3.7])
def test_msa_scale_invariance(code128, alpha):
    # per-iteration hard decisions: compare after each iteration budget
    _, llr = noisy_codewords(code128, 100, 1.5, seed=21)
    for it in range(1, 16):
        cfg = DecoderConfig("msa", it, llr_clip_magnitude=None, check_iteration_zero=False)
        c1, i1, h1 = decode_batch(code128, llr, cfg)
        c2, i2, h2 = decode_batch(code128, alpha * llr, cfg)
        assert np.array_equal(h1, h2) and np.array_equal(c1, c2) and np.array_equal(i1, i2)


@pytest.mark.parametrize("ebn0", [1.0, 3.0])
def test_nmsa_unit_factor_equals_msa(code128, ebn0):
    _, llr = noisy_codewords(code128, 300, ebn0, seed=4)
    a = decode_batch(code128, llr, DecoderConfig("msa", 40))
    b = decode_batch(code128, llr, DecoderConfig("nmsa", 40, normalization_factor=1.0))
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_nmsa_differs_from_msa(code128):
    _, llr = noisy_codewords(code128, 300, 1.0, seed=4)
    a = decode_batch(code128, llr, DecoderConfig("msa", 40))
    b = decode_batch(code128, llr, DecoderConfig("nmsa", 40))
    assert not np.array_equal(a[1], b[1])


def test_ml_exact_image_and_tie():
    code = make_code("toy-random-8-4")
    words = all_codewords(code)
    for c in words:
        assert exhaustive_ml_decode(code, 1.0 - 2.0 * c) == BitWord.from_bits(c)
    assert exhaustive_ml_decode(code, np.zeros(8)) == BitWord.from_bits(words[0])


def test_ml_equals_min_hamming_on_hard_inputs():
    code = make_code("toy-hamming-7-4")
    words = all_codewords(code)
    for v in range(128):
        hard = np.array([(v >> (6 - i)) & 1 for i in range(7)], np.uint8)
        dist = (words != hard).sum(axis=1)
        expected = words[int(np.argmin(dist))]
        assert exhaustive_ml_decode(code, 1.0 - 2.0 * hard) == BitWord.from_bits(expected)


def test_ml_capability_error(code128):
    with pytest.raises(ValueError):
        exhaustive_ml_decode(code128, np.zeros(128))
    with pytest.raises(ValueError):
        exhaustive_ml_decode(make_code("toy-hamming-7-4"), np.zeros(6))


@pytest.mark.parametrize("name", ["toy-hamming-7-4", "toy-random-8-4"])
@pytest.mark.parametrize("algo", ALGOS)
def test_iterative_agrees_with_ml_at_high_snr(name, algo):
    code = make_code(name)
    _, y = noisy_codewords(code, 10_000, 6.0, seed=31, scale=False)
    params = ChannelParams(6.0, code.rate)
    _, _, hard = decode_batch(code, params.llr_scale * y, DecoderConfig(algo, 20))
    ml = np.array([exhaustive_ml_decode(code, row).bits() for row in y])
    assert (hard == ml).all(axis=1).mean() >= 0.95
