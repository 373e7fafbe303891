"""Analytic rejection-probability terms and Monte Carlo estimators with stopping rules."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np
from scipy.stats import beta

from .channel import (STREAM_CLTU, STREAM_CODEWORD, STREAM_TAIL, ChannelParams, RngStream,
                      bit_error_probability)
from .cltu import START_SEQUENCE, StartDetectConfig, TsMode, tail_on_air
from .codes import LinearCode, make_code
from .decoders import DecoderConfig, decode_batch
from .gf2 import BitWord
from .scrambler import randomizer_stream

SCHEMA_VERSION = 1
DEFAULT_CHUNK = 1024


# ---- analytic terms --------------------------------------------------------


def p_md_analytic(s: int, e: int, ebn0_db: float) -> float:
    """Probability that more than ``e`` of ``s`` uncoded start-sequence bits are in error.

    Summed term by term over the upper tail, so tiny values keep full
    relative precision (no ``1 - cdf`` cancellation).
    """
    if not 0 <= e <= s:
        raise ValueError("need 0 <= E <= S")
    pb = bit_error_probability(ebn0_db)
    if e == s or pb == 0.0:
        return 0.0
    log_pb, log_qb = math.log(pb), math.log1p(-pb)
    terms = [math.comb(s, j) * math.exp(j * log_pb + (s - j) * log_qb) for j in range(e + 1, s + 1)]
    return math.fsum(terms)


def p_ldpc_from_cer(cer_star: float, n_codewords: int) -> float:
    """Probability that at least one of ``n_codewords`` blocks fails to decode."""
    if not 0.0 <= cer_star <= 1.0:
        raise ValueError("cer_star must lie in [0, 1]")
    if n_codewords < 1:
        raise ValueError("n_codewords must be >= 1")
    if n_codewords == 1 or cer_star in (0.0, 1.0):
        return float(cer_star)
    return float(-math.expm1(n_codewords * math.log1p(-cer_star)))


def combine_tc_rejection(p_md: float, p_ldpc: float, p_nat: float) -> float:
    """TC rejection from three mutually exclusive stages: start miss, decode failure, tail miss."""
    for name, v in (("p_md", p_md), ("p_ldpc", p_ldpc), ("p_nat", p_nat)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1]")
    return p_nat + (1.0 - p_nat) * (p_md + (1.0 - p_md) * p_ldpc)


@dataclass(frozen=True)
class ApproximationCheck:
    exact: float
    approx: float
    relative_gap: float


def approximation_check(cer: float, n_codewords: int) -> ApproximationCheck:
    """Compare 1 - (1 - CER)^N with its first-order form N * CER."""
    if cer * n_codewords >= 1.0:
        raise ValueError("approximation only meaningful for cer * N < 1")
    exact = p_ldpc_from_cer(cer, n_codewords)
    approx = n_codewords * cer
    gap = 0.0 if approx == 0.0 else (approx - exact) / approx
    return ApproximationCheck(exact, approx, gap)


# ---- estimates and stopping --------------------------------------------------


def clopper_pearson(events: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval; with zero events the upper end is the one-sided bound."""
    if trials == 0:
        return 0.0, 1.0
    alpha = 1.0 - confidence
    if events == 0:
        return 0.0, float(1.0 - alpha ** (1.0 / trials))
    lo = float(beta.ppf(alpha / 2, events, trials - events + 1))
    hi = 1.0 if events == trials else float(beta.ppf(1 - alpha / 2, events + 1, trials - events))
    return lo, hi


@dataclass(frozen=True)
class Estimate:
    events: int
    trials: int
    confidence: float = 0.95

    def __post_init__(self):
        if not 0 <= self.events <= self.trials:
            raise ValueError("need 0 <= events <= trials")

    @property
    def point(self) -> float:
        return self.events / self.trials if self.trials else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return clopper_pearson(self.events, self.trials, self.confidence)

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {"events": self.events, "trials": self.trials, "point": self.point, "ci_low": lo, "ci_high": hi}


@dataclass(frozen=True)
class StoppingRule:
    """Stop once ``target_events`` events are seen, or after ``max_trials``.

    ``target_events=None`` runs exactly ``max_trials`` trials.
    """

    target_events: int | None = 100
    max_trials: int = 10 ** 8

    def __post_init__(self):
        if self.target_events is not None and self.target_events < 1:
            raise ValueError("target_events must be >= 1")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")

    @classmethod
    def fixed(cls, trials: int) -> StoppingRule:
        return cls(None, trials)


def iter_chunks(fn: Callable, items: Iterable, workers: int = 1) -> Iterator:
    """Yield ``fn(item)`` in input order, evaluating up to ``workers`` items concurrently."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1:
        for item in items:
            yield fn(item)
        return
    pool = ThreadPoolExecutor(workers)
    pending = []
    try:
        it = iter(items)
        for item in it:
            pending.append(pool.submit(fn, item))
            if len(pending) >= 2 * workers:
                break
        while pending:
            head = pending.pop(0)
            nxt = next(it, None)
            if nxt is not None:
                pending.append(pool.submit(fn, nxt))
            yield head.result()
    finally:
        pool.shutdown(wait=True, cancel_futures=True)


def map_chunks(fn: Callable, items: Iterable, workers: int = 1) -> list:
    return list(iter_chunks(fn, items, workers))


def run_trials(chunk_fn: Callable[[int, int], np.ndarray], rule: StoppingRule, workers: int = 1,
               chunk: int = DEFAULT_CHUNK) -> tuple[int, np.ndarray]:
    """Drive a campaign of per-trial flag rows.

    ``chunk_fn(lo, hi)`` returns an integer array of shape ``(hi - lo, m)``
    for trials ``lo..hi-1``; column 0 is the stopping event. Counting stops
    with the trial that reaches the target. Returns (trials, column sums).
    """
    bounds = ((lo, min(lo + chunk, rule.max_trials)) for lo in range(0, rule.max_trials, chunk))
    trials = 0
    totals = None
    for flags in iter_chunks(lambda b: chunk_fn(*b), bounds, workers):
        flags = np.asarray(flags, dtype=np.int64)
        if totals is None:
            totals = np.zeros(flags.shape[1], np.int64)
        if rule.target_events is not None:
            cum = totals[0] + np.cumsum(flags[:, 0])
            hit = np.flatnonzero(cum >= rule.target_events)
            if hit.size:
                flags = flags[: hit[0] + 1]
                totals += flags.sum(axis=0)
                trials += flags.shape[0]
                break
        totals += flags.sum(axis=0)
        trials += flags.shape[0]
    return trials, totals


def _assert_codewords(code: LinearCode, hard: np.ndarray, converged: np.ndarray):
    if converged.any():
        s = (hard[converged].astype(np.int64) @ code.h_dense.T.astype(np.int64)) & 1
        if s.any():
            raise AssertionError("decoder reported convergence to a non-codeword")


# ---- codeword error rate ---------------------------------------------------------


@dataclass(frozen=True)
class CerEstimate:
    """Codeword error rate split into detected (non-convergence) and undetected parts."""

    trials: int
    detected: int
    undetected: int

    @property
    def cer(self) -> Estimate:
        return Estimate(self.detected + self.undetected, self.trials)

    @property
    def cer_star(self) -> Estimate:
        return Estimate(self.detected, self.trials)

    @property
    def ucer(self) -> Estimate:
        return Estimate(self.undetected, self.trials)


def _cer_chunk(code, decoder, params, seed, lo, hi):
    n, k = code.n, code.k
    info = np.empty((hi - lo, k), np.uint8)
    noise = np.empty((hi - lo, n))
    for row, i in enumerate(range(lo, hi)):
        gen = RngStream(seed, i, STREAM_CODEWORD).generator()
        info[row] = gen.integers(0, 2, k, dtype=np.uint8)
        noise[row] = gen.standard_normal(n)
    words = code.encode_bits(info)
    flips = 1.0 - 2.0 * randomizer_stream(n)
    on_air = 1.0 - 2.0 * (words ^ randomizer_stream(n)).astype(np.float64)
    llr = params.llr_scale * (on_air + params.sigma * noise) * flips
    conv, _, hard = decode_batch(code, llr, decoder)
    _assert_codewords(code, hard, conv)
    detected = ~conv
    undetected = conv & (hard != words).any(axis=1)
    return np.stack([detected | undetected, detected, undetected], axis=1)


def estimate_cer(code: LinearCode, decoder: DecoderConfig, params: ChannelParams,
                 rule: StoppingRule = StoppingRule(), seed: int = 0, workers: int = 1,
                 chunk: int = DEFAULT_CHUNK) -> CerEstimate:
    """Monte Carlo CER over random infowords sent through randomizer, channel and de-randomizer.

    Stops on the total number of codeword errors (detected plus undetected).
    """
    trials, (_, det, und) = run_trials(lambda lo, hi: _cer_chunk(code, decoder, params, seed, lo, hi),
                                       rule, workers, chunk)
    return CerEstimate(trials, int(det), int(und))


# ---- tail sequence not acknowledged ---------------------------------------------------


def _pnat_chunk(code, decoder, params, x, flips, seed, lo, hi):
    noise = np.stack([RngStream(seed, i, STREAM_TAIL).generator().standard_normal(code.n)
                      for i in range(lo, hi)])
    llr = params.llr_scale * (x + params.sigma * noise) * flips
    conv, _, hard = decode_batch(code, llr, decoder)
    _assert_codewords(code, hard, conv)
    return conv[:, None]


def estimate_pnat(code: LinearCode, decoder: DecoderConfig, params: ChannelParams,
                  ts_mode: TsMode | str = TsMode.RANDOMIZED, rule: StoppingRule = StoppingRule(),
                  seed: int = 0, workers: int = 1, decoder_input: BitWord | None = None,
                  chunk: int = DEFAULT_CHUNK) -> Estimate:
    """Probability that the decoder converges on the noisy tail block.

    The tail for ``ts_mode`` is sent as-is and de-randomized in the LLR
    domain, so the decoder sees noisy t' (randomized) or noisy t
    (derandomized). ``decoder_input`` replaces that noiseless decoder-side
    word. Trial i uses the same noise in every mode, so campaigns that
    differ only in ``ts_mode`` are paired.
    """
    flips = 1.0 - 2.0 * randomizer_stream(code.n)
    if decoder_input is not None:
        if decoder_input.length != code.n:
            raise ValueError("decoder_input length does not match the code")
        on_air = decoder_input.bits() ^ randomizer_stream(code.n)
    else:
        ts_mode = TsMode(ts_mode)
        word = tail_on_air(ts_mode)
        if word is None:
            raise ValueError("P_nat needs a tail sequence")
        if word.length != code.n:
            raise ValueError("tail sequence length does not match the code")
        on_air = word.bits()
    x = 1.0 - 2.0 * on_air.astype(np.float64)
    trials, (succ,) = run_trials(lambda lo, hi: _pnat_chunk(code, decoder, params, x, flips, seed, lo, hi),
                                 rule, workers, chunk)
    return Estimate(int(succ), trials)


# ---- start sequence Monte Carlo ---------------------------------------------------


def simulate_start_detection(cfg: StartDetectConfig, ebn0_db: float, trials: int, seed: int = 0,
                             chunk: int = 1 << 16) -> Estimate:
    """Missed-detection rate of the hard correlator on noisy uncoded start sequences."""
    if cfg.length != START_SEQUENCE.length:
        raise ValueError("start sequence length mismatch")
    sigma = ChannelParams(ebn0_db, rate=1.0).sigma
    x = 1.0 - 2.0 * START_SEQUENCE.bits().astype(np.float64)
    ref = START_SEQUENCE.bits().astype(bool)
    missed = 0
    for c, lo in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - lo)
        gen = RngStream(seed, c, STREAM_CLTU).generator()
        y = x + sigma * gen.standard_normal((m, cfg.length))
        dist = ((y < 0) != ref).sum(axis=1)
        missed += int((dist > cfg.threshold).sum())
    return Estimate(missed, trials)


# ---- combined report --------------------------------------------------------------------

REPORT_COLUMNS = (
    "ebn0_db", "p_md", "cer", "cer_star", "ucer", "cer_trials", "p_ldpc",
    "p_nat", "p_nat_events", "p_nat_trials", "p_tcrej",
)


@dataclass
class RejectionReport:
    metadata: dict
    rows: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "columns": list(REPORT_COLUMNS),
                "metadata": self.metadata, "rows": self.rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(row[c]) for c in REPORT_COLUMNS])
        return buf.getvalue()


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def run_tc_rejection(code_name: str, decoder: DecoderConfig, ebn0_list, n_codewords: int = 1,
                     ts_mode: TsMode | str = TsMode.RANDOMIZED, rule: StoppingRule = StoppingRule(),
                     seed: int = 0, start: StartDetectConfig = StartDetectConfig(),
                     workers: int = 1) -> RejectionReport:
    """Full rejection breakdown per Eb/N0: analytic start miss, simulated CER and tail miss."""
    code = make_code(code_name)
    ts_mode = TsMode(ts_mode)
    if n_codewords < 1:
        raise ValueError("n_codewords must be >= 1")
    meta = {"code": code_name, "algorithm": decoder.algorithm, "max_iterations": decoder.max_iterations,
            "normalization_factor": decoder.normalization_factor,
            "llr_clip_magnitude": decoder.llr_clip_magnitude,
            "check_iteration_zero": decoder.check_iteration_zero,
            "ts_mode": ts_mode.value, "n_codewords": n_codewords, "seed": seed,
            "start_length": start.length, "start_threshold": start.threshold,
            "stopping_rule": asdict(rule)}
    report = RejectionReport(meta)
    for e in ebn0_list:
        params = ChannelParams(float(e), code.rate)
        p_md = p_md_analytic(start.length, start.threshold, float(e))
        cer = estimate_cer(code, decoder, params, rule, seed, workers)
        p_ldpc = p_ldpc_from_cer(cer.cer_star.point, n_codewords)
        if ts_mode is TsMode.NONE:
            pnat = Estimate(0, 0)
        else:
            pnat = estimate_pnat(code, decoder, params, ts_mode, rule, seed, workers)
        report.rows.append({
            "ebn0_db": float(e), "p_md": p_md,
            "cer": cer.cer.point, "cer_star": cer.cer_star.point, "ucer": cer.ucer.point,
            "cer_trials": cer.trials, "p_ldpc": p_ldpc,
            "p_nat": pnat.point, "p_nat_events": pnat.events, "p_nat_trials": pnat.trials,
            "p_tcrej": combine_tc_rejection(p_md, p_ldpc, pnat.point),
        })
    return report
