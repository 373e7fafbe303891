"""Low-weight and nearest-codeword search (Stern ISD) and decoder-convergence histograms."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numba
import numpy as np

from .channel import STREAM_HISTOGRAM, ChannelParams, RngStream
from .cltu import TsMode, tail_at_decoder
from .codes import LinearCode
from .decoders import DecoderConfig, decode_batch
from .gf2 import BitWord

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class IsdEffort:
    """Stern search parameters.

    Each iteration draws a random information set, splits it in two halves,
    enumerates all subsets of size ``<= p`` per half and matches their
    partial syndromes on an ``ell``-bit window. Solutions of weight at most
    ``max_distance`` are kept.
    """

    iterations: int = 2000
    p: int = 2
    ell: int = 6
    max_distance: int = 16
    batch_size: int = 250

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 1 <= self.p <= 4:
            raise ValueError("p must lie in [1, 4]")
        if not 1 <= self.ell <= 20:
            raise ValueError("ell must lie in [1, 20]")
        if self.max_distance < 1:
            raise ValueError("max_distance must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "p": self.p, "ell": self.ell,
                "max_distance": self.max_distance, "batch_size": self.batch_size}


@dataclass
class DistanceReport:
    """Codewords found near ``target``; counts are lower bounds on the true census."""

    target: BitWord
    codewords: dict[int, list[BitWord]] = field(default_factory=dict)
    effort: IsdEffort = field(default_factory=IsdEffort)
    seed: int = 0

    @property
    def best_distance(self) -> float:
        return min(self.codewords) if self.codewords else math.inf

    @property
    def census(self) -> dict[int, int]:
        return {d: len(ws) for d, ws in sorted(self.codewords.items())}

    def to_dict(self) -> dict:
        best = self.best_distance
        return {
            "schema_version": SCHEMA_VERSION,
            "target": self.target.to_hex(),
            "best_distance": None if best == math.inf else int(best),
            "census": {str(d): c for d, c in self.census.items()},
            "effort": self.effort.to_dict(),
            "seed": self.seed,
            "codewords": {str(d): [w.to_hex() for w in ws] for d, ws in sorted(self.codewords.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["distance", "codeword"])
        for d, words in sorted(self.codewords.items()):
            for word in words:
                w.writerow([d, word.to_hex()])
        return buf.getvalue()


# ---- Stern kernel --------------------------------------------------------
# Parity-check rows are packed little-endian into uint64 words (column j is
# bit j % 64 of word j // 64); column n carries the syndrome. After
# elimination, the r-bit columns of the information set are repacked with
# row i in bit i % 64 of word i // 64.


@numba.njit(cache=True, inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@numba.njit(cache=True, nogil=True)
def _stern_batch(h_rows, n, r, seed, iterations, subsets_x, subsets_y, ell, wmax, out, out_weight):
    """Run ``iterations`` Stern iterations; returns (found, overflowed)."""
    np.random.seed(seed)
    n_words = h_rows.shape[1]
    r_words = (r + 63) // 64
    k = n - r
    kx = k // 2
    mask = np.uint64((1 << ell) - 1)
    n_buckets = 1 << ell
    cap = out.shape[0]
    found = 0

    a = np.empty_like(h_rows)
    is_piv = np.empty(n, np.bool_)
    pivcols = np.empty(r, np.int64)
    info = np.empty(k, np.int64)
    cols = np.zeros((k, r_words), np.uint64)
    synd = np.zeros(r_words, np.uint64)
    nx = subsets_x.shape[0]
    ny = subsets_y.shape[0]
    vx = np.zeros((nx, r_words), np.uint64)
    vy = np.zeros(r_words, np.uint64)
    wx = np.empty(nx, np.int64)
    keys = np.empty(nx, np.int64)
    start = np.empty(n_buckets + 1, np.int64)
    fill = np.empty(n_buckets, np.int64)
    order = np.empty(nx, np.int64)
    sw = n >> 6
    sb = np.uint64(n & 63)
    one = np.uint64(1)

    for _ in range(iterations):
        perm = np.random.permutation(n)
        a[:, :] = h_rows
        is_piv[:] = False
        row = 0
        for j in perm:
            if row == r:
                break
            w = j >> 6
            b = np.uint64(j & 63)
            piv = -1
            for i in range(row, r):
                if (a[i, w] >> b) & one:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != row:
                for q in range(n_words):
                    tmp = a[piv, q]
                    a[piv, q] = a[row, q]
                    a[row, q] = tmp
            for i in range(r):
                if i != row and (a[i, w] >> b) & one:
                    for q in range(n_words):
                        a[i, q] ^= a[row, q]
            pivcols[row] = j
            is_piv[j] = True
            row += 1
        if row < r:
            continue
        t = 0
        for j in perm:
            if not is_piv[j]:
                info[t] = j
                t += 1
        cols[:, :] = 0
        synd[:] = 0
        for i in range(r):
            iw = i >> 6
            ib = np.uint64(i & 63)
            for t in range(k):
                j = info[t]
                if (a[i, j >> 6] >> np.uint64(j & 63)) & one:
                    cols[t, iw] |= one << ib
            if (a[i, sw] >> sb) & one:
                synd[iw] |= one << ib

        # partial syndromes of the X half, bucketed by their ell-bit window
        start[:] = 0
        for s in range(nx):
            vx[s, :] = 0
            cnt = 0
            for q in range(subsets_x.shape[1]):
                idx = subsets_x[s, q]
                if idx < 0:
                    break
                cnt += 1
                for u in range(r_words):
                    vx[s, u] ^= cols[idx, u]
            wx[s] = cnt
            keys[s] = np.int64(vx[s, 0] & mask)
            start[keys[s] + 1] += 1
        for b2 in range(n_buckets):
            start[b2 + 1] += start[b2]
        fill[:] = start[:n_buckets]
        for s in range(nx):
            order[fill[keys[s]]] = s
            fill[keys[s]] += 1

        for s in range(ny):
            vy[:] = synd
            cnt_y = 0
            for q in range(subsets_y.shape[1]):
                idx = subsets_y[s, q]
                if idx < 0:
                    break
                cnt_y += 1
                for u in range(r_words):
                    vy[u] ^= cols[kx + idx, u]
            key = np.int64(vy[0] & mask)
            for m in range(start[key], start[key + 1]):
                sx = order[m]
                wt = wx[sx] + cnt_y
                if wt > wmax:
                    continue
                for u in range(r_words):
                    wt += np.int64(_popcount(vx[sx, u] ^ vy[u]))
                    if wt > wmax:
                        break
                if wt > wmax or wt == 0:
                    continue
                if found == cap:
                    return found, True
                out[found, :] = 0
                for i in range(r):
                    if ((vx[sx, i >> 6] ^ vy[i >> 6]) >> np.uint64(i & 63)) & one:
                        j = pivcols[i]
                        out[found, j >> 6] |= one << np.uint64(j & 63)
                for q in range(subsets_x.shape[1]):
                    idx = subsets_x[sx, q]
                    if idx < 0:
                        break
                    j = info[idx]
                    out[found, j >> 6] |= one << np.uint64(j & 63)
                for q in range(subsets_y.shape[1]):
                    idx = subsets_y[s, q]
                    if idx < 0:
                        break
                    j = info[kx + idx]
                    out[found, j >> 6] |= one << np.uint64(j & 63)
                out_weight[found] = wt
                found += 1
    return found, False


def _subset_table(size: int, p: int) -> np.ndarray:
    rows = [c for w in range(p + 1) for c in combinations(range(size), w)]
    table = np.full((len(rows), max(p, 1)), -1, np.int64)
    for i, c in enumerate(rows):
        table[i, : len(c)] = c
    return table


def _pack_le(bits: np.ndarray, n_words: int) -> np.ndarray:
    """Pack 0/1 arrays (last axis) into little-endian uint64 words."""
    padded = np.zeros(bits.shape[:-1] + (n_words * 64,), np.uint8)
    padded[..., : bits.shape[-1]] = bits
    return np.packbits(padded, axis=-1, bitorder="little").view("<u8").astype(np.uint64)


def _unpack_le(words: np.ndarray, n: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, axis=-1, bitorder="little")[..., :n]


def _batch_seed(seed: int, batch: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(batch,)).generate_state(1)[0])


def nearest_codewords(code: LinearCode, target: BitWord, effort: IsdEffort = IsdEffort(),
                      seed: int = 0) -> DistanceReport:
    """Codewords within ``effort.max_distance`` of ``target`` found by Stern ISD.

    Searches for low-weight error patterns e with H e = H target, i.e. the
    light words of the coset target + C; each gives the codeword target + e.
    Iterations run in fixed batches seeded by (seed, batch index), so a
    larger iteration budget only ever adds codewords.
    """
    if target.length != code.n:
        raise ValueError(f"target length {target.length} != n={code.n}")
    n, r = code.n, code.r
    if effort.ell > r:
        raise ValueError("ell cannot exceed the number of parity checks")
    t_bits = target.bits()
    report = DistanceReport(target, {}, effort, seed)
    if code.is_codeword(t_bits):
        report.codewords[0] = [target]
    if effort.iterations == 0:
        return report

    h = code.h_dense
    synd = ((h.astype(np.int64) @ t_bits.astype(np.int64)) & 1).astype(np.uint8)
    n_words = (n + 1 + 63) // 64
    h_rows = _pack_le(np.concatenate([h, synd[:, None]], axis=1), n_words)
    k = n - r
    subsets_x = _subset_table(k // 2, effort.p)
    subsets_y = _subset_table(k - k // 2, effort.p)

    seen: set[bytes] = set()
    by_distance: dict[int, list[np.ndarray]] = {}
    cap = 4096
    done = 0
    batch = 0
    while done < effort.iterations:
        its = min(effort.batch_size, effort.iterations - done)
        bseed = _batch_seed(seed, batch)
        while True:
            out = np.zeros((cap, n_words), np.uint64)
            weights = np.zeros(cap, np.int64)
            found, overflow = _stern_batch(h_rows, n, r, bseed, its, subsets_x, subsets_y,
                                           effort.ell, effort.max_distance, out, weights)
            if not overflow:
                break
            cap *= 4
        errors = _unpack_le(out[:found], n)
        for e, wt in zip(errors, weights[:found]):
            word = e ^ t_bits
            key = np.packbits(word).tobytes()
            if key in seen:
                continue
            if not code.is_codeword(word):
                raise AssertionError("search produced a non-codeword")
            if int(e.sum()) != wt:
                raise AssertionError("search weight bookkeeping is inconsistent")
            seen.add(key)
            by_distance.setdefault(int(wt), []).append(word)
        done += its
        batch += 1

    for d, words in by_distance.items():
        words.sort(key=lambda w: np.packbits(w).tobytes())
        report.codewords.setdefault(d, []).extend(BitWord.from_bits(w) for w in words)
    report.codewords = dict(sorted(report.codewords.items()))
    return report


def code_min_weight_search(code: LinearCode, effort: IsdEffort = IsdEffort(), seed: int = 0) -> DistanceReport:
    """Light nonzero codewords: the zero-target search with the zero word excluded."""
    report = nearest_codewords(code, BitWord.zeros(code.n), effort, seed)
    report.codewords.pop(0, None)
    return report


# ---- convergence histograms ----------------------------------------------


@dataclass
class ConvergenceHistogram:
    """Distinct codewords the decoder converged to on the noisy tail sequence.

    ``codewords`` is the registry, indexed by first occurrence (Eb/N0 point
    order, then trial order). ``counts[i, j]`` is how often codeword i was
    reached at ``ebn0_db[j]``.
    """

    ts_mode: TsMode
    decoder: str
    ebn0_db: list[float]
    trials_per_point: int
    seed: int
    codewords: list[BitWord]
    counts: np.ndarray  # (len(codewords), len(ebn0_db))
    decoder_input: BitWord

    @property
    def total_trials(self) -> int:
        return self.trials_per_point * len(self.ebn0_db)

    @property
    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1) if self.codewords else np.zeros(0, np.int64)

    @property
    def successes(self) -> int:
        return int(self.counts.sum())

    @property
    def successes_per_point(self) -> np.ndarray:
        return self.counts.sum(axis=0) if self.codewords else np.zeros(len(self.ebn0_db), np.int64)

    def distances(self) -> list[int]:
        """Hamming distance of each registry codeword from the noiseless decoder input."""
        return [(w ^ self.decoder_input).weight for w in self.codewords]

    def top(self, count: int) -> list[tuple[int, BitWord, int]]:
        """(registry index, codeword, total count) for the ``count`` most frequent entries."""
        totals = self.totals
        idx = sorted(range(len(totals)), key=lambda i: (-totals[i], i))[:count]
        return [(i, self.codewords[i], int(totals[i])) for i in idx]

    def to_dict(self) -> dict:
        dist = self.distances()
        return {
            "schema_version": SCHEMA_VERSION,
            "ts_mode": self.ts_mode.value,
            "decoder": self.decoder,
            "ebn0_db": self.ebn0_db,
            "trials_per_point": self.trials_per_point,
            "total_trials": self.total_trials,
            "successes": self.successes,
            "seed": self.seed,
            "decoder_input": self.decoder_input.to_hex(),
            "codewords": [
                {"index": i, "codeword": w.to_hex(), "distance": dist[i],
                 "count": int(self.counts[i].sum()), "per_ebn0": [int(c) for c in self.counts[i]]}
                for i, w in enumerate(self.codewords)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "codeword", "distance", "count"] + [f"ebn0_{e:g}" for e in self.ebn0_db])
        for i, (word, d) in enumerate(zip(self.codewords, self.distances())):
            w.writerow([i, word.to_hex(), d, int(self.counts[i].sum())] + [int(c) for c in self.counts[i]])
        return buf.getvalue()


def _histogram_chunk(code, decoder, params, x, seed, lo, hi):
    noise = np.stack([RngStream(seed, i, STREAM_HISTOGRAM).generator().standard_normal(code.n)
                      for i in range(lo, hi)])
    llr = params.llr_scale * (x + params.sigma * noise)
    conv, _, hard = decode_batch(code, llr, decoder)
    return conv, hard


def convergence_histogram(code: LinearCode, decoder: DecoderConfig, ts_mode: TsMode | str,
                          ebn0_list, trials_per_point: int, seed: int = 0, workers: int = 1,
                          chunk: int = 2048) -> ConvergenceHistogram:
    """Decode ``trials_per_point`` noisy tail blocks per Eb/N0 and record where the decoder lands.

    Trial i at every Eb/N0 point reuses the same unit-variance noise draw,
    scaled to the point's sigma.
    """
    from .estimators import map_chunks

    if trials_per_point < 1:
        raise ValueError("trials_per_point must be >= 1")
    ts_mode = TsMode(ts_mode)
    word = tail_at_decoder(ts_mode)
    if word.length != code.n:
        raise ValueError("tail sequence length does not match the code")
    x = 1.0 - 2.0 * word.bits().astype(np.float64)
    ebn0 = [float(e) for e in ebn0_list]

    registry: dict[bytes, int] = {}
    words: list[BitWord] = []
    tallies: list[list[int]] = []
    for j, e in enumerate(ebn0):
        params = ChannelParams(e, code.rate)
        bounds = [(lo, min(lo + chunk, trials_per_point)) for lo in range(0, trials_per_point, chunk)]
        results = map_chunks(lambda b: _histogram_chunk(code, decoder, params, x, seed, *b), bounds, workers)
        for conv, hard in results:
            for row in hard[conv]:
                key = np.packbits(row).tobytes()
                idx = registry.get(key)
                if idx is None:
                    if not code.is_codeword(row):
                        raise AssertionError("decoder reported convergence to a non-codeword")
                    idx = registry[key] = len(words)
                    words.append(BitWord.from_bits(row))
                    tallies.append([0] * len(ebn0))
                tallies[idx][j] += 1
    counts = np.array(tallies, np.int64).reshape(len(words), len(ebn0))
    return ConvergenceHistogram(ts_mode, decoder.label, ebn0, trials_per_point, seed, words, counts, word)
