"""Flooding belief-propagation decoders (LLR-SPA, MSA, NMSA) and an exhaustive ML oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

from .codes import LinearCode, all_codewords
from .gf2 import BitWord

DEFAULT_CLIP = 30.0
# keeps 2*atanh finite: |c2v| <= ~28.3
_TANH_PRODUCT_MAX = 1.0 - 1e-12

_ALGO_SPA = 0
_ALGO_MINSUM = 1

ALGORITHMS = ("llr-spa", "msa", "nmsa")
ALGORITHM_ALIASES = {"spa": "llr-spa", "llr-spa": "llr-spa", "msa": "msa", "nmsa": "nmsa"}


class ErrorClass(str, Enum):
    CORRECT = "correct"
    UNDETECTED = "undetected"
    DETECTED = "detected"


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder choice and limits.

    ``normalization_factor`` scales check-node outputs for NMSA only.
    ``llr_clip_magnitude`` bounds channel LLRs and variable-node messages;
    ``None`` disables clipping.
    """

    algorithm: str = "llr-spa"
    max_iterations: int = 100
    normalization_factor: float = 0.8
    llr_clip_magnitude: float | None = DEFAULT_CLIP
    check_iteration_zero: bool = True

    def __post_init__(self):
        algo = ALGORITHM_ALIASES.get(self.algorithm)
        if algo is None:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        object.__setattr__(self, "algorithm", algo)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.normalization_factor <= 1:
            raise ValueError("normalization_factor must lie in (0, 1]")
        if self.llr_clip_magnitude is not None and not self.llr_clip_magnitude > 0:
            raise ValueError("llr_clip_magnitude must be positive")

    @property
    def _kernel_args(self) -> tuple[int, float, int, float, bool]:
        algo = _ALGO_SPA if self.algorithm == "llr-spa" else _ALGO_MINSUM
        alpha = self.normalization_factor if self.algorithm == "nmsa" else 1.0
        clip = math.inf if self.llr_clip_magnitude is None else float(self.llr_clip_magnitude)
        return algo, alpha, self.max_iterations, clip, self.check_iteration_zero

    @property
    def label(self) -> str:
        if self.algorithm == "nmsa":
            return f"nmsa({self.normalization_factor:g})/{self.max_iterations}"
        return f"{self.algorithm}/{self.max_iterations}"


@dataclass(frozen=True)
class DecodeOutcome:
    converged: bool
    iterations_used: int
    hard_word: BitWord
    error_class: ErrorClass | None = None


# Lockstep batch kernels. Message arrays are (edges, width): the trial axis is
# contiguous so the per-edge loops vectorize. Edges are numbered check-major.


@numba.njit(cache=True, nogil=True)
def _spa_check_ratio(expv, chk_ptr, ratio):
    """exp(v2c) -> (1 + p) / (1 - p), p = product of tanh(v2c/2) over the other edges.

    ``expv`` is overwritten with the tanh values.
    """
    width = expv.shape[1]
    acc = np.empty(width)
    for c in range(chk_ptr.size - 1):
        e0 = chk_ptr[c]
        e1 = chk_ptr[c + 1]
        acc[:] = 1.0
        for e in range(e0, e1):
            for w in range(width):
                t = (expv[e, w] - 1.0) / (expv[e, w] + 1.0)
                expv[e, w] = t
                ratio[e, w] = acc[w]
                acc[w] *= t
        acc[:] = 1.0
        for e in range(e1 - 1, e0 - 1, -1):
            for w in range(width):
                p = ratio[e, w] * acc[w]
                acc[w] *= expv[e, w]
                p = min(max(p, -_TANH_PRODUCT_MAX), _TANH_PRODUCT_MAX)
                ratio[e, w] = (1.0 + p) / (1.0 - p)


@numba.njit(cache=True, nogil=True)
def _minsum_check(v2c, chk_ptr, alpha, c2v):
    width = v2c.shape[1]
    min1 = np.empty(width)
    min2 = np.empty(width)
    imin = np.empty(width, np.int64)
    sgn = np.empty(width)
    for c in range(chk_ptr.size - 1):
        e0 = chk_ptr[c]
        e1 = chk_ptr[c + 1]
        min1[:] = np.inf
        min2[:] = np.inf
        imin[:] = -1
        sgn[:] = 1.0
        for e in range(e0, e1):
            for w in range(width):
                x = v2c[e, w]
                m = abs(x)
                sgn[w] = -sgn[w] if x < 0.0 else sgn[w]
                lower = m < min1[w]
                min2[w] = min(min2[w], max(min1[w], m))
                imin[w] = e if lower else imin[w]
                min1[w] = min(min1[w], m)
        for e in range(e0, e1):
            for w in range(width):
                x = v2c[e, w]
                mag = min2[w] if e == imin[w] else min1[w]
                s = -sgn[w] if x < 0.0 else sgn[w]
                c2v[e, w] = alpha * s * mag


@numba.njit(cache=True, nogil=True)
def _variable_update(ch, c2v, var_ptr, var_edges, clip, v2c, hard):
    n, width = ch.shape
    total = np.empty(width)
    for v in range(n):
        total[:] = ch[v]
        for k in range(var_ptr[v], var_ptr[v + 1]):
            e = var_edges[k]
            for w in range(width):
                total[w] += c2v[e, w]
        for k in range(var_ptr[v], var_ptr[v + 1]):
            e = var_edges[k]
            for w in range(width):
                v2c[e, w] = min(max(total[w] - c2v[e, w], -clip), clip)
        for w in range(width):
            hard[v, w] = 1 if total[w] < 0.0 else 0


@numba.njit(cache=True, nogil=True)
def _syndrome_zero(hard, chk_ptr, edge_var, ok):
    width = hard.shape[1]
    ok[:] = True
    parity = np.empty(width, np.uint8)
    for c in range(chk_ptr.size - 1):
        parity[:] = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            v = edge_var[e]
            for w in range(width):
                parity[w] ^= hard[v, w]
        for w in range(width):
            ok[w] = ok[w] and parity[w] == 0


@numba.njit(cache=True, nogil=True)
def _init_messages(ch, edge_var, v2c, hard):
    n, width = ch.shape
    for e in range(edge_var.size):
        v2c[e, :] = ch[edge_var[e]]
    for v in range(n):
        for w in range(width):
            hard[v, w] = 1 if ch[v, w] < 0.0 else 0


# below this fraction of live columns the working set is compacted
_COMPACT_FRACTION = 0.75


def decode_batch(code: LinearCode, llrs: np.ndarray, cfg: DecoderConfig):
    """Decode a ``(batch, n)`` array of channel LLRs.

    Returns ``(converged, iterations_used, hard_words)`` arrays. Each row is
    decoded independently: its result does not depend on the other rows.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 2 or llrs.shape[1] != code.n:
        raise ValueError(f"expected LLRs of shape (batch, {code.n}), got {llrs.shape}")
    if not np.isfinite(llrs).all():
        raise ValueError("LLRs must be finite")
    algo, alpha, max_iter, clip, check_zero = cfg._kernel_args
    g = code.graph
    batch = llrs.shape[0]
    n_edges = g.edge_var.size

    converged = np.zeros(batch, bool)
    iterations = np.full(batch, max_iter, np.int32)
    hard_out = np.zeros((batch, code.n), np.uint8)
    if batch == 0:
        return converged, iterations, hard_out

    ch = np.ascontiguousarray(np.clip(llrs, -clip, clip).T)
    cols = np.arange(batch)  # original row of each working column
    v2c = np.empty((n_edges, batch))
    c2v = np.empty((n_edges, batch))
    scratch = np.empty((n_edges, batch))
    hard = np.empty((code.n, batch), np.uint8)
    ok = np.empty(batch, bool)
    live = np.ones(batch, bool)  # not yet converged, among working columns

    _init_messages(ch, g.edge_var, v2c, hard)
    if check_zero:
        _syndrome_zero(hard, g.chk_ptr, g.edge_var, ok)
        done = np.flatnonzero(ok)
        converged[done] = True
        iterations[done] = 0
        hard_out[done] = hard[:, done].T
        live &= ~ok

    for it in range(1, max_iter + 1):
        n_live = int(live.sum())
        if n_live == 0:
            break
        if n_live < _COMPACT_FRACTION * cols.size:
            keep = np.flatnonzero(live)
            cols = cols[keep]
            ch = np.ascontiguousarray(ch[:, keep])
            v2c = np.ascontiguousarray(v2c[:, keep])
            c2v = np.empty_like(v2c)
            scratch = np.empty_like(v2c)
            hard = np.empty((code.n, keep.size), np.uint8)
            ok = np.empty(keep.size, bool)
            live = np.ones(keep.size, bool)
        if algo == _ALGO_SPA:
            np.exp(v2c, out=scratch)
            _spa_check_ratio(scratch, g.chk_ptr, c2v)
            np.log(c2v, out=c2v)
        else:
            _minsum_check(v2c, g.chk_ptr, alpha, c2v)
        _variable_update(ch, c2v, g.var_ptr, g.var_edges, clip, v2c, hard)
        _syndrome_zero(hard, g.chk_ptr, g.edge_var, ok)
        newly = ok & live
        if newly.any():
            idx = np.flatnonzero(newly)
            rows = cols[idx]
            converged[rows] = True
            iterations[rows] = it
            hard_out[rows] = hard[:, idx].T
            live &= ~newly

    # rows that never converged report their final hard decision
    rest = np.flatnonzero(live)
    if rest.size:
        hard_out[cols[rest]] = hard[:, rest].T
    return converged, iterations, hard_out


def classify(converged: bool, hard: np.ndarray, reference: np.ndarray | None) -> ErrorClass | None:
    if reference is None:
        return None
    if not converged:
        return ErrorClass.DETECTED
    return ErrorClass.CORRECT if np.array_equal(hard, reference) else ErrorClass.UNDETECTED


def decode(code: LinearCode, llrs, cfg: DecoderConfig, reference: BitWord | None = None) -> DecodeOutcome:
    """Decode one word; ``reference`` (the transmitted codeword) enables error classification."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got shape {llrs.shape}")
    conv, iters, hard = decode_batch(code, llrs[None, :], cfg)
    ref = None if reference is None else reference.bits()
    return DecodeOutcome(bool(conv[0]), int(iters[0]), BitWord.from_bits(hard[0]),
                         classify(bool(conv[0]), hard[0], ref))


ML_MAX_K = 20


def exhaustive_ml_decode(code: LinearCode, received) -> BitWord:
    """Codeword whose BPSK image is closest in Euclidean distance to ``received``.

    Ties go to the lowest index in infoword enumeration order.
    """
    if code.k > ML_MAX_K:
        raise ValueError(f"exhaustive ML needs k <= {ML_MAX_K}, code has k={code.k}")
    y = np.asarray(received, dtype=np.float64)
    if y.shape != (code.n,):
        raise ValueError(f"expected {code.n} received values, got shape {y.shape}")
    words = all_codewords(code)
    # |y - x|^2 = |y|^2 + n - 2 <y, x>; maximize the correlation
    corr = (1.0 - 2.0 * words) @ y
    return BitWord.from_bits(words[int(np.argmax(corr))])
