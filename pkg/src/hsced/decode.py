"""Decoders.

Three families share this module:

* ``msa_decode``: flooding belief propagation with the normalized
  min-sum check update (scale factor alpha), early exit on a satisfied
  syndrome, and saturating LLR arithmetic.
* ``ensemble_decode``: runs min-sum on every member of a subcode
  ensemble in parallel (the base graph plus each augmented leaf graph),
  collects the members whose hard decisions are valid codewords of the
  base code, and returns the collected candidate with the highest
  correlation to the channel LLRs (the maximum-likelihood choice within
  the list under BPSK/AWGN).
* ``scl_decode``: successive-cancellation list decoding in the LLR
  domain with the min-sum approximation of the f-operation and the
  sign-mismatch path-metric penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gf2 import BitMatrix, BitVector
from .polar import PolarCode

DEFAULT_ALPHA = 0.75
DEFAULT_MAX_ITER = 50
LLR_CLAMP = 30.0


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one min-sum run.

    ``valid`` reports the syndrome of the decoder's own parity-check
    matrix; ``base_valid`` the syndrome of the designated stop-row
    prefix (equal to ``valid`` when no prefix was designated).
    """

    word: BitVector
    iterations: int
    valid: bool
    base_valid: bool


@lru_cache(maxsize=512)
def _edge_graph(h: BitMatrix):
    """Flattened Tanner-graph edge list in row-major order."""
    bits = h.to_array()
    r, c = np.nonzero(bits)
    order = np.lexsort((c, r))
    er = r[order].astype(np.int64)
    ec = c[order].astype(np.int64)
    row_starts = np.searchsorted(er, np.arange(h.rows)).astype(np.int64)
    counts = np.diff(np.append(row_starts, er.size))
    if (counts == 0).any():
        raise ValueError("parity-check matrix has an empty row")
    eidx = np.arange(er.size, dtype=np.int64)
    for a in (er, ec, row_starts, eidx):
        a.setflags(write=False)
    return er, ec, row_starts, eidx


def msa_decode(
    h: BitMatrix,
    llr,
    max_iter: int = DEFAULT_MAX_ITER,
    alpha: float = DEFAULT_ALPHA,
    *,
    llr_max: float = LLR_CLAMP,
    stop_rows: int | None = None,
) -> DecodeOutcome:
    """Normalized min-sum flooding BP on the Tanner graph of ``h``.

    Stops at the first iteration whose hard decision clears the first
    ``stop_rows`` checks (all rows when None). Messages and totals
    saturate at +-llr_max. Hard decision maps LLR < 0 to bit 1.
    """
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (h.cols,):
        raise ValueError("LLR length must equal the number of columns")
    if not np.isfinite(llr).all():
        raise ValueError("LLRs must be finite")
    if max_iter < 1:
        raise ValueError("need at least one iteration")
    n_stop = h.rows if stop_rows is None else int(stop_rows)
    if not 0 < n_stop <= h.rows:
        raise ValueError("stop_rows out of range")

    er, ec, row_starts, eidx = _edge_graph(h)
    n_edges = er.size
    llr = np.clip(llr, -llr_max, llr_max)
    c2v = np.zeros(n_edges)
    tot = llr.copy()
    hard = (tot < 0).astype(np.uint8)
    syn_rows = np.zeros(h.rows, dtype=np.int64)
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        v2c = np.clip(tot[ec] - c2v, -llr_max, llr_max)
        neg = v2c < 0
        mags = np.abs(v2c)
        parity = np.add.reduceat(neg.astype(np.int64), row_starts) & 1
        min1 = np.minimum.reduceat(mags, row_starts)
        # index of each row's first minimum, then the second minimum
        pos = np.where(mags == min1[er], eidx, n_edges)
        first = np.minimum.reduceat(pos, row_starts)
        tmp = mags.copy()
        tmp[first] = np.inf
        min2 = np.minimum.reduceat(tmp, row_starts)
        ex_min = np.where(eidx == first[er], min2[er], min1[er])
        sign = 1.0 - 2.0 * (parity[er] ^ neg)
        c2v = alpha * sign * ex_min
        tot = llr.copy()
        np.add.at(tot, ec, c2v)
        tot = np.clip(tot, -llr_max, llr_max)
        hard = (tot < 0).astype(np.uint8)
        syn_rows = np.add.reduceat(hard[ec].astype(np.int64), row_starts) & 1
        if not syn_rows[:n_stop].any():
            break
    word = BitVector.from_array(hard)
    base_valid = not syn_rows[:n_stop].any()
    valid = base_valid and not syn_rows[n_stop:].any()
    return DecodeOutcome(
        word=word, iterations=iterations, valid=valid, base_valid=base_valid
    )


def correlation(word: BitVector, llr) -> float:
    """BPSK correlation sum((1-2x) * llr); the in-list ML statistic."""
    signs = 1.0 - 2.0 * word.to_array().astype(np.float64)
    return float(signs @ np.asarray(llr, dtype=np.float64))


@dataclass(frozen=True)
class EnsembleDecodeResult:
    """Outputs of all ensemble members plus the selected word.

    ``outcomes[0]`` is the base decoder; the rest follow the ensemble's
    leaf order. ``chosen`` indexes into ``outcomes`` (None when no
    member produced a valid base codeword and the base hard decision
    was returned as a fallback).
    """

    word: BitVector
    chosen: int | None
    outcomes: tuple[DecodeOutcome, ...]

    @property
    def iterations(self) -> np.ndarray:
        return np.array([o.iterations for o in self.outcomes], dtype=np.int64)


def ensemble_decode_detail(
    ensemble,
    llr,
    max_iter: int = DEFAULT_MAX_ITER,
    alpha: float = DEFAULT_ALPHA,
    *,
    llr_max: float = LLR_CLAMP,
) -> EnsembleDecodeResult:
    """Decode with every member of ``ensemble``; pick ML-in-the-list.

    Members whose hard decision satisfies the base parity checks enter
    the candidate list (augmented members early-stop on that same
    condition, so constituents never spin on their extra checks once a
    base codeword is reached). The winner is the candidate with the
    largest LLR correlation; ties keep the lowest member index. With an
    empty list the base decoder's hard decision is returned.
    """
    base = ensemble.base
    llr = np.clip(np.asarray(llr, dtype=np.float64), -llr_max, llr_max)
    members = ensemble.members()
    outcomes = [msa_decode(base, llr, max_iter, alpha, llr_max=llr_max)]
    for member in members[1:]:
        outcomes.append(
            msa_decode(
                member, llr, max_iter, alpha, llr_max=llr_max, stop_rows=base.rows
            )
        )
    best = None
    best_corr = -np.inf
    for i, out in enumerate(outcomes):
        if not out.base_valid:
            continue
        corr = correlation(out.word, llr)
        if corr > best_corr:
            best, best_corr = i, corr
    if best is None:
        return EnsembleDecodeResult(
            word=outcomes[0].word, chosen=None, outcomes=tuple(outcomes)
        )
    return EnsembleDecodeResult(
        word=outcomes[best].word, chosen=best, outcomes=tuple(outcomes)
    )


def ensemble_decode(ensemble, llr, max_iter=DEFAULT_MAX_ITER, alpha=DEFAULT_ALPHA):
    return ensemble_decode_detail(ensemble, llr, max_iter, alpha).word


def _refresh_llrs(llr_mem, bit_mem, i, n):
    """Bring the depth-n LLR up to date for leaf index i."""
    if i == 0:
        start = 1
    else:
        t = (i & -i).bit_length() - 1  # trailing zeros
        d0 = n - t
        src = llr_mem[d0 - 1]
        half = src.shape[1] // 2
        a, b = src[:, :half], src[:, half:]
        llr_mem[d0] = b + (1.0 - 2.0 * bit_mem[d0]) * a
        start = d0 + 1
    for d in range(start, n + 1):
        src = llr_mem[d - 1]
        half = src.shape[1] // 2
        a, b = src[:, :half], src[:, half:]
        llr_mem[d] = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def _push_bits(bit_mem, bit, i, n):
    """Fold a decided leaf bit into the partial-sum memories."""
    seg = bit[:, None]
    d, j = n, i
    while j % 2 == 1:
        seg = np.hstack([bit_mem[d] ^ seg, seg])
        d -= 1
        j //= 2
    bit_mem[d] = seg


def scl_decode(
    code: PolarCode,
    llr,
    list_size: int = 32,
    *,
    llr_max: float = LLR_CLAMP,
) -> BitVector:
    """Successive-cancellation list decoding; returns the best codeword.

    LLR-domain formulation with the min-sum f-operation. The path
    metric accumulates |LLR| whenever a decision contradicts the sign
    of the decision LLR; the path with the smallest metric wins (ties
    keep the earliest-forked path).
    """
    if list_size < 1 or list_size & (list_size - 1):
        raise ValueError("list size must be a power of two")
    n, n_block = code.n, code.block_length
    llr = np.asarray(llr, dtype=np.float64)
    if llr.shape != (n_block,):
        raise ValueError("LLR length must equal the block length")
    llr = np.clip(llr, -llr_max, llr_max)
    frozen = np.zeros(n_block, dtype=bool)
    frozen[list(code.frozen)] = True

    llr_mem = [np.zeros((1, n_block >> d)) for d in range(n + 1)]
    bit_mem = [np.zeros((1, n_block >> d), dtype=np.uint8) for d in range(n + 1)]
    llr_mem[0][0] = llr
    pm = np.zeros(1)
    for i in range(n_block):
        _refresh_llrs(llr_mem, bit_mem, i, n)
        lam = llr_mem[n][:, 0]
        if frozen[i]:
            pm = pm + np.where(lam < 0.0, -lam, 0.0)
            bit = np.zeros(pm.size, dtype=np.uint8)
        else:
            pm_fork = np.concatenate(
                [pm + np.where(lam < 0.0, -lam, 0.0), pm + np.where(lam > 0.0, lam, 0.0)]
            )
            paths = pm.size
            if pm_fork.size > list_size:
                keep = np.lexsort((np.arange(pm_fork.size), pm_fork))[:list_size]
            else:
                keep = np.arange(pm_fork.size)
            src = keep % paths
            bit = (keep // paths).astype(np.uint8)
            pm = pm_fork[keep]
            for d in range(n + 1):
                llr_mem[d] = llr_mem[d][src]
                bit_mem[d] = bit_mem[d][src]
        _push_bits(bit_mem, bit, i, n)
    best = int(np.argmin(pm))
    return BitVector.from_array(bit_mem[0][best])
