"""Structural analysis of Tanner graphs.

The graph of a parity-check matrix has one variable node per column and
one check node per row. Reported metrics: edge count, density, number of
length-4 cycles, and exact stopping-set counts by exhaustive subset
enumeration (a stopping set is a variable subset such that every check
touching it is touched at least twice).

Enumeration cost is C(cols, s); calls are rejected up front when that
exceeds the budget. With <= 64 rows the search runs as a compiled DFS on
uint64 check masks; otherwise a big-int Python fallback is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gf2 import BitMatrix

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

DEFAULT_BUDGET = 10**9


class EnumerationBudgetError(RuntimeError):
    """Raised when C(cols, s) exceeds the enumeration budget."""


@dataclass(frozen=True)
class GraphStats:
    """Summary of one Tanner graph."""

    rows: int
    cols: int
    edges: int
    density: float
    four_cycles: int
    stopping_sets: dict[int, int | None] = field(default_factory=dict)


def edge_count(m: BitMatrix) -> int:
    return m.ones_count()


def density(m: BitMatrix) -> float:
    return m.ones_count() / (m.rows * m.cols)


def count_4cycles(m: BitMatrix) -> int:
    """Number of length-4 cycles: sum over row pairs of C(overlap, 2)."""
    w = m.words
    total = 0
    for i in range(m.rows - 1):
        ov = np.bitwise_count(w[i + 1 :] & w[i]).sum(axis=1).astype(np.int64)
        total += int((ov * (ov - 1) // 2).sum())
    return total


if _HAVE_NUMBA:

    @njit(cache=True)
    def _count_ss_u64(masks, s):  # pragma: no cover - compiled
        n = masks.shape[0]
        count = 0
        suffix = np.zeros(n + 1, np.uint64)
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] | masks[i]
        idx = np.zeros(s, np.int64)
        onces = np.zeros(s + 1, np.uint64)
        twices = np.zeros(s + 1, np.uint64)
        d = 0
        nxt = 0
        while d >= 0:
            if d == s - 1:
                once = onces[d]
                defic = onces[d] & ~twices[d]
                for c in range(nxt, n):
                    mk = masks[c]
                    if (mk & ~once) == 0 and (defic & ~mk) == 0:
                        count += 1
                d -= 1
                if d >= 0:
                    nxt = idx[d] + 1
                continue
            if nxt > n - (s - d):
                d -= 1
                if d >= 0:
                    nxt = idx[d] + 1
                continue
            defic = onces[d] & ~twices[d]
            if (defic & ~suffix[nxt]) != np.uint64(0):
                # deficiency not coverable by any remaining column
                d -= 1
                if d >= 0:
                    nxt = idx[d] + 1
                continue
            mk = masks[nxt]
            idx[d] = nxt
            onces[d + 1] = onces[d] | mk
            twices[d + 1] = twices[d] | (onces[d] & mk)
            d += 1
            nxt = idx[d - 1] + 1
        return count


def _count_ss_py(masks: list[int], s: int) -> int:
    """Big-int mirror of the compiled DFS; any number of rows."""
    n = len(masks)
    count = 0
    suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] | masks[i]
    idx = [0] * s
    onces = [0] * (s + 1)
    twices = [0] * (s + 1)
    d = 0
    nxt = 0
    while d >= 0:
        if d == s - 1:
            once = onces[d]
            defic = onces[d] & ~twices[d]
            for c in range(nxt, n):
                mk = masks[c]
                if (mk & ~once) == 0 and (defic & ~mk) == 0:
                    count += 1
            d -= 1
            if d >= 0:
                nxt = idx[d] + 1
            continue
        if nxt > n - (s - d):
            d -= 1
            if d >= 0:
                nxt = idx[d] + 1
            continue
        defic = onces[d] & ~twices[d]
        if defic & ~suffix[nxt]:
            d -= 1
            if d >= 0:
                nxt = idx[d] + 1
            continue
        mk = masks[nxt]
        idx[d] = nxt
        onces[d + 1] = onces[d] | mk
        twices[d + 1] = twices[d] | (onces[d] & mk)
        d += 1
        nxt = idx[d - 1] + 1
    return count


def count_stopping_sets(m: BitMatrix, s: int, budget: int = DEFAULT_BUDGET) -> int:
    """Exact number of size-s stopping sets.

    Raises EnumerationBudgetError if C(cols, s) exceeds ``budget``.
    """
    if s < 1:
        raise ValueError("stopping-set size must be >= 1")
    if s > m.cols:
        return 0
    work = math.comb(m.cols, s)
    if work > budget:
        raise EnumerationBudgetError(
            f"C({m.cols},{s}) = {work} exceeds enumeration budget {budget}"
        )
    bits = m.to_array()
    if m.rows <= 64 and _HAVE_NUMBA:
        masks = np.zeros(m.cols, dtype=np.uint64)
        for r in range(m.rows):
            masks |= bits[r].astype(np.uint64) << np.uint64(r)
        return int(_count_ss_u64(masks, s))
    col_masks = [
        int.from_bytes(
            np.packbits(bits[:, c], bitorder="little").tobytes(), "little"
        )
        for c in range(m.cols)
    ]
    return _count_ss_py(col_masks, s)


def graph_stats(
    m: BitMatrix,
    ss_sizes=(),
    budget: int = DEFAULT_BUDGET,
    on_budget: str = "raise",
) -> GraphStats:
    """Full structural summary; ``on_budget="omit"`` records None instead
    of raising for sizes whose enumeration exceeds the budget."""
    if on_budget not in ("raise", "omit"):
        raise ValueError('on_budget must be "raise" or "omit"')
    ss: dict[int, int | None] = {}
    for s in ss_sizes:
        try:
            ss[int(s)] = count_stopping_sets(m, int(s), budget)
        except EnumerationBudgetError:
            if on_budget == "raise":
                raise
            ss[int(s)] = None
    return GraphStats(
        rows=m.rows,
        cols=m.cols,
        edges=edge_count(m),
        density=density(m),
        four_cycles=count_4cycles(m),
        stopping_sets=ss,
    )
