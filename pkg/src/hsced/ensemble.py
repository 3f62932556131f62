"""Subcode ensemble construction.

A subcode ensemble is a family of parity-check matrices, each the base
matrix plus one or more independent sparse rows, so each member checks a
subcode of the base code while the union of the member subcodes covers
it. Two constructions live here:

* ``build_ensemble``: the hierarchical ternary tree. Every node spawns
  three children by sampling 3w distinct columns, splitting them into
  disjoint supports a, b, c, and appending h1 = a+c, h2 = b+c,
  h3 = a+b. Since h3 = h1 xor h2, any base codeword rejected by two
  siblings is accepted by the third, which yields the linear covering
  property level by level.
* ``build_sced_ensemble``: a flat variant of the same covering triples.
  Anchor rows are chosen by a data-driven protocol (score candidate
  rows by how many collected min-sum failures they correct) instead of
  blind sampling, and all rows hang directly off the base matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import decode
from .gf2 import BitMatrix, BitVector, RowBasis
from .polar import PolarCode, polar_code, base_pcm
from .tanner import density

DEFAULT_MAX_RETRIES = 64


class RowSamplingError(RuntimeError):
    """Raised when rank-increasing rows cannot be sampled within the
    retry budget."""


def _support_weight(cols: int, p: float) -> int:
    w = round(cols * p / 2)
    if w < 1 or 3 * w > cols:
        raise ValueError(f"density target {p} infeasible for {cols} columns")
    return w


def sample_row_triplet(cols: int, p: float, rng) -> tuple[BitVector, BitVector, BitVector]:
    """One covering triple of sparse rows, each of weight 2w.

    Samples 3w distinct columns, splits them into disjoint thirds
    a, b, c and returns (a+c, b+c, a+b); the three rows XOR to zero.
    """
    w = _support_weight(cols, p)
    pos = rng.choice(cols, size=3 * w, replace=False)
    ha = BitVector.from_support(cols, pos[:w])
    hb = BitVector.from_support(cols, pos[w : 2 * w])
    hc = BitVector.from_support(cols, pos[2 * w :])
    return ha ^ hc, hb ^ hc, ha ^ hb


def _sample_independent_triplet(cols, p, basis, rng, max_retries):
    """Triple whose members each grow the rank of ``basis`` by one."""
    for _ in range(max_retries):
        h1, h2, h3 = sample_row_triplet(cols, p, rng)
        r1 = basis.residual(h1)
        if r1.is_zero():
            continue
        r2 = basis.residual(h2)
        # residual reduction is linear, so h3 = h1+h2 is independent of
        # the basis exactly when r1 != r2
        if r2.is_zero() or r1 == r2:
            continue
        return h1, h2, h3
    raise RowSamplingError(
        f"no independent triple within {max_retries} attempts; density target too low?"
    )


@dataclass
class EnsembleTree:
    """Ternary tree of augmented parity-check matrices.

    ``rows`` maps each non-root node path (tuple of child labels in
    {1,2,3}) to the sparse row appended at that node; node PCMs stack
    the base matrix and the rows along the path.
    """

    base: BitMatrix
    depth: int
    density_target: float
    seed: int | None
    rows: dict[tuple[int, ...], BitVector]
    _pcm_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def paths(self) -> list[tuple[int, ...]]:
        return sorted(self.rows.keys(), key=lambda p: (len(p), p))

    def leaf_paths(self) -> list[tuple[int, ...]]:
        if self.depth == 0:
            return [()]
        return sorted(p for p in self.rows if len(p) == self.depth)

    def node(self, path: tuple[int, ...]) -> BitMatrix:
        path = tuple(path)
        if not path:
            return self.base
        cached = self._pcm_cache.get(path)
        if cached is None:
            cached = self.node(path[:-1]).with_row(self.rows[path])
            self._pcm_cache[path] = cached
        return cached

    def leaves(self) -> list[BitMatrix]:
        return [self.node(p) for p in self.leaf_paths()]

    def members(self) -> list[BitMatrix]:
        """Decoder bank: the base graph plus every proper leaf."""
        if self.depth == 0:
            return [self.base]
        return [self.base] + self.leaves()

    @property
    def n_decoders(self) -> int:
        return len(self.members())

    def manifest(self) -> dict:
        return {
            "kind": "ensemble-tree",
            "cols": self.base.cols,
            "depth": self.depth,
            "density_target": self.density_target,
            "seed": self.seed,
            "base_rows": [self.base.row(i).support().tolist() for i in range(self.base.rows)],
            "appended": {
                ".".join(map(str, p)): self.rows[p].support().tolist()
                for p in self.paths()
            },
        }

    @classmethod
    def from_manifest(cls, man: dict, base: BitMatrix | None = None) -> "EnsembleTree":
        cols = int(man["cols"])
        if base is None:
            base = BitMatrix.from_rows(
                [BitVector.from_support(cols, s) for s in man["base_rows"]]
            )
        if base.cols != cols:
            raise ValueError("base width does not match manifest")
        rows = {
            tuple(int(t) for t in key.split(".")): BitVector.from_support(cols, supp)
            for key, supp in man["appended"].items()
        }
        return cls(
            base=base,
            depth=int(man["depth"]),
            density_target=float(man["density_target"]),
            seed=man["seed"],
            rows=rows,
        )


def build_ensemble(
    base: BitMatrix,
    depth: int,
    p: float | None = None,
    seed: int | None = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> EnsembleTree:
    """Grow the ternary ensemble tree to ``depth`` levels (3^depth leaves).

    ``p`` is the sparse-row density target; by default the base graph's
    own density. Every node's appended row is independent of all rows
    above it, so a node at depth d has rank rank(base) + d.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if p is None:
        p = density(base)
    _support_weight(base.cols, p)  # validate now, not mid-build
    rng = np.random.default_rng(seed)
    rows: dict[tuple[int, ...], BitVector] = {}
    frontier = [((), RowBasis(base))]
    for _ in range(depth):
        nxt = []
        for path, basis in frontier:
            triple = _sample_independent_triplet(base.cols, p, basis, rng, max_retries)
            for child, h in enumerate(triple, start=1):
                child_path = path + (child,)
                rows[child_path] = h
                child_basis = basis.copy()
                child_basis.add(h)
                nxt.append((child_path, child_basis))
        frontier = nxt
    return EnsembleTree(base=base, depth=depth, density_target=p, seed=seed, rows=rows)


def sample_leaf(
    base: BitMatrix,
    depth: int,
    p: float | None = None,
    rng=None,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> BitMatrix:
    """One random root-to-leaf lineage of the ensemble tree.

    Samples a full covering triple at each level and keeps a uniformly
    random child, so the returned PCM is distributed exactly like a
    random leaf of ``build_ensemble`` output at 1/3^depth of the cost.
    """
    if p is None:
        p = density(base)
    rng = np.random.default_rng(rng)
    basis = RowBasis(base)
    m = base
    for _ in range(depth):
        triple = _sample_independent_triplet(base.cols, p, basis, rng, max_retries)
        h = triple[int(rng.integers(3))]
        m = m.with_row(h)
        basis.add(h)
    return m


def _all_codewords_words(code: PolarCode) -> np.ndarray:
    """Packed words of all 2^K codewords (XOR span of the info rows)."""
    gen_words = code.gen.words
    words = np.zeros((1, gen_words.shape[1]), dtype=np.uint64)
    for i in code.info:
        words = np.vstack([words, words ^ gen_words[i]])
    return words


def verify_covering(ensemble, code: PolarCode, max_dimension: int = 16) -> bool:
    """Exhaustively check that every codeword of ``code`` satisfies at
    least one leaf PCM of ``ensemble``."""
    if code.dimension > max_dimension:
        raise ValueError(
            f"covering check enumerates 2^K codewords; K={code.dimension} "
            f"exceeds the bound {max_dimension}"
        )
    words = _all_codewords_words(code)
    covered = np.zeros(words.shape[0], dtype=bool)
    for leaf in ensemble.leaves():
        lw = leaf.words
        for lo in range(0, words.shape[0], 4096):
            blk = words[lo : lo + 4096]
            par = np.bitwise_count(blk[:, None, :] & lw[None, :, :]).sum(axis=2) & 1
            covered[lo : lo + 4096] |= ~par.any(axis=1)
        if covered.all():
            return True
    return bool(covered.all())


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one data-driven anchor-row selection."""

    row: BitVector
    corrected: int
    scores: tuple[int, ...]
    candidates: tuple[BitVector, ...]


def collect_failures(
    code: PolarCode,
    ebn0_db: float,
    n_failures: int,
    seed: int,
    *,
    alpha: float = decode.DEFAULT_ALPHA,
    max_iter: int = decode.DEFAULT_MAX_ITER,
    max_trials: int = 10**7,
) -> list[tuple[BitVector, np.ndarray]]:
    """Run base-graph min-sum at the operating point until ``n_failures``
    block errors are collected; returns (transmitted word, LLR) pairs."""
    from . import sim

    base = base_pcm(code)
    cfg = sim.ChannelConfig(ebn0_db=ebn0_db, rate=code.rate)
    failures = []
    trial = 0
    while len(failures) < n_failures:
        if trial >= max_trials:
            raise RuntimeError(
                f"collected only {len(failures)}/{n_failures} failures "
                f"in {max_trials} trials"
            )
        rng = sim.trial_rng(seed, 0, trial)
        u = rng.integers(0, 2, size=code.dimension)
        x, llr = sim.transmit(code, u, cfg, rng)
        out = decode.msa_decode(base, llr, max_iter, alpha)
        if out.word != x:
            failures.append((x, llr))
        trial += 1
    return failures


def sced_select_row(
    base: BitMatrix,
    failures,
    n_candidates: int,
    rng,
    *,
    alpha: float = decode.DEFAULT_ALPHA,
    max_iter: int = decode.DEFAULT_MAX_ITER,
    p: float | None = None,
    reject=None,
) -> SelectionResult:
    """Pick the anchor row that corrects the most collected failures.

    Candidates are weight-2w rows (w from the density target) sampled
    uniformly; rows inside the base row space, or rejected by the
    ``reject`` predicate, are resampled. Each candidate is scored by
    decoding every failure on the singly-augmented PCM and counting
    exact corrections; the argmax wins, ties keeping the earliest
    candidate.
    """
    if p is None:
        p = density(base)
    w = _support_weight(base.cols, p)
    basis = RowBasis(base)
    candidates: list[BitVector] = []
    guard = 0
    while len(candidates) < n_candidates:
        guard += 1
        if guard > 64 * n_candidates:
            raise RowSamplingError("candidate pool could not be filled")
        h = BitVector.from_support(
            base.cols, rng.choice(base.cols, size=2 * w, replace=False)
        )
        if basis.contains(h):
            continue
        if reject is not None and reject(h):
            continue
        candidates.append(h)
    scores = []
    for h in candidates:
        m = base.with_row(h)
        n_ok = 0
        for x, llr in failures:
            out = decode.msa_decode(m, llr, max_iter, alpha, stop_rows=base.rows)
            if out.base_valid and out.word == x:
                n_ok += 1
        scores.append(n_ok)
    best = int(np.argmax(scores))
    return SelectionResult(
        row=candidates[best],
        corrected=scores[best],
        scores=tuple(scores),
        candidates=tuple(candidates),
    )


@dataclass
class FlatEnsemble:
    """Flat covering ensemble: each member is the base plus one anchor row."""

    base: BitMatrix
    rows: list[BitVector]
    meta: dict = field(default_factory=dict)

    def leaves(self) -> list[BitMatrix]:
        return [self.base.with_row(r) for r in self.rows]

    def members(self) -> list[BitMatrix]:
        return [self.base] + self.leaves()

    @property
    def n_decoders(self) -> int:
        return len(self.members())

    def manifest(self) -> dict:
        return {
            "kind": "flat-ensemble",
            "cols": self.base.cols,
            "base_rows": [self.base.row(i).support().tolist() for i in range(self.base.rows)],
            "rows": [r.support().tolist() for r in self.rows],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_manifest(cls, man: dict, base: BitMatrix | None = None) -> "FlatEnsemble":
        cols = int(man["cols"])
        if base is None:
            base = BitMatrix.from_rows(
                [BitVector.from_support(cols, s) for s in man["base_rows"]]
            )
        rows = [BitVector.from_support(cols, s) for s in man["rows"]]
        return cls(base=base, rows=rows, meta=dict(man.get("meta", {})))


def build_sced_ensemble(
    code: PolarCode,
    n_triples: int,
    *,
    seed: int = 0,
    ebn0_db: float | None = None,
    n_failures: int = 1000,
    n_candidates: int = 5000,
    alpha: float = decode.DEFAULT_ALPHA,
    max_iter: int = decode.DEFAULT_MAX_ITER,
    target_bler: float = 1e-3,
) -> FlatEnsemble:
    """Flat ensemble of ``n_triples`` data-driven covering triples.

    For each triple, h1 and h2 are selected by ``sced_select_row`` on
    independently drawn candidate pools and h3 = h1 xor h2 completes
    the covering. When ``ebn0_db`` is None the operating point is
    located by bisection to the SNR where base min-sum reaches
    ``target_bler``.
    """
    from . import sim

    base = base_pcm(code)
    if ebn0_db is None:
        ebn0_db = sim.find_operating_point(
            code, target_bler=target_bler, seed=seed, alpha=alpha, max_iter=max_iter
        )
    failures = collect_failures(
        code, ebn0_db, n_failures, seed, alpha=alpha, max_iter=max_iter
    )
    rng = np.random.default_rng(seed)
    basis = RowBasis(base)
    seen: set[BitVector] = set()
    rows: list[BitVector] = []
    for _ in range(n_triples):
        sel1 = sced_select_row(
            base,
            failures,
            n_candidates,
            rng,
            alpha=alpha,
            max_iter=max_iter,
            reject=lambda h: h in seen,
        )
        h1 = sel1.row
        # h2's pool must keep h2, and the implied h3, fresh and
        # independent: h3 = h1 + h2 is outside the base row space iff
        # the residuals of h1 and h2 differ
        res1 = basis.residual(h1)

        def reject_h2(h, h1=h1, res1=res1):
            return h in seen or h == h1 or (h ^ h1) in seen or basis.residual(h) == res1

        sel2 = sced_select_row(
            base,
            failures,
            n_candidates,
            rng,
            alpha=alpha,
            max_iter=max_iter,
            reject=reject_h2,
        )
        h2 = sel2.row
        h3 = h1 ^ h2
        rows.extend((h1, h2, h3))
        seen.update((h1, h2, h3))
    return FlatEnsemble(
        base=base,
        rows=rows,
        meta={
            "protocol": "sced",
            "seed": seed,
            "ebn0_db": float(ebn0_db),
            "n_failures": n_failures,
            "n_candidates": n_candidates,
            "n_triples": n_triples,
        },
    )
