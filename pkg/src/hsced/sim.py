"""AWGN link simulation with deterministic, trial-addressable randomness.

Every trial draws from a counter-based Philox stream keyed by (master
seed, SNR index, trial index), so results are bit-identical regardless
of worker count or evaluation order, and different decoders given the
same seed see identical channel realizations (paired comparisons).

Complexity and latency accounting follows the standard hardware model:
min-sum costs 2 x edges operations per iteration and one iteration
costs 2 clock cycles (check half + variable half); list decoding costs
L x N x log2(N) operations with a fixed 2N - 2 cycle schedule. Ensemble
decoders run their members in parallel, so the mean member latency and
the slowest-member latency are both reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import decode, ensemble as ensemble_mod, polar, tanner
from .gf2 import BitVector
from .polar import PolarCode, base_pcm

T_ITER_CYCLES = 2
_CHUNK = 100  # trials per scheduling unit; fixed so results never depend on threading


def noise_sigma(ebn0_db: float, rate: float) -> float:
    """Noise standard deviation for BPSK at the given Eb/N0 and code rate."""
    if rate <= 0 or rate > 1:
        raise ValueError("rate must be in (0, 1]")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


@dataclass(frozen=True)
class ChannelConfig:
    """BPSK/AWGN channel operating point. sigma is derived when omitted."""

    ebn0_db: float
    rate: float
    sigma: float = None

    def __post_init__(self):
        expect = noise_sigma(self.ebn0_db, self.rate)
        if self.sigma is None:
            object.__setattr__(self, "sigma", expect)
        elif abs(self.sigma - expect) > 1e-9:
            raise ValueError("sigma inconsistent with ebn0_db and rate")


def trial_rng(seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial; O(1) addressing via the counter."""
    bits = np.random.Philox(
        key=np.uint64(seed),
        counter=[0, 0, np.uint64(trial_index), np.uint64(snr_index)],
    )
    return np.random.Generator(bits)


def transmit(code: PolarCode, u, cfg: ChannelConfig, rng) -> tuple[BitVector, np.ndarray]:
    """Encode, BPSK-modulate (0 -> +1), add noise, return channel LLRs."""
    x = polar.encode(code, u)
    symbols = 1.0 - 2.0 * x.to_array().astype(np.float64)
    y = symbols + cfg.sigma * rng.standard_normal(code.block_length)
    llr = 2.0 * y / (cfg.sigma * cfg.sigma)
    return x, llr


@dataclass(frozen=True)
class DecoderSpec:
    """Declarative description of a decoder for the simulator."""

    kind: str  # "msa" | "sced" | "hsced" | "scl"
    alpha: float = decode.DEFAULT_ALPHA
    max_iter: int = decode.DEFAULT_MAX_ITER
    list_size: int = 32
    depth: int = 3
    ensemble_seed: int = 1
    sced_triples: int = 9
    sced_failures: int = 1000
    sced_candidates: int = 5000
    sced_ebn0_db: float | None = None

    def __post_init__(self):
        if self.kind not in ("msa", "sced", "hsced", "scl"):
            raise ValueError(f"unknown decoder kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "msa":
            return "msa"
        if self.kind == "scl":
            return f"scl-{self.list_size}"
        if self.kind == "hsced":
            return f"hsced-{3 ** self.depth}"
        return f"sced-{3 * self.sced_triples}"


class _Runner:
    """A decoder bound to one code, exposing uniform metrics hooks."""

    def __init__(self, spec: DecoderSpec, code: PolarCode):
        self.spec = spec
        self.code = code
        self.ensemble_manifest = None
        base = base_pcm(code)
        if spec.kind == "msa":
            self._ens = None
            self.edge_counts = np.array([tanner.edge_count(base)])
        elif spec.kind == "scl":
            self._ens = None
            self.edge_counts = np.zeros(0)
        else:
            if spec.kind == "hsced":
                ens = ensemble_mod.build_ensemble(
                    base, depth=spec.depth, seed=spec.ensemble_seed
                )
            else:
                ens = ensemble_mod.build_sced_ensemble(
                    code,
                    n_triples=spec.sced_triples,
                    seed=spec.ensemble_seed,
                    ebn0_db=spec.sced_ebn0_db,
                    n_failures=spec.sced_failures,
                    n_candidates=spec.sced_candidates,
                    alpha=spec.alpha,
                    max_iter=spec.max_iter,
                )
            self._ens = ens
            self.ensemble_manifest = ens.manifest()
            self.edge_counts = np.array(
                [tanner.edge_count(base)]
                + [tanner.edge_count(l) for l in ens.leaves()]
            )
        self._base = base

    @property
    def n_decoders(self) -> int:
        if self.spec.kind in ("msa", "scl"):
            return 1
        return self._ens.n_decoders

    def decode(self, llr) -> tuple[BitVector, np.ndarray]:
        """Returns (codeword estimate, per-member iteration counts)."""
        spec = self.spec
        if spec.kind == "msa":
            out = decode.msa_decode(self._base, llr, spec.max_iter, spec.alpha)
            return out.word, np.array([out.iterations], dtype=np.int64)
        if spec.kind == "scl":
            word = decode.scl_decode(self.code, llr, spec.list_size)
            return word, np.zeros(0, dtype=np.int64)
        res = decode.ensemble_decode_detail(self._ens, llr, spec.max_iter, spec.alpha)
        return res.word, res.iterations

    def ops_for(self, iters: np.ndarray) -> float:
        """Operation count of one decode (all members, parallel or not)."""
        if self.spec.kind == "scl":
            return complexity_report(
                "scl", n_block=self.code.block_length, list_size=self.spec.list_size
            )
        return float(2.0 * (self.edge_counts * iters).sum())


@dataclass(frozen=True)
class LatencyReport:
    """Decoding latency in clock cycles (iteration = 2 cycles)."""

    avg_cycles: float
    avg_slowest_cycles: float
    worst_cycles: float


def complexity_report(
    kind: str,
    *,
    n_block: int | None = None,
    list_size: int | None = None,
    edges: float | None = None,
    i_avg: float | None = None,
    n_decoders: int = 1,
) -> float:
    """Mean operation count per decoded block.

    SCL: list_size x N x log2(N). BP families: n_decoders x 2 x edges x
    mean iterations.
    """
    if kind == "scl":
        if not n_block or not list_size:
            raise ValueError("scl complexity needs n_block and list_size")
        return float(list_size * n_block * math.log2(n_block))
    if kind in ("msa", "bp", "sced", "hsced"):
        if edges is None or i_avg is None:
            raise ValueError("bp complexity needs edges and i_avg")
        return float(n_decoders * 2.0 * edges * i_avg)
    raise ValueError(f"unknown decoder kind {kind!r}")


def latency_report(
    kind: str,
    *,
    n_block: int | None = None,
    max_iter: int = decode.DEFAULT_MAX_ITER,
    iterations=None,
    slowest_iterations=None,
) -> LatencyReport:
    """Latency in cycles for one decoder family.

    SCL has a fixed schedule of 2N - 2 cycles. BP families report the
    mean over all member decodes, the mean of the per-trial slowest
    member (parallel-completion convention), and the 2 x max_iter bound.
    """
    if kind == "scl":
        if not n_block:
            raise ValueError("scl latency needs n_block")
        cycles = float(2 * n_block - 2)
        return LatencyReport(cycles, cycles, cycles)
    if kind in ("msa", "bp", "sced", "hsced"):
        iterations = np.asarray(iterations, dtype=np.float64)
        if iterations.size == 0:
            raise ValueError("bp latency needs iteration samples")
        slow = (
            iterations
            if slowest_iterations is None
            else np.asarray(slowest_iterations, dtype=np.float64)
        )
        return LatencyReport(
            avg_cycles=float(T_ITER_CYCLES * iterations.mean()),
            avg_slowest_cycles=float(T_ITER_CYCLES * slow.mean()),
            worst_cycles=float(T_ITER_CYCLES * max_iter),
        )
    raise ValueError(f"unknown decoder kind {kind!r}")


@dataclass(frozen=True)
class PointStats:
    """Monte Carlo summary at one SNR point."""

    snr_db: float
    trials: int
    errors: int
    bler: float
    avg_iter: float
    avg_iter_slowest: float
    total_ops: float
    avg_latency: float
    avg_latency_slowest: float
    worst_latency: float


@dataclass(frozen=True)
class SimReport:
    """Full sweep output plus reproduction metadata."""

    decoder: str
    n_block: int
    dimension: int
    seed: int
    min_errors: int
    max_trials: int
    threads: int
    n_decoders: int
    points: tuple[PointStats, ...]
    ensemble_manifest: dict | None = None
    spec: dict = field(default_factory=dict)

    CSV_HEADER = "snr_db,trials,errors,bler,avg_iter,total_ops,avg_latency,worst_latency"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for p in self.points:
            lines.append(
                f"{p.snr_db:.6g},{p.trials},{p.errors},{p.bler:.8g},"
                f"{p.avg_iter:.6g},{p.total_ops:.8g},"
                f"{p.avg_latency:.6g},{p.worst_latency:.6g}"
            )
        return "\n".join(lines) + "\n"

    def sidecar(self) -> dict:
        return {
            "decoder": self.decoder,
            "code": {"n": self.n_block, "k": self.dimension},
            "seed": self.seed,
            "min_errors": self.min_errors,
            "max_trials": self.max_trials,
            "threads": self.threads,
            "n_decoders": self.n_decoders,
            "spec": dict(self.spec),
            "csv_header": self.CSV_HEADER,
            "points": [
                {
                    "snr_db": p.snr_db,
                    "trials": p.trials,
                    "errors": p.errors,
                    "bler": p.bler,
                    "avg_iter": p.avg_iter,
                    "avg_iter_slowest": p.avg_iter_slowest,
                    "total_ops": p.total_ops,
                    "avg_latency": p.avg_latency,
                    "avg_latency_slowest": p.avg_latency_slowest,
                    "worst_latency": p.worst_latency,
                }
                for p in self.points
            ],
            "ensemble": self.ensemble_manifest,
        }


def _run_chunk(runner, code, cfg, seed, snr_index, start, stop):
    """Simulate trials [start, stop); returns summable statistics."""
    errors = 0
    iter_sum = 0.0
    iter_n = 0
    slow_sum = 0.0
    ops_sum = 0.0
    for t in range(start, stop):
        rng = trial_rng(seed, snr_index, t)
        u = rng.integers(0, 2, size=code.dimension)
        x, llr = transmit(code, u, cfg, rng)
        word, iters = runner.decode(llr)
        if word != x:
            errors += 1
        if iters.size:
            iter_sum += float(iters.sum())
            iter_n += iters.size
            slow_sum += float(iters.max())
        ops_sum += runner.ops_for(iters)
    return errors, iter_sum, iter_n, slow_sum, ops_sum


def run_bler(
    spec: DecoderSpec,
    code: PolarCode,
    snr_dbs,
    *,
    seed: int = 0,
    min_errors: int = 100,
    max_trials: int = 10**6,
    threads: int = 1,
) -> SimReport:
    """BLER sweep with an any-order-deterministic stopping rule.

    Each SNR point runs fixed-size trial chunks in index order until
    ``min_errors`` block errors are seen at a chunk boundary or
    ``max_trials`` is reached. Chunk results are reduced in index order,
    so the report is bit-identical for any ``threads`` value.
    """
    if min_errors < 1 or max_trials < 1:
        raise ValueError("min_errors and max_trials must be positive")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    runner = _Runner(spec, code)
    points = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for snr_index, ebn0 in enumerate(snr_dbs):
            cfg = ChannelConfig(ebn0_db=float(ebn0), rate=code.rate)
            errors = 0
            trials = 0
            iter_sum = 0.0
            iter_n = 0
            slow_sum = 0.0
            ops_sum = 0.0
            pending = []
            next_start = 0

            def submit_up_to(limit):
                nonlocal next_start
                while len(pending) < limit and next_start < max_trials:
                    stop = min(next_start + _CHUNK, max_trials)
                    args = (runner, code, cfg, seed, snr_index, next_start, stop)
                    if pool is None:
                        pending.append((args, None))
                    else:
                        pending.append((args, pool.submit(_run_chunk, *args)))
                    next_start = stop

            submit_up_to(max(1, threads))
            while pending:
                args, fut = pending.pop(0)
                res = _run_chunk(*args) if fut is None else fut.result()
                e, isum, icnt, ssum, osum = res
                errors += e
                trials += args[6] - args[5]
                iter_sum += isum
                iter_n += icnt
                slow_sum += ssum
                ops_sum += osum
                if errors >= min_errors or trials >= max_trials:
                    break
                submit_up_to(max(1, threads))
            # drop any speculative chunks beyond the stopping boundary
            for _, fut in pending:
                if fut is not None:
                    fut.cancel()
            pending.clear()

            avg_iter = iter_sum / iter_n if iter_n else 0.0
            avg_slow = slow_sum / trials if iter_n else 0.0
            if spec.kind == "scl":
                lat = latency_report("scl", n_block=code.block_length)
            else:
                lat = LatencyReport(
                    avg_cycles=T_ITER_CYCLES * avg_iter,
                    avg_slowest_cycles=T_ITER_CYCLES * avg_slow,
                    worst_cycles=float(T_ITER_CYCLES * spec.max_iter),
                )
            points.append(
                PointStats(
                    snr_db=float(ebn0),
                    trials=trials,
                    errors=errors,
                    bler=errors / trials,
                    avg_iter=avg_iter,
                    avg_iter_slowest=avg_slow,
                    total_ops=ops_sum / trials,
                    avg_latency=lat.avg_cycles,
                    avg_latency_slowest=lat.avg_slowest_cycles,
                    worst_latency=lat.worst_cycles,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)
    return SimReport(
        decoder=spec.label,
        n_block=code.block_length,
        dimension=code.dimension,
        seed=seed,
        min_errors=min_errors,
        max_trials=max_trials,
        threads=threads,
        n_decoders=runner.n_decoders,
        points=tuple(points),
        ensemble_manifest=runner.ensemble_manifest,
        spec={
            "kind": spec.kind,
            "alpha": spec.alpha,
            "max_iter": spec.max_iter,
            "list_size": spec.list_size,
            "depth": spec.depth,
            "ensemble_seed": spec.ensemble_seed,
        },
    )


def find_operating_point(
    code: PolarCode,
    target_bler: float = 1e-3,
    *,
    seed: int = 0,
    lo_db: float = 0.0,
    hi_db: float = 9.0,
    steps: int = 7,
    min_errors: int = 25,
    max_trials: int = 60000,
    alpha: float = decode.DEFAULT_ALPHA,
    max_iter: int = decode.DEFAULT_MAX_ITER,
) -> float:
    """SNR at which base-graph min-sum reaches ``target_bler``.

    Coarse bisection on the simulated BLER curve; deterministic for a
    fixed seed. Accuracy ~ (hi - lo) / 2^steps dB, ample for picking a
    failure-collection operating point.
    """
    spec = DecoderSpec(kind="msa", alpha=alpha, max_iter=max_iter)
    lo, hi = float(lo_db), float(hi_db)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        rep = run_bler(
            spec,
            code,
            [mid],
            seed=seed,
            min_errors=min_errors,
            max_trials=max_trials,
        )
        if rep.points[0].bler > target_bler:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
