"""Command-line interface.

Subcommands: ``construct`` (code + ensemble artifacts), ``analyze``
(Tanner-graph metrics of a PCM file), ``covering-check`` (exhaustive
covering verification over seeds), ``simulate`` (BLER sweep with
complexity/latency accounting).

Exit codes: 0 success, 2 bad usage or parameters, 3 I/O failure,
4 covering-check failure, 5 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import ensemble as ensemble_mod
from . import gf2, polar, sim, tanner

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_COVERING = 4
EXIT_BUDGET = 5


def _run_manifest(command: str, config: dict, **extra) -> dict:
    man = {
        "tool": "hsced",
        "version": __version__,
        "command": command,
        "config": config,
    }
    man.update(extra)
    return man


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_snr(text: str) -> list[float]:
    """START:STEP:STOP (inclusive) or a single value."""
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError("snr must be VALUE or START:STEP:STOP")
    start, step, stop = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("snr step must be positive")
    if stop < start:
        raise ValueError("snr stop must be >= start")
    n = int(round((stop - start) / step))
    pts = [start + i * step for i in range(n + 1)]
    if pts[-1] > stop + 1e-9:
        pts.pop()
    return pts


def _parse_sizes(text: str) -> list[int]:
    if not text:
        return []
    sizes = [int(t) for t in text.split(",") if t.strip()]
    if any(s < 1 for s in sizes):
        raise ValueError("stopping-set sizes must be >= 1")
    return sizes


def _read_pcm(path: str) -> gf2.BitMatrix:
    if str(path).endswith(".alist"):
        return gf2.read_alist(path)
    return gf2.read_matrix_text(path)


def cmd_construct(args) -> int:
    code = polar.polar_code(args.n, args.k)
    h = polar.pcm(code)
    base = polar.base_pcm(code)
    prefix = args.out_prefix or f"polar_{args.n}_{args.k}"
    files = {
        "pcm": f"{prefix}_pcm.txt",
        "base_pcm": f"{prefix}_base_pcm.txt",
        "frozen": f"{prefix}_frozen.txt",
    }
    gf2.write_matrix_text(h, files["pcm"])
    gf2.write_matrix_text(base, files["base_pcm"])
    with open(files["frozen"], "w", encoding="ascii") as fh:
        fh.write("\n".join(str(i) for i in code.frozen) + "\n")
    ensemble_manifest = None
    if args.depth is not None:
        tree = ensemble_mod.build_ensemble(base, depth=args.depth, seed=args.seed)
        files["ensemble"] = f"{prefix}_ensemble.json"
        ensemble_manifest = tree.manifest()
        _write_json(files["ensemble"], ensemble_manifest)
    manifest = _run_manifest(
        "construct",
        {
            "n": args.n,
            "k": args.k,
            "depth": args.depth,
            "seed": args.seed,
            "out_prefix": prefix,
        },
        files=files,
        code={"n": args.n, "k": args.k, "frozen": list(code.frozen)},
    )
    _write_json(f"{prefix}.manifest.json", manifest)
    for name, path in files.items():
        print(f"{name}: {path}")
    print(f"manifest: {prefix}.manifest.json")
    return EXIT_OK


def cmd_analyze(args) -> int:
    m = _read_pcm(args.pcm)
    sizes = _parse_sizes(args.stopping_sets)
    on_budget = "raise" if args.on_budget == "error" else "omit"
    stats = tanner.graph_stats(m, ss_sizes=sizes, budget=args.budget, on_budget=on_budget)
    payload = {
        "pcm": args.pcm,
        "rows": stats.rows,
        "cols": stats.cols,
        "edges": stats.edges,
        "density": stats.density,
        "four_cycles": stats.four_cycles,
        "stopping_sets": {str(s): v for s, v in stats.stopping_sets.items()},
    }
    if args.hsced_trials:
        rng_master = np.random.default_rng(args.seed)
        acc_cycles = 0.0
        acc_ss: dict[int, list] = {s: [] for s in sizes}
        for _ in range(args.hsced_trials):
            leaf = ensemble_mod.sample_leaf(
                m, depth=args.depth, p=args.density, rng=rng_master
            )
            st = tanner.graph_stats(
                leaf, ss_sizes=sizes, budget=args.budget, on_budget=on_budget
            )
            acc_cycles += st.four_cycles
            for s in sizes:
                acc_ss[s].append(st.stopping_sets[s])
        payload["augmented"] = {
            "trials": args.hsced_trials,
            "depth": args.depth,
            "mean_four_cycles": acc_cycles / args.hsced_trials,
            "mean_stopping_sets": {
                str(s): (
                    None
                    if any(v is None for v in acc_ss[s])
                    else sum(acc_ss[s]) / len(acc_ss[s])
                )
                for s in sizes
            },
        }
    payload["manifest"] = _run_manifest(
        "analyze",
        {
            "pcm": args.pcm,
            "stopping_sets": args.stopping_sets,
            "budget": args.budget,
            "hsced_trials": args.hsced_trials,
            "depth": args.depth,
            "seed": args.seed,
        },
    )
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_covering_check(args) -> int:
    code = polar.polar_code(args.n, args.k)
    base = polar.base_pcm(code)
    failures = 0
    for seed in range(args.seed, args.seed + args.trials):
        tree = ensemble_mod.build_ensemble(base, depth=args.depth, seed=seed)
        ok = ensemble_mod.verify_covering(tree, code)
        print(f"seed {seed}: {'pass' if ok else 'FAIL'}")
        if not ok:
            failures += 1
    print(
        f"{args.trials - failures}/{args.trials} covering checks passed "
        f"(n={args.n} k={args.k} depth={args.depth})"
    )
    return EXIT_OK if failures == 0 else EXIT_COVERING


def cmd_simulate(args) -> int:
    code = polar.polar_code(args.n, args.k)
    spec = sim.DecoderSpec(
        kind=args.decoder,
        alpha=args.alpha,
        max_iter=args.max_iter,
        list_size=args.list_size,
        depth=args.depth,
        ensemble_seed=args.ensemble_seed,
        sced_triples=args.sced_triples,
        sced_failures=args.sced_failures,
        sced_candidates=args.sced_candidates,
        sced_ebn0_db=args.sced_ebn0,
    )
    snrs = _parse_snr(args.snr)
    report = sim.run_bler(
        spec,
        code,
        snrs,
        seed=args.seed,
        min_errors=args.min_errors,
        max_trials=args.max_trials,
        threads=args.threads,
    )
    csv = report.to_csv()
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(csv)
        manifest = _run_manifest(
            "simulate",
            {
                "n": args.n,
                "k": args.k,
                "decoder": args.decoder,
                "depth": args.depth,
                "list_size": args.list_size,
                "snr": args.snr,
                "alpha": args.alpha,
                "max_iter": args.max_iter,
                "seed": args.seed,
                "min_errors": args.min_errors,
                "max_trials": args.max_trials,
                "threads": args.threads,
                "out": args.out,
            },
            report=report.sidecar(),
        )
        _write_json(args.out + ".manifest.json", manifest)
        print(f"wrote {args.out} and {args.out}.manifest.json")
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsced",
        description="Polar-code subcode-ensemble decoding toolkit",
        epilog=(
            "exit codes: 0 ok, 2 usage, 3 io, 4 covering failure, "
            "5 enumeration budget exceeded"
        ),
    )
    parser.add_argument("--version", action="version", version=f"hsced {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("construct", help="emit PCM, base PCM, frozen set, ensemble")
    p.add_argument("--n", type=int, required=True, help="block length (power of two)")
    p.add_argument("--k", type=int, required=True, help="code dimension")
    p.add_argument("--depth", type=int, default=None, help="also build a depth-M ensemble")
    p.add_argument("--seed", type=int, default=0, help="ensemble seed")
    p.add_argument("--out-prefix", default=None, help="output path prefix")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("analyze", help="Tanner-graph metrics of a PCM file")
    p.add_argument("--pcm", required=True, help="matrix file (.txt rows of 0/1, or .alist)")
    p.add_argument("--stopping-sets", default="", help="comma-separated sizes, e.g. 3,4")
    p.add_argument("--budget", type=int, default=tanner.DEFAULT_BUDGET,
                   help="max C(cols, s) enumeration size")
    p.add_argument("--on-budget", choices=("omit", "error"), default="omit",
                   help="over-budget sizes: null in output, or exit 5")
    p.add_argument("--hsced-trials", type=int, default=0,
                   help="average metrics over fresh sampled leaf augmentations")
    p.add_argument("--depth", type=int, default=4, help="augmentation depth per trial")
    p.add_argument("--density", type=float, default=None,
                   help="sparse-row density target (default: PCM density)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("covering-check", help="verify leaf null spaces cover the code")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True, help="dimension (<= 16: exhaustive)")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--trials", "--seeds", dest="trials", type=int, default=1,
                   help="number of seeds to check")
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.set_defaults(func=cmd_covering_check)

    p = sub.add_parser("simulate", help="Monte Carlo BLER sweep")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--decoder", choices=("msa", "sced", "hsced", "scl"), required=True)
    p.add_argument("--snr", required=True, help="Eb/N0 dB: VALUE or START:STEP:STOP")
    p.add_argument("--depth", type=int, default=3, help="ensemble tree depth (hsced)")
    p.add_argument("--list-size", type=int, default=32, help="SCL list size")
    p.add_argument("--alpha", type=float, default=0.75, help="min-sum normalization")
    p.add_argument("--max-iter", type=int, default=50, help="BP iteration cap")
    p.add_argument("--seed", type=int, default=0, help="master trial seed")
    p.add_argument("--ensemble-seed", type=int, default=1, help="ensemble build seed")
    p.add_argument("--min-errors", type=int, default=100,
                   help="stop a point after this many block errors")
    p.add_argument("--max-trials", type=int, default=10**6, help="hard trial cap per point")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("HSCED_THREADS", "1")),
                   help="worker threads (results are thread-count invariant)")
    p.add_argument("--sced-triples", type=int, default=9,
                   help="covering triples in the flat data-driven ensemble")
    p.add_argument("--sced-failures", type=int, default=1000,
                   help="failures collected for anchor-row scoring")
    p.add_argument("--sced-candidates", type=int, default=5000,
                   help="candidate rows scored per selection")
    p.add_argument("--sced-ebn0", type=float, default=None,
                   help="failure-collection SNR (default: bisect to BLER 1e-3)")
    p.add_argument("--out", default=None, help="CSV path (manifest sidecar written too)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except tanner.EnumerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
