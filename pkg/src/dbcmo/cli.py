"""Command-line front end.

Subcommands: ``generate``, ``cluster``, ``evaluate``, ``bench-pruning``,
``sweep-alpha``, ``kdist`` and ``dump-tree``. Exit status is 0 on success,
2 on usage errors and 1 when a run fails.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from pathlib import Path

from . import cluster as cl
from .datagen import GeneratorError, MvoGenConfig, ScaleGenConfig, generate_mvo_dataset, generate_scale_dataset
from .evaluation import METRICS_HEADER, evaluate, metrics_row
from .fileio import DatasetFormatError, read_dataset, read_truth, write_dataset, write_truth
from .index import DEFAULT_FANOUT, GlobalTree, LocalTree
from .kdist import k_distances, suggest_eps
from .layouts import LAYOUT_NAMES, LayoutError, builtin_layout
from .model import ModelError
from .neighborhood import PruneStats, PruningLevel, QueryParams

DEFAULT_MINOBS = 5
DEFAULT_ALPHA = 0.7
DEFAULT_SAMPLES = 20

ALGORITHMS = ("dbcmo", "fdbscan", "expdbscan")


class UsageError(Exception):
    pass


class RunFailure(Exception):
    pass


def _ms(seconds: float) -> float:
    return round(seconds * 1000.0, 3)


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _eps_arg(text: str):
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"eps must be a positive number or 'auto', got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("eps must be positive")
    return value


def _emit(report: dict, path) -> None:
    text = json.dumps(report, indent=2, sort_keys=False)
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _load(path):
    try:
        return read_dataset(path)
    except OSError as exc:
        raise RunFailure(f"cannot read dataset {path}: {exc.strerror or exc}") from None


def _resolve_eps(args, dataset, tree) -> tuple[float, str]:
    if args.eps != "auto":
        return float(args.eps), "given"
    k = args.minobs - 1
    if k < 1:
        raise UsageError("--eps auto needs --minobs of at least 2")
    if k >= len(dataset):
        raise UsageError(f"--eps auto needs more than {k} objects")
    profile = k_distances(dataset, k, args.kdist_alpha, tree)
    return suggest_eps(list(profile.values())), f"k-distance profile (k={k}, alpha={args.kdist_alpha})"


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    out = Path(args.out)
    if args.layout is None:
        given = {k: v for k, v in (("n_objects", args.n), ("max_instances", args.m), ("dims", args.d)) if v is not None}
        config = ScaleGenConfig(seed=args.seed, **given)
        dataset, truth = generate_scale_dataset(config)
        name = f"scale_n{config.n_objects}_m{config.max_instances}_d{config.dims}"
    else:
        for flag in ("n", "m", "d"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag} only applies with --scale")
        points, labels = builtin_layout(args.layout)
        dataset, truth = generate_mvo_dataset(MvoGenConfig(points, labels, seed=args.seed))
        name = args.layout
    write_dataset(dataset, out / "dataset.jsonl")
    write_truth(truth, out / "truth.csv")
    _emit(
        {
            "dataset": name,
            "objects": len(dataset),
            "instances": sum(len(o) for o in dataset),
            "dims": dataset.dimensionality,
            "seed": args.seed,
            "files": [str(out / "dataset.jsonl"), str(out / "truth.csv")],
        },
        None,
    )
    return 0


# ---------------------------------------------------------------- cluster


def _check_algo_flags(args) -> None:
    if args.algo != "dbcmo":
        for flag in ("alpha", "pruning"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag} only applies to dbcmo")
    if args.algo != "fdbscan":
        for flag in ("rp", "samples"):
            if getattr(args, flag) is not None:
                raise UsageError(f"--{flag} only applies to fdbscan")


def run_algorithm(algo: str, dataset, eps: float, args, tree=None) -> tuple[cl.ClusterLabeling, float, float]:
    """Run one algorithm; returns the labeling, clustering seconds and tree-build seconds."""
    build = 0.0
    if algo == "dbcmo":
        if tree is None:
            t0 = time.perf_counter()
            tree = GlobalTree(dataset)
            build = time.perf_counter() - t0
        query = QueryParams(args.alpha, eps, args.pruning)
        params = cl.ClusterParams(args.minobs, query)
        t0 = time.perf_counter()
        labeling = cl.dbcmo(dataset, params, tree=tree, workers=args.workers)
    elif algo == "fdbscan":
        baseline = cl.BaselineParams(args.samples, args.rp, args.seed)
        t0 = time.perf_counter()
        labeling = cl.fdbscan(dataset, args.minobs, eps, baseline)
    else:
        t0 = time.perf_counter()
        labeling = cl.expdbscan(dataset, args.minobs, eps)
    return labeling, time.perf_counter() - t0, build


def _params_echo(args, eps: float, eps_source: str) -> dict:
    params = {"minobs": args.minobs, "eps": eps, "eps_source": eps_source}
    if args.algo == "dbcmo":
        params.update(alpha=args.alpha, pruning=PruningLevel.parse(args.pruning).label)
    elif args.algo == "fdbscan":
        params.update(rp=args.rp, samples=args.samples, seed=args.seed)
    return params


def cmd_cluster(args) -> int:
    _check_algo_flags(args)
    args.alpha = DEFAULT_ALPHA if args.alpha is None else args.alpha
    args.rp = DEFAULT_ALPHA if args.rp is None else args.rp
    args.samples = DEFAULT_SAMPLES if args.samples is None else args.samples
    args.pruning = "P1-4" if args.pruning is None else args.pruning
    dataset, _ = _load(args.inp)
    truth = read_truth(args.truth) if args.truth else None
    tree = None
    build = 0.0
    if args.algo == "dbcmo" or args.eps == "auto":
        t0 = time.perf_counter()
        tree = GlobalTree(dataset)
        build = time.perf_counter() - t0
    eps, eps_source = _resolve_eps(args, dataset, tree)
    labeling, seconds, _ = run_algorithm(args.algo, dataset, eps, args, tree)
    labeling.to_csv(args.out)
    report = {
        "algorithm": args.algo,
        "dataset": str(args.inp),
        "params": _params_echo(args, eps, eps_source),
        "runtime_ms": _ms(seconds),
        "tree_build_ms": _ms(build) if args.algo == "dbcmo" else None,
        "cluster_count": labeling.cluster_count,
        "noise_count": labeling.noise_count,
        "prune_stats": labeling.stats.as_row() if labeling.stats is not None else None,
        "metrics": None,
        "labels_file": str(args.out),
    }
    if truth is not None:
        m = evaluate(labeling, truth)
        report["metrics"] = {"precision": m.precision, "recall": m.recall, "f1": m.f1}
        if args.metrics:
            row = metrics_row(args.algo, Path(args.inp).stem, m, report["runtime_ms"])
            Path(args.metrics).write_text(METRICS_HEADER + "\n" + row + "\n", encoding="utf-8")
    elif args.metrics:
        raise UsageError("--metrics needs --truth")
    _emit(report, args.report)
    return 0


# ---------------------------------------------------------------- evaluate


def cmd_evaluate(args) -> int:
    labeling = cl.ClusterLabeling.from_csv(args.labels)
    truth = read_truth(args.truth)
    m = evaluate(labeling, truth)
    print(METRICS_HEADER)
    print(metrics_row(args.algorithm, args.dataset or Path(args.truth).stem, m, args.runtime_ms))
    return 0


# ---------------------------------------------------------------- bench-pruning


def _canonical(labeling: cl.ClusterLabeling) -> tuple:
    """Partition as a sorted tuple of member tuples, noise kept apart."""
    groups = sorted(tuple(sorted(v)) for v in labeling.clusters().values())
    noise = tuple(sorted(o for o, c in labeling.labels.items() if c == cl.NOISE))
    return tuple(groups), noise


def cmd_bench_pruning(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    dataset, _ = _load(args.inp)
    t0 = time.perf_counter()
    tree = GlobalTree(dataset)
    build = time.perf_counter() - t0
    eps, eps_source = _resolve_eps(args, dataset, tree)
    levels = [PruningLevel.parse(x) for x in args.levels.split(",")]
    rows, reference = [], None
    for level in levels:
        params = cl.ClusterParams(args.minobs, QueryParams(args.alpha, eps, level))
        times, labeling = [], None
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            labeling = cl.dbcmo(dataset, params, tree=tree, workers=args.workers)
            times.append(time.perf_counter() - t0)
        canon = _canonical(labeling)
        if reference is None:
            reference = canon
        elif canon != reference:
            raise RunFailure(f"labels under {level.label} differ from {levels[0].label}: pruning is unsound")
        stats = labeling.stats or PruneStats()
        row = {"level": level.label, "median_runtime_ms": _ms(statistics.median(times))}
        row.update(stats.as_row())
        row.update(clusters=labeling.cluster_count, noise=labeling.noise_count)
        rows.append(row)
    _write_rows(args.out, rows)
    _emit({"dataset": str(args.inp), "eps": eps, "eps_source": eps_source, "tree_build_ms": _ms(build), "rows": rows}, None)
    return 0


def _write_rows(path, rows: list[dict]) -> None:
    if not path:
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(rows[0]) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row.values()) + "\n")


# ---------------------------------------------------------------- sweep-alpha


def cmd_sweep_alpha(args) -> int:
    if args.repeats < 1:
        raise UsageError("--repeats must be at least 1")
    if any(not (0.0 < a <= 1.0) for a in args.alphas):
        raise UsageError("every alpha must lie in (0, 1]")
    dataset, _ = _load(args.inp)
    tree = GlobalTree(dataset)
    eps, eps_source = _resolve_eps(args, dataset, tree)
    algos = ALGORITHMS if args.algo == "all" else (args.algo,)
    rows = []
    for algo in algos:
        for a in args.alphas:
            run_args = argparse.Namespace(
                alpha=a, rp=a, pruning=args.pruning, minobs=args.minobs, samples=args.samples,
                seed=args.seed, workers=args.workers,
            )
            times = []
            for _ in range(args.repeats):
                labeling, seconds, _ = run_algorithm(algo, dataset, eps, run_args, tree)
                times.append(seconds)
            rows.append(
                {
                    "algorithm": algo,
                    "alpha": a,
                    "median_runtime_ms": _ms(statistics.median(times)),
                    "clusters": labeling.cluster_count,
                    "noise": labeling.noise_count,
                }
            )
    _write_rows(args.out, rows)
    _emit({"dataset": str(args.inp), "eps": eps, "eps_source": eps_source, "rows": rows}, None)
    return 0


# ---------------------------------------------------------------- kdist


def cmd_kdist(args) -> int:
    dataset, _ = _load(args.inp)
    if not 1 <= args.k < len(dataset):
        raise UsageError(f"--k must lie in [1, {len(dataset) - 1}] for {len(dataset)} objects")
    profile = k_distances(dataset, args.k, args.alpha)
    ordered = sorted(profile.items(), key=lambda kv: (-kv[1], kv[0]))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("id,kdist\n")
            for oid, d in ordered:
                fh.write(f"{oid},{d!r}\n")
    _emit(
        {"dataset": str(args.inp), "k": args.k, "alpha": args.alpha, "objects": len(ordered),
         "suggested_eps": suggest_eps([d for _, d in ordered])},
        None,
    )
    return 0


# ---------------------------------------------------------------- dump-tree


def cmd_dump_tree(args) -> int:
    dataset, _ = _load(args.inp)
    if args.id is None:
        tree = GlobalTree(dataset, args.fanout)
    else:
        if args.id not in dataset:
            raise UsageError(f"unknown object id {args.id!r}")
        tree = LocalTree(dataset[args.id], args.fanout)
    print(tree.dump())
    return 0


# ---------------------------------------------------------------- parser


def _add_eps_flags(p) -> None:
    p.add_argument("--eps", type=_eps_arg, default="auto", help="neighborhood radius, or 'auto' (default)")
    p.add_argument("--kdist-alpha", type=float, default=DEFAULT_ALPHA,
                   help="alpha of the k-distance profile used by --eps auto (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbcmo", description="Density-based clustering of multi-valued objects.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset and its truth labels")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--layout", choices=LAYOUT_NAMES)
    src.add_argument("--scale", action="store_true", help="four-cell scalability dataset")
    p.add_argument("--n", type=int, help="objects (--scale, default 2000)")
    p.add_argument("--m", type=int, help="max instances per object (--scale, default 100)")
    p.add_argument("--d", type=int, help="dimensionality (--scale, default 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="cluster a dataset with one algorithm")
    p.add_argument("--algo", choices=ALGORITHMS, default="dbcmo")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True, help="labeling CSV")
    p.add_argument("--minobs", type=int, default=DEFAULT_MINOBS)
    _add_eps_flags(p)
    p.add_argument("--alpha", type=float, help=f"dbcmo only (default {DEFAULT_ALPHA})")
    p.add_argument("--pruning", choices=PruningLevel.labels(), help="dbcmo only (default P1-4)")
    p.add_argument("--rp", type=float, help=f"fdbscan only (default {DEFAULT_ALPHA})")
    p.add_argument("--samples", type=int, help=f"fdbscan only (default {DEFAULT_SAMPLES})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="truth CSV; adds metrics to the report")
    p.add_argument("--metrics", help="metrics CSV output (needs --truth)")
    p.add_argument("--report", help="report JSON path (default stdout)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="score a labeling CSV against truth")
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--algorithm", default="unknown")
    p.add_argument("--dataset")
    p.add_argument("--runtime-ms", type=float, default=0.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench-pruning", help="dbcmo runtime per pruning level")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", help="CSV output")
    p.add_argument("--minobs", type=int, default=DEFAULT_MINOBS)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    _add_eps_flags(p)
    p.add_argument("--levels", default=",".join(PruningLevel.labels()))
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_bench_pruning)

    p = sub.add_parser("sweep-alpha", help="runtime and cluster counts across alpha (RP for fdbscan)")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", help="CSV output")
    p.add_argument("--alphas", type=_float_list, default=[round(0.1 * i, 1) for i in range(1, 11)])
    p.add_argument("--algo", choices=ALGORITHMS + ("all",), default="dbcmo")
    p.add_argument("--minobs", type=int, default=DEFAULT_MINOBS)
    _add_eps_flags(p)
    p.add_argument("--pruning", choices=PruningLevel.labels(), default="P1-4")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("kdist", help="sorted k-th alpha-distance profile")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_MINOBS - 1)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--out", help="CSV output (id,kdist, descending)")
    p.set_defaults(func=cmd_kdist)

    p = sub.add_parser("dump-tree", help="print the global tree, or one object's local tree")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--id", help="object id (local tree)")
    p.add_argument("--fanout", type=int, default=DEFAULT_FANOUT)
    p.set_defaults(func=cmd_dump_tree)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"dbcmo: error: {exc}", file=sys.stderr)
        return 2
    except (RunFailure, ModelError, DatasetFormatError, GeneratorError, LayoutError, ValueError, OSError) as exc:
        print(f"dbcmo: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
