"""Command-line interface: ``mlrsc {simulate,cluster,benchmark,relabel,metrics}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .cluster import PipelineConfig, rsc_coclustering, rsc_pipeline, sc_coclustering, sc_pipeline
from .errors import MLRSCError
from .graph import load_edge_list, write_edge_list
from .io import read_labels, relabel_edges, write_labels, write_metrics, write_timings
from .metrics import ami, ari, misclassification_rate
from .sbm import model_preset, sample_msbm, sample_mscbm

log = logging.getLogger("mlrsc")

DEFAULTS = dict(n=1000, layers=20, rho=0.1, p=0.7, q=4)


def _with_suffix(out, suffix):
    return Path(str(out) + suffix)


def _add_common(sp):
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int, default=10, help="k-means restarts")
    sp.add_argument("--test-dist", choices=("gaussian", "rademacher"), default="gaussian")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlrsc", description="Randomized spectral clustering for multi-layer networks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a network from a preset model")
    sim.add_argument("--model", type=int, choices=(1, 2, 3, 4), required=True)
    sim.add_argument("--n", type=int, default=DEFAULTS["n"])
    sim.add_argument("--layers", type=int, default=DEFAULTS["layers"])
    sim.add_argument("--rho", type=float, default=DEFAULTS["rho"])
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output prefix")

    cl = sub.add_parser("cluster", help="cluster an edge-list file")
    cl.add_argument("edges", help="edge list: 'layer i j' per line")
    cl.add_argument("--n", type=int, required=True)
    cl.add_argument("--layers", type=int, required=True)
    cl.add_argument("--directed", action="store_true")
    cl.add_argument("--k", type=int, help="number of communities (undirected)")
    cl.add_argument("--ky", type=int, help="row communities (directed)")
    cl.add_argument("--kz", type=int, help="column communities (directed)")
    cl.add_argument("--p", type=float, default=DEFAULTS["p"])
    cl.add_argument("--q", type=int, default=DEFAULTS["q"])
    cl.add_argument("--method", choices=("rsc", "sc"), default="rsc")
    cl.add_argument("--dense-oracle", action="store_true",
                    help="sc only: dense eigensolver (n <= 2000) instead of matrix-free")
    cl.add_argument("--truth", nargs="+",
                    help="ground-truth label file(s); row then column file when directed")
    cl.add_argument("--pad-k", action="store_true")
    cl.add_argument("--out", required=True, help="output prefix")
    _add_common(cl)

    bm = sub.add_parser("benchmark", help="sweep one model parameter")
    bm.add_argument("--model", type=int, choices=(1, 2, 3, 4), required=True)
    bm.add_argument("--axis", choices=("n", "L", "layers", "rho"), required=True)
    bm.add_argument("--values", type=float, nargs="+", required=True)
    bm.add_argument("--n", type=int, default=DEFAULTS["n"])
    bm.add_argument("--layers", type=int, default=DEFAULTS["layers"])
    bm.add_argument("--rho", type=float, default=DEFAULTS["rho"])
    bm.add_argument("--p", type=float, nargs="+", default=[DEFAULTS["p"]])
    bm.add_argument("--q", type=int, nargs="+", default=[DEFAULTS["q"]])
    bm.add_argument("--replicates", type=int, default=1)
    bm.add_argument("--out", required=True, help="raw CSV path; summary goes to <stem>.summary.csv")
    _add_common(bm)

    rl = sub.add_parser("relabel", help="map string node ids to 0..n-1")
    rl.add_argument("edges")
    rl.add_argument("--out", required=True, help="output prefix")

    me = sub.add_parser("metrics", help="score an estimated label file against the truth")
    me.add_argument("estimate")
    me.add_argument("--truth", required=True)
    me.add_argument("--pad-k", action="store_true")
    return parser


def cmd_simulate(args):
    model = model_preset(args.model, args.n, args.layers, args.rho)
    net = sample_mscbm(model, args.seed) if model.directed else sample_msbm(model, args.seed)
    edges = _with_suffix(args.out, ".edges.tsv")
    with open(edges, "w", encoding="utf-8") as fh:
        write_edge_list(net, fh)
    with open(_with_suffix(args.out, ".labels.tsv"), "w", encoding="utf-8") as fh:
        write_labels(model.row.labels, fh)
    if model.directed:
        with open(_with_suffix(args.out, ".col_labels.tsv"), "w", encoding="utf-8") as fh:
            write_labels(model.col.labels, fh)
    edge_count = net.nnz if net.directed else net.nnz // 2
    print(f"wrote {edges} ({edge_count} edges, n={net.n}, L={net.L})")
    return 0


def _score(truth_path, labels, pad_k):
    with open(truth_path, encoding="utf-8") as fh:
        truth = read_labels(fh)
    rate = misclassification_rate(truth, labels, pad_k=pad_k)
    return {
        "misclassification": rate,
        "fraction_misclassified": rate / 2,
        "ari": ari(truth, labels),
        "ami": ami(truth, labels),
    }


def cmd_cluster(args):
    with open(args.edges, encoding="utf-8") as fh:
        net = load_edge_list(fh, args.n, args.layers, directed=args.directed)
    outputs = {}
    if args.directed:
        ky = args.ky or args.k
        kz = args.kz or ky
        if ky is None:
            raise MLRSCError("directed clustering needs --ky (and optionally --kz)")
        if args.method == "rsc":
            cfg = PipelineConfig(ky, args.p, args.q, args.seed, args.restarts,
                                 test_distribution=args.test_dist, k_col=kz)
            res = rsc_coclustering(net, cfg)
        else:
            res = sc_coclustering(net, ky, kz, args.seed, args.restarts, dense=args.dense_oracle)
        outputs["row"] = res.row.labels.labels
        outputs["col"] = res.col.labels.labels
    else:
        if args.k is None:
            raise MLRSCError("undirected clustering needs --k")
        if args.method == "rsc":
            cfg = PipelineConfig(args.k, args.p, args.q, args.seed, args.restarts,
                                 test_distribution=args.test_dist)
            res = rsc_pipeline(net, cfg)
        else:
            res = sc_pipeline(net, args.k, args.seed, args.restarts, dense=args.dense_oracle)
        outputs[""] = res.cluster.labels.labels

    for side, labels in outputs.items():
        name = f".{side}_labels.tsv" if side else ".labels.tsv"
        with open(_with_suffix(args.out, name), "w", encoding="utf-8") as fh:
            write_labels(labels, fh)
    with open(_with_suffix(args.out, ".timings.csv"), "w", encoding="utf-8") as fh:
        write_timings(res.timings, fh)
    write_timings(res.timings, sys.stdout)

    if args.truth:
        metrics = {}
        for side, truth_path in zip(outputs, args.truth):
            scored = _score(truth_path, outputs[side], args.pad_k)
            metrics.update({(f"{side}_{k}" if side else k): v for k, v in scored.items()})
        write_metrics(metrics, sys.stdout)
    return 0


def cmd_benchmark(args):
    records = bench.run_benchmark(
        args.model, args.axis, args.values, n=args.n, L=args.layers, rho=args.rho,
        p_list=args.p, q_list=args.q, replicates=args.replicates, seed=args.seed,
        restarts=args.restarts, test_distribution=args.test_dist)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        bench.write_records(records, fh)
    summary = bench.summarize(records)
    summary_path = out.with_name(out.stem + ".summary.csv")
    with open(summary_path, "w", encoding="utf-8") as fh:
        bench.write_summary(summary, fh)
    bench.write_summary(summary, sys.stdout)
    errors = sum(1 for r in records if r.error)
    if errors:
        print(f"{errors} run(s) failed; see the error column in {out}", file=sys.stderr)
    return 1 if errors else 0


def cmd_relabel(args):
    with open(args.edges, encoding="utf-8") as src, \
            open(_with_suffix(args.out, ".edges.tsv"), "w", encoding="utf-8") as edges, \
            open(_with_suffix(args.out, ".map.tsv"), "w", encoding="utf-8") as mapping:
        ids = relabel_edges(src, edges, mapping)
    print(f"{len(ids)} nodes")
    return 0


def cmd_metrics(args):
    with open(args.estimate, encoding="utf-8") as fh:
        estimate = read_labels(fh)
    write_metrics(_score(args.truth, estimate, args.pad_k), sys.stdout)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "benchmark": cmd_benchmark,
    "relabel": cmd_relabel,
    "metrics": cmd_metrics,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (MLRSCError, OSError) as exc:
        stage = getattr(exc, "stage", None)
        where = f" [{stage}]" if stage else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
