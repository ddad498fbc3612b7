"""Command-line interface.

Subcommands: build, lower, eval, census, stability, experiment. Every
subcommand's output is a pure function of its flags and input files; the
UNRECTIFY_THREADS environment variable caps worker threads without
affecting any output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from . import builders, lowering
from .engine import forward_batch, signature
from .experiments import (
    PartitionConfig,
    StabilityConfig,
    run_partition_experiment,
    run_stability_experiment,
)
from .ops import CpwlSpec, RELU
from .partition import partition_census
from .rng import standard_normal
from .serialize import load_graph, save_graph
from .stability import scale_to_stability, stability_certificate


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_input_csv(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    return np.asarray(rows, dtype=np.float64)


def _cmd_build(args) -> int:
    kind = args.kind
    if kind == "series":
        layers = [
            (
                standard_normal((args.dim, args.dim), args.seed, f"series{i}/w"),
                standard_normal((args.dim,), args.seed, f"series{i}/b"),
                RELU,
            )
            for i in range(args.layers)
        ]
        net = builders.build_series(layers)
    elif kind == "fusion-stack":
        net = builders.build_fusion_stack(args.layers, args.dim, args.seed)
    elif kind == "resnet":
        w1 = standard_normal((args.dim, args.dim), args.seed, "resnet/w1")
        w2 = standard_normal((args.dim, args.dim), args.seed, "resnet/w2")
        b1 = standard_normal((args.dim,), args.seed, "resnet/b1")
        b2 = standard_normal((args.dim,), args.seed, "resnet/b2")
        net = builders.build_resnet_block(w1, w2, b1, b2)
    elif kind == "attention":
        mats = [
            standard_normal((args.dim, args.dim), args.seed, f"attn/{name}")
            for name in ("wq", "wk", "wv")
        ]
        net = builders.build_attention_toy(*mats, lam=args.lam, seq_len=args.seq)
    elif kind == "lenet":
        net = builders.build_lenet_shape(args.seed)
    elif kind == "fusion":
        if not args.channels:
            raise SystemExit("build fusion requires --channels a.json,b.json,...")
        channels = [load_graph(p) for p in args.channels.split(",")]
        if args.fuse:
            fuse = _read_input_csv(args.fuse)
        else:
            fuse = np.hstack([np.eye(ch.node_dim[ch.output_node]) for ch in channels])
        net = builders.build_fusion(channels, fuse)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(kind)
    save_graph(net, args.output)
    return 0


def _cmd_lower(args) -> int:
    if args.maxpool:
        net = lowering.lower_maxpool_n(args.maxpool)
    else:
        with open(args.cpwl, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        spec = CpwlSpec(
            right=tuple(zip(obj.get("r", ()), obj.get("a", ()))),
            left=tuple(zip(obj.get("l", ()), obj.get("t", ()))),
        )
        net = lowering.lower_cpwl_to_relu(spec)
    save_graph(net, args.output)
    return 0


def _cmd_eval(args) -> int:
    net = load_graph(args.graph)
    xs = _read_input_csv(args.input)
    outputs = forward_batch(net, xs).output
    lines = []
    for i, row in enumerate(np.atleast_2d(outputs)):
        cells = [_fmt(v) for v in row]
        if args.signatures:
            cells.append(signature(net, net.output_node, xs[i]).hex())
        lines.append(",".join(cells))
    _write(args.output, "\n".join(lines) + "\n")
    return 0


def _cmd_census(args) -> int:
    net = load_graph(args.graph)
    xs = _read_input_csv(args.input)
    if args.nodes:
        nodes = args.nodes.split(",")
        missing = [n for n in nodes if n not in net.node_dim]
        if missing:
            raise SystemExit(f"census: no such nodes {missing}")
    else:
        nodes = list(net.topo)
    lm = net.l_values()
    lines = ["layer,channel,region_count,multi_point_count,max_intra_dist"]
    for node in nodes:
        census = partition_census(net, node, xs)
        lines.append(
            f"{lm.l[node]},{node},{census.region_count},"
            f"{census.multi_point_count},{_fmt(census.max_intra_dist)}"
        )
    _write(args.output, "\n".join(lines) + "\n")
    return 0


def _cmd_stability(args) -> int:
    net = load_graph(args.graph)
    if args.scaled:
        net = scale_to_stability(net, args.norm)
    report = stability_certificate(net, args.norm)
    doc = report.to_dict()
    doc["scaled"] = bool(args.scaled)
    _write(args.output, json.dumps(doc, indent=2) + "\n")
    if args.sums_csv:
        spectral = stability_certificate(net, "spectral").sums
        frob = stability_certificate(net, "frobenius").sums
        lines = ["level,sum_spectral,sum_frobenius"]
        for n, (s, f) in enumerate(zip(spectral, frob), start=1):
            lines.append(f"{n},{_fmt(s)},{_fmt(f)}")
        _write(args.sums_csv, "\n".join(lines) + "\n")
    return 0


def _cmd_experiment(args) -> int:
    if args.what == "partition":
        cfg = PartitionConfig(
            layers=args.layers, dim=args.dim, samples=args.samples, seed=args.seed
        )
        _write(args.output, run_partition_experiment(cfg))
        return 0
    cfg = StabilityConfig(
        layers=args.layers,
        dim=args.dim,
        samples=args.samples,
        seed=args.seed,
        scaled=args.scaled,
        norm=args.norm,
    )
    gain_csv, sums_csv, report = run_stability_experiment(cfg)
    _write(args.output, gain_csv)
    if args.sums_csv:
        _write(args.sums_csv, sums_csv)
    if args.report:
        _write(args.report, json.dumps(report, indent=2) + "\n")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unrectify")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="construct a network and save it")
    p_build.add_argument(
        "kind",
        choices=["series", "fusion", "fusion-stack", "resnet", "attention", "lenet"],
    )
    p_build.add_argument("--layers", type=int, default=5)
    p_build.add_argument("--dim", type=int, default=14)
    p_build.add_argument("--seed", type=int, default=7)
    p_build.add_argument("--seq", type=int, default=4)
    p_build.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_build.add_argument("--channels", help="comma-separated channel graph files (fusion)")
    p_build.add_argument("--fuse", help="CSV with the fusion matrix (default: [I I ...])")
    p_build.add_argument("-o", "--output", required=True)
    p_build.set_defaults(func=_cmd_build)

    p_lower = sub.add_parser("lower", help="lower a CPWL spec or max-pool to relu arcs")
    group = p_lower.add_mutually_exclusive_group(required=True)
    group.add_argument("--cpwl", help="JSON file with r/a/l/t arrays")
    group.add_argument("--maxpool", type=int, help="max-pool block size")
    p_lower.add_argument("-o", "--output", required=True)
    p_lower.set_defaults(func=_cmd_lower)

    p_eval = sub.add_parser("eval", help="run a graph on CSV inputs")
    p_eval.add_argument("graph")
    p_eval.add_argument("--input", required=True)
    p_eval.add_argument("--signatures", action="store_true")
    p_eval.add_argument("-o", "--output", required=True)
    p_eval.set_defaults(func=_cmd_eval)

    p_census = sub.add_parser("census", help="region census per node")
    p_census.add_argument("graph")
    p_census.add_argument("--input", required=True)
    p_census.add_argument("--nodes", help="comma-separated node ids (default: all)")
    p_census.add_argument("-o", "--output", required=True)
    p_census.set_defaults(func=_cmd_census)

    p_stab = sub.add_parser("stability", help="stability certificate for a graph")
    p_stab.add_argument("graph")
    p_stab.add_argument("--norm", choices=["spectral", "frobenius"], default="spectral")
    p_stab.add_argument("--scaled", action="store_true")
    p_stab.add_argument("--sums-csv")
    p_stab.add_argument("-o", "--output", required=True)
    p_stab.set_defaults(func=_cmd_stability)

    p_exp = sub.add_parser("experiment", help="run a packaged experiment")
    p_exp.add_argument("what", choices=["partition", "gain"])
    p_exp.add_argument("--layers", type=int, default=5)
    p_exp.add_argument("--dim", type=int, default=None)
    p_exp.add_argument("--samples", type=int, default=None)
    p_exp.add_argument("--seed", type=int, default=7)
    p_exp.add_argument("--scaled", action="store_true")
    p_exp.add_argument("--norm", choices=["spectral", "frobenius"], default="frobenius")
    p_exp.add_argument("--sums-csv")
    p_exp.add_argument("--report")
    p_exp.add_argument("-o", "--output", required=True)
    p_exp.set_defaults(func=_cmd_experiment)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "experiment":
        if args.dim is None:
            args.dim = 14 if args.what == "partition" else 20
        if args.samples is None:
            args.samples = 5_000 if args.what == "partition" else 500
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
