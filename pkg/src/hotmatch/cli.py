"""Command line interface: match, sweep, gen, dump-relational."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .graphs import Alignment, load_alignment, load_graph, save_graph
from .gw import THREADS_ENV_VAR
from .metrics import node_correctness
from .pipeline import (
    DhotConfig,
    linear_fusion_baseline,
    match,
    result_to_json,
    single_modal_baseline,
)
from .relational import build_relational_set
from .sweep import METHODS, run_noise_sweep
from .synthetic import KINDS, generate_synthetic

CONFIG_FLAGS = (
    ("--k", "k_modalities", int, "number of relational modalities"),
    ("--epochs", "epochs", int, "alternating epochs"),
    ("--lambda-low", "lambda_low", float, "node-level proximal regularization"),
    ("--outer-iters", "outer_iters", int, "outer proximal iterations per pair"),
    ("--inner-iters", "inner_iters", int, "Sinkhorn sweeps per outer iteration"),
    ("--lambda-up", "lambda_up", float, "modality-level entropic regularization"),
    ("--sinkhorn-iters", "sinkhorn_iters", int, "modality-level Sinkhorn sweeps"),
    ("--gamma", "gamma", float, "marginal step size (0 freezes marginals)"),
    ("--kl-weight", "kl_weight", float, "weight of the KL pull toward uniform marginals"),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    for flag, _, typ, help_text in CONFIG_FLAGS:
        parser.add_argument(flag, type=typ, default=None, help=help_text)
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--highpass", action="store_true", default=None,
                        help="append the high-pass modality")
    parser.add_argument("--no-normalize", action="store_true", default=None,
                        help="skip per-modality max-abs rescaling")
    parser.add_argument("--no-warm-start", action="store_true", default=None,
                        help="restart every pair from the independence coupling each epoch")
    parser.add_argument("--seed-from-fusion", action="store_true", default=None,
                        help="seed all pairs from the linear-fusion plan")
    parser.add_argument("--seed", type=int, default=None, help="run seed")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker threads for pair solves (or env {THREADS_ENV_VAR})")


def _build_config(args: argparse.Namespace) -> DhotConfig:
    data: dict = {}
    if args.config is not None:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    cfg = DhotConfig.from_dict(data)
    for flag, attr, _, _ in CONFIG_FLAGS:
        value = getattr(args, flag.lstrip("-").replace("-", "_"))
        if value is not None:
            setattr(cfg, attr, value)
    if args.highpass:
        cfg.highpass = True
    if args.no_normalize:
        cfg.normalize_relational = False
    if args.no_warm_start:
        cfg.warm_start = False
    if args.seed_from_fusion:
        cfg.seed_from_fusion = True
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.thread_count = args.threads
    cfg.__post_init__()  # re-validate after overrides
    return cfg


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv_matrix(path: Path, matrix: np.ndarray) -> None:
    np.savetxt(path, np.asarray(matrix), delimiter=",")


def cmd_match(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    gs = load_graph(args.source_edges, args.source_attrs)
    gt = load_graph(args.target_edges, args.target_attrs)
    truth: Alignment | None = None
    if args.truth is not None:
        truth = load_alignment(args.truth, gs, gt)
    start = time.perf_counter()
    if args.method == "dhot":
        result = match(gs, gt, cfg)
        extra: dict = {}
    elif args.method == "adjacency":
        result = match(gs, gt, replace(cfg, k_modalities=1, highpass=False))
        extra = {}
    elif args.method in ("single_modal", "single_modal_diag"):
        pair, result = single_modal_baseline(
            gs, gt, cfg, diag_only=args.method.endswith("diag")
        )
        extra = {"best_pair": list(pair)}
    elif args.method == "linear_fusion":
        fused_distance, result = linear_fusion_baseline(gs, gt, cfg)
        extra = {"fused_distance": fused_distance}
    else:
        raise SystemExit(f"unknown method {args.method!r}; available methods: {', '.join(METHODS)}")
    runtime = time.perf_counter() - start
    out = _out_dir(args)
    (out / "result.json").write_text(result_to_json(result, cfg), encoding="utf-8")
    _write_csv_matrix(out / "final_plan.csv", result.final_plan.matrix)
    _write_csv_matrix(out / "theta.csv", result.coupling.theta)
    with open(out / "marginals.csv", "w", encoding="utf-8") as fh:
        fh.write("epoch,side," + ",".join(f"v{i + 1}" for i in range(result.coupling.nu_s.size)) + "\n")
        for epoch, (nu_s, nu_t) in enumerate(result.marginal_history):
            fh.write(f"{epoch},source," + ",".join(repr(float(v)) for v in nu_s) + "\n")
            fh.write(f"{epoch},target," + ",".join(repr(float(v)) for v in nu_t) + "\n")
    if args.dump_plans:
        k = result.gw_matrix.k
        for p in range(k):
            for q in range(k):
                _write_csv_matrix(
                    out / f"plan_p{p + 1}_q{q + 1}.csv", result.gw_matrix.plans[p][q].matrix
                )
    report = {
        "method": args.method,
        "runtime_seconds": runtime,
        "hot_objective": result.hot_objective,
        "seed": cfg.seed,
        **extra,
    }
    if truth is not None:
        report["nc_at"] = {
            str(k): node_correctness(result.final_plan, truth, k) for k in (1, 5, 10)
        }
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2), encoding="utf-8"
    )
    print(f"hot_objective={result.hot_objective:.6g} runtime={runtime:.2f}s -> {out}")
    if "nc_at" in report:
        nc = report["nc_at"]
        print(f"NC@1={nc['1']:.2f} NC@5={nc['5']:.2f} NC@10={nc['10']:.2f}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    if args.edges is not None:
        base = load_graph(args.edges, args.attrs)
    else:
        base = generate_synthetic(args.kind, args.nodes, args.attr_dim, args.gen_seed)
    levels = [float(x) for x in args.levels.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    methods = args.methods.split(",")
    out = _out_dir(args)
    reports = run_noise_sweep(
        base, levels, seeds, methods, cfg, permute=args.permute,
        csv_path=out / "sweep.csv",
    )
    for r in reports:
        print(
            f"{r.method} E={r.noise_percent:g} seed={r.seed} "
            f"NC@1={r.nc_at[1]:.2f} NC@5={r.nc_at[5]:.2f} NC@10={r.nc_at[10]:.2f} "
            f"({r.runtime_seconds:.2f}s)"
        )
    print(f"wrote {len(reports)} rows -> {out / 'sweep.csv'}")
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    g = generate_synthetic(args.kind, args.nodes, args.attr_dim, args.seed)
    out = _out_dir(args)
    save_graph(g, out / "edges.txt", out / "attrs.csv")
    print(f"{args.kind} graph: {g.node_count} nodes, {g.edge_count} edges -> {out}")
    return 0


def cmd_dump_relational(args: argparse.Namespace) -> int:
    g = load_graph(args.edges, args.attrs)
    rel = build_relational_set(
        g, args.k, highpass=bool(args.highpass), normalize=not args.no_normalize
    )
    out = _out_dir(args)
    for i, (mat, name) in enumerate(zip(rel.matrices, rel.modality_names)):
        _write_csv_matrix(out / f"D{i + 1}_{name}.csv", mat)
    print(f"wrote {rel.k} relational matrices -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hotmatch",
        description="Match nodes of two attributed graphs with hierarchical "
        "optimal transport over multi-modal relational matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_match = sub.add_parser("match", help="match two graphs")
    p_match.add_argument("--source-edges", required=True, type=Path)
    p_match.add_argument("--source-attrs", type=Path, default=None)
    p_match.add_argument("--target-edges", required=True, type=Path)
    p_match.add_argument("--target-attrs", type=Path, default=None)
    p_match.add_argument("--truth", type=Path, default=None,
                         help="two-column TSV of ground-truth id pairs")
    p_match.add_argument("--method", default="dhot", choices=METHODS)
    p_match.add_argument("--dump-plans", action="store_true",
                         help="write every per-pair plan as CSV")
    p_match.add_argument("--output", default="hotmatch-out", help="output directory")
    _add_config_flags(p_match)
    p_match.set_defaults(func=cmd_match)

    p_sweep = sub.add_parser("sweep", help="noise-robustness sweep on one base graph")
    p_sweep.add_argument("--edges", type=Path, default=None, help="base graph edge list")
    p_sweep.add_argument("--attrs", type=Path, default=None)
    p_sweep.add_argument("--kind", default="sbm", choices=KINDS,
                         help="synthetic base graph kind (when --edges is absent)")
    p_sweep.add_argument("--nodes", type=int, default=100)
    p_sweep.add_argument("--attr-dim", type=int, default=4)
    p_sweep.add_argument("--gen-seed", type=int, default=0,
                         help="seed for the synthetic base graph")
    p_sweep.add_argument("--levels", default="10,30,60", help="comma-separated E percentages")
    p_sweep.add_argument("--seeds", default="0,1,2", help="comma-separated run seeds")
    p_sweep.add_argument("--methods", default="dhot", help="comma-separated method names")
    p_sweep.add_argument("--permute", action="store_true", help="relabel the noisy copy")
    p_sweep.add_argument("--output", default="hotmatch-out", help="output directory")
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("gen", help="generate a synthetic graph")
    p_gen.add_argument("--kind", default="sbm", choices=KINDS)
    p_gen.add_argument("--nodes", type=int, required=True)
    p_gen.add_argument("--attr-dim", type=int, default=4)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--output", default="hotmatch-out", help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    p_dump = sub.add_parser("dump-relational", help="write a graph's relational matrices")
    p_dump.add_argument("--edges", required=True, type=Path)
    p_dump.add_argument("--attrs", type=Path, default=None)
    p_dump.add_argument("--k", type=int, default=3)
    p_dump.add_argument("--highpass", action="store_true")
    p_dump.add_argument("--no-normalize", action="store_true")
    p_dump.add_argument("--output", default="hotmatch-out", help="output directory")
    p_dump.set_defaults(func=cmd_dump_relational)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
