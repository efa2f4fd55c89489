"""Command-line interface: fit, identify, simulate, evaluate, reproduce.

Exit codes: 0 on success (including a reproduce run skipped for missing
external data), 1 for I/O, configuration or input-validation problems, 2 for
sampler or identification failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, chainio, kernels
from .config import RunConfig, config_dict, load_config, serialize_config
from .datagen import (GeneratorSpec, SETUP_I_N, SETUP_II_N, default_sal_spec,
                      sample_gaussian_mixture, sample_sal_mixture,
                      setup_I, setup_II)
from .errors import LengthMismatch, NoMatchingDraws, SamplerError, SmmError
from .experiments import (fit_seeds, format_cell_report, k0_histogram,
                          run_benchmark, run_sim_cell)
from .metrics import adjusted_rand, misclassification_rate
from .model import Proportions, Variant, data_summaries, derive_hyperparameters
from .postprocess import identify, similarity_matrix
from .rng import RandomSeed
from .sampler import ChainConfig


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SMM_THREADS", "1")))
    except ValueError:
        return 1


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--K", type=int, help="maximum number of clusters")
    p.add_argument("--L", type=int, help="subcomponents per cluster")
    p.add_argument("--phi-b", type=float, dest="phi_b",
                   help="between-cluster variance fraction")
    p.add_argument("--phi-w", type=float, dest="phi_w",
                   help="between-subcomponent variance fraction")
    p.add_argument("--e0", type=float, help="cluster weight concentration")
    p.add_argument("--nu", type=float, help="shrinkage gamma shape/rate")
    p.add_argument("--variant", choices=[v.value for v in Variant],
                   help="hier: full hyperpriors; fixed: C0k and lambda pinned")
    p.add_argument("--burnin", type=int)
    p.add_argument("--iters", type=int, dest="iterations")
    p.add_argument("--thin", type=int)


def _build_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    for key in ("K", "L", "phi_b", "phi_w", "e0", "nu", "variant",
                "burnin", "iterations", "thin"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    if getattr(args, "data", None):
        overrides["data"] = args.data
    if getattr(args, "out", None):
        overrides["out"] = args.out
    if getattr(args, "seed", None):
        overrides["seeds"] = tuple(args.seed)
    if overrides:
        merged = config_dict(cfg)
        merged.update(overrides)
        cfg = RunConfig(**merged)
    return cfg


def cmd_fit(args) -> int:
    cfg = _build_config(args)
    if not cfg.data:
        print("fit: no data file given (--data or config `data`)", file=sys.stderr)
        return 1
    y, _, _ = chainio.read_data_csv(cfg.data)
    data = data_summaries(y)
    hyp = derive_hyperparameters(
        data, K=cfg.K, L=cfg.L, props=Proportions(cfg.phi_b, cfg.phi_w),
        e0=cfg.e0, nu=cfg.nu, variant=cfg.variant_enum)
    chain_cfg = ChainConfig(K=cfg.K, L=cfg.L, burnin=cfg.burnin,
                            iterations=cfg.iterations, thin=cfg.thin)
    chains = fit_seeds(data, hyp, chain_cfg, cfg.seeds, threads=args.threads)

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": __version__,
        "kernel_backend": kernels.active_backend(),
        "config": config_dict(cfg),
        "data_sha256": chainio.sha256_file(cfg.data),
        "seeds": {},
    }
    for seed, chain in zip(cfg.seeds, chains):
        name = f"chain_seed{seed}.ndjson"
        chainio.write_chain(out_dir / name, chain)
        hist = {int(v): int(c) for v, c in
                zip(*np.unique(chain.k0_trace, return_counts=True))}
        manifest["seeds"][str(seed)] = {
            "chain_file": name,
            "k0_histogram": hist,
            "k0_mode": int(max(hist, key=lambda k: (hist[k], -k))),
        }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    for seed in cfg.seeds:
        info = manifest["seeds"][str(seed)]
        print(f"seed {seed}: K0 mode {info['k0_mode']}  "
              f"histogram {info['k0_histogram']}")
    print(f"wrote {len(chains)} chain file(s) and manifest.json to {out_dir}")
    return 0


def cmd_identify(args) -> int:
    y, _, _ = chainio.read_data_csv(args.data)
    data = data_summaries(y)
    out_dir = Path(args.out) if args.out else Path(args.chain[0]).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    for chain_path in args.chain:
        chain = chainio.read_chain(chain_path)
        if chain.S.shape[1] != data.n:
            raise ValueError(f"chain {chain_path} has {chain.S.shape[1]} "
                             f"observations, data has {data.n}")
        model = identify(chain, data, seed=args.seed)
        stem = Path(chain_path).stem
        chainio.write_identified(out_dir / f"{stem}.identified.json", model)
        chainio.write_labels_csv(out_dir / f"{stem}.labels.csv", model)
        if args.similarity:
            sim = similarity_matrix(chain)
            chainio.write_similarity_csv(out_dir / f"{stem}.similarity.csv", sim)
        for msg in model.warnings:
            print(f"warning [{stem}]: {msg}", file=sys.stderr)
        print(f"{stem}: K0_hat={model.K0_hat}  M0={model.M0}  "
              f"M0_rho={model.M0_rho:.3f}  entropy={model.entropy:.3f}")
    return 0


def _load_spec_file(path) -> GeneratorSpec:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return GeneratorSpec(
        means=np.asarray(raw["means"], dtype=float),
        covs=np.asarray(raw["covs"], dtype=float),
        weights=np.asarray(raw["weights"], dtype=float),
        cluster_of_component=np.asarray(raw["cluster_of_component"],
                                        dtype=np.int64),
        skews=np.asarray(raw["skews"], dtype=float) if "skews" in raw else None)


def cmd_simulate(args) -> int:
    gen = args.generator
    seed = args.seed[0] if args.seed else 0
    if gen == "setup1":
        data, cluster, component = setup_I(seed)
    elif gen == "setup2":
        data, cluster, component = setup_II(seed)
    elif gen.startswith("gaussian:"):
        spec = _load_spec_file(gen.split(":", 1)[1])
        data, cluster, component = sample_gaussian_mixture(spec, args.n, seed)
    elif gen.startswith("sal:"):
        path = gen.split(":", 1)[1]
        spec = _load_spec_file(path) if path else default_sal_spec()
        data, cluster, component = sample_sal_mixture(spec, args.n, seed)
    else:
        print(f"simulate: unknown generator {gen!r} "
              "(expected setup1, setup2, gaussian:<spec.json>, sal:<spec.json>)",
              file=sys.stderr)
        return 1
    chainio.write_data_csv(args.out, data.y, cluster=cluster,
                           component=component)
    print(f"wrote {data.n} x {data.r} dataset to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    est = chainio.read_labels_csv(args.labels, prefer=("s_hat", "cluster",
                                                       "component", "label"))
    truth = chainio.read_labels_csv(args.truth, prefer=("cluster", "component",
                                                        "s_hat", "label"))
    payload = {
        "ari": adjusted_rand(est, truth),
        "error_rate": misclassification_rate(est, truth),
        "K_est": int(np.unique(est).size),
        "K_true": int(np.unique(truth).size),
    }
    text = json.dumps(payload, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_reproduce(args) -> int:
    threads = args.threads
    base = args.base_seed
    n_data = args.datasets
    if args.experiment == "simC1-cell":
        results = run_sim_cell("setup1", K=args.K or 10, L=args.L or 4,
                               phi_b=args.phi_b or 0.5, phi_w=args.phi_w or 0.1,
                               n_datasets=n_data, base_seed=base,
                               burnin=args.burnin or 4000,
                               iterations=args.iterations or 4000,
                               threads=threads)
        title = (f"simulation setup I cell: K={args.K or 10}, L={args.L or 4} "
                 f"({n_data} datasets)")
    elif args.experiment == "simC2-cell":
        results = run_sim_cell("setup2", K=args.K or 10, L=args.L or 4,
                               phi_b=args.phi_b or 0.5, phi_w=args.phi_w or 0.1,
                               n_datasets=n_data, base_seed=base,
                               burnin=args.burnin or 4000,
                               iterations=args.iterations or 4000,
                               threads=threads)
        title = (f"simulation setup II cell: phi_b={args.phi_b or 0.5}, "
                 f"phi_w={args.phi_w or 0.1} ({n_data} datasets)")
    elif args.experiment == "table1-row":
        if not args.data or not os.path.exists(args.data):
            print(f"table1-row: dataset {args.data!r} not found locally; "
                  "skipping (external data dependency)")
            return 0
        y, cluster, component = chainio.read_data_csv(args.data)
        truth = cluster if cluster is not None else component
        seeds = args.seed or list(range(5))
        results = run_benchmark(
            y, truth, seeds, K=args.K or 10, L=args.L or 4,
            phi_b=args.phi_b or 0.5, phi_w=args.phi_w or 0.1,
            variant=Variant(args.variant) if args.variant else Variant.HIERARCHICAL,
            burnin=args.burnin or 4000, iterations=args.iterations or 4000,
            threads=threads)
        title = f"benchmark row: {args.data} ({len(seeds)} seeds)"
    else:
        print(f"reproduce: unknown experiment {args.experiment!r}",
              file=sys.stderr)
        return 1
    print(format_cell_report(title, results))
    if args.out:
        payload = {"experiment": args.experiment,
                   "k0_histogram": k0_histogram(results),
                   "results": [vars(r) for r in results]}
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    return 0


def cmd_show_config(args) -> int:
    print(serialize_config(_build_config(args)), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smm",
        description="Sparse hierarchical mixture-of-mixtures clustering")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="run Gibbs chains and store them")
    p.add_argument("--data", help="data CSV (feature columns; "
                                  "component/cluster columns are ignored)")
    p.add_argument("--seed", type=int, action="append",
                   help="chain seed; repeat for multiple chains")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_model_flags(p)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("identify", help="postprocess stored chains")
    p.add_argument("--chain", action="append", required=True,
                   help="chain NDJSON file; repeatable")
    p.add_argument("--data", required=True, help="data CSV used for the fit")
    p.add_argument("--out", help="output directory (default: chain directory)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the point-process clustering")
    p.add_argument("--similarity", action="store_true",
                   help="also write the N x N co-clustering matrix")
    p.set_defaults(fn=cmd_identify)

    p = sub.add_parser("simulate", help="write a ground-truth dataset CSV")
    p.add_argument("--generator", required=True,
                   help="setup1 | setup2 | gaussian:<spec.json> | sal:<spec.json>")
    p.add_argument("--seed", type=int, action="append")
    p.add_argument("--n", type=int, default=500,
                   help="sample size for spec-file generators")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("evaluate", help="compare labels CSV against truth CSV")
    p.add_argument("--labels", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="also write the metrics JSON here")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("reproduce", help="rerun a paper-scale experiment")
    p.add_argument("--experiment", required=True,
                   choices=["simC1-cell", "simC2-cell", "table1-row"])
    p.add_argument("--datasets", type=int, default=10)
    p.add_argument("--base-seed", type=int, default=0, dest="base_seed")
    p.add_argument("--data", help="dataset CSV for table1-row")
    p.add_argument("--seed", type=int, action="append",
                   help="chain seeds for table1-row (default 0..4)")
    p.add_argument("--out", help="write a JSON summary here")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_model_flags(p)
    p.set_defaults(fn=cmd_reproduce)

    p = sub.add_parser("show-config", help="print the merged configuration")
    p.add_argument("--data")
    p.add_argument("--seed", type=int, action="append")
    p.add_argument("--out")
    _add_model_flags(p)
    p.set_defaults(fn=cmd_show_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SamplerError as exc:
        print(f"sampler failure: {exc}", file=sys.stderr)
        return 2
    except NoMatchingDraws as exc:
        print(f"identification failure: {exc}", file=sys.stderr)
        return 2
    except (LengthMismatch, SmmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
