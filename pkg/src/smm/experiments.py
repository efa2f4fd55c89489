"""Experiment drivers: multi-seed fits and the generate/fit/identify/evaluate
loops behind the `reproduce` command and the acceptance suite.

Chains for different seeds (or generated datasets) are independent, so they
run in a process pool; results are collected in seed order and are identical
whatever the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datagen import setup_I, setup_II
from .metrics import adjusted_rand, misclassification_rate
from .model import (DataSet, FixedHyperparameters, Proportions, Variant,
                    data_summaries, derive_hyperparameters)
from .postprocess import identify
from .rng import RandomSeed
from .sampler import ChainConfig, ChainOutput, run_chain


def _fit_one(payload) -> ChainOutput:
    data, hyp, cfg = payload
    return run_chain(data, hyp, cfg)


def _pool_map(fn, payloads, threads: int):
    if threads <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, payloads))


def fit_seeds(data: DataSet, hyp: FixedHyperparameters, cfg: ChainConfig,
              seeds, threads: int = 1) -> list[ChainOutput]:
    """One chain per seed (stream 0), in seed order."""
    payloads = [(data, hyp,
                 ChainConfig(K=cfg.K, L=cfg.L, burnin=cfg.burnin,
                             iterations=cfg.iterations, thin=cfg.thin,
                             seed=RandomSeed(int(s), 0)))
                for s in seeds]
    return _pool_map(_fit_one, payloads, threads)


@dataclass
class CellResult:
    """Outcome of one generated dataset within a simulation cell."""

    seed: int
    K0_hat: int
    ari: float
    error_rate: float
    M0_rho: float
    entropy: float


def _run_cell_one(payload) -> CellResult:
    (generator, seed, K, L, phi_b, phi_w, e0, nu, variant, burnin,
     iterations) = payload
    gen = {"setup1": setup_I, "setup2": setup_II}[generator]
    data, truth, _ = gen(seed)
    hyp = derive_hyperparameters(data, K=K, L=L,
                                 props=Proportions(phi_b, phi_w),
                                 e0=e0, nu=nu, variant=variant)
    cfg = ChainConfig(K=K, L=L, burnin=burnin, iterations=iterations,
                      seed=RandomSeed(seed, 0))
    chain = run_chain(data, hyp, cfg)
    model = identify(chain, data, seed=seed)
    return CellResult(seed=seed, K0_hat=model.K0_hat,
                      ari=adjusted_rand(model.S_hat, truth),
                      error_rate=misclassification_rate(model.S_hat, truth),
                      M0_rho=model.M0_rho, entropy=model.entropy)


def run_sim_cell(generator: str, K: int, L: int, phi_b: float, phi_w: float,
                 n_datasets: int = 10, base_seed: int = 0,
                 burnin: int = 4000, iterations: int = 4000,
                 e0: float = 0.001, nu: float = 10.0,
                 variant: Variant = Variant.HIERARCHICAL,
                 threads: int = 1) -> list[CellResult]:
    """Generate/fit/identify/evaluate over ``n_datasets`` fresh datasets
    (seeds base_seed .. base_seed+n_datasets-1)."""
    if generator not in ("setup1", "setup2"):
        raise ValueError(f"unknown generator {generator!r}")
    payloads = [(generator, base_seed + d, K, L, phi_b, phi_w, e0, nu,
                 variant, burnin, iterations) for d in range(n_datasets)]
    return _pool_map(_run_cell_one, payloads, threads)


def _run_dataset_one(payload) -> CellResult:
    (y, truth, seed, K, L, phi_b, phi_w, e0, nu, variant, burnin,
     iterations) = payload
    data = data_summaries(y)
    hyp = derive_hyperparameters(data, K=K, L=L,
                                 props=Proportions(phi_b, phi_w),
                                 e0=e0, nu=nu, variant=variant)
    cfg = ChainConfig(K=K, L=L, burnin=burnin, iterations=iterations,
                      seed=RandomSeed(seed, 0))
    chain = run_chain(data, hyp, cfg)
    model = identify(chain, data, seed=seed)
    if truth is None:
        ari, err = float("nan"), float("nan")
    else:
        ari = adjusted_rand(model.S_hat, truth)
        err = misclassification_rate(model.S_hat, truth)
    return CellResult(seed=seed, K0_hat=model.K0_hat, ari=ari,
                      error_rate=err, M0_rho=model.M0_rho,
                      entropy=model.entropy)


def run_benchmark(y: np.ndarray, truth, seeds, K: int = 10, L: int = 4,
                  phi_b: float = 0.5, phi_w: float = 0.1, e0: float = 0.001,
                  nu: float = 10.0, variant: Variant = Variant.HIERARCHICAL,
                  burnin: int = 4000, iterations: int = 4000,
                  threads: int = 1) -> list[CellResult]:
    """Fit one fixed dataset across several chain seeds."""
    payloads = [(y, truth, int(s), K, L, phi_b, phi_w, e0, nu, variant,
                 burnin, iterations) for s in seeds]
    return _pool_map(_run_dataset_one, payloads, threads)


def k0_histogram(results) -> dict:
    vals, counts = np.unique([r.K0_hat for r in results], return_counts=True)
    return {int(v): int(c) for v, c in zip(vals, counts)}


def format_k0_histogram(hist: dict) -> str:
    """Paper-style layout: mode first, frequency in parentheses."""
    items = sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))
    return " / ".join(f"{k}({c})" for k, c in items)


def format_cell_report(title: str, results) -> str:
    lines = [title,
             f"  K0_hat: {format_k0_histogram(k0_histogram(results))}"]
    aris = [r.ari for r in results if not np.isnan(r.ari)]
    errs = [r.error_rate for r in results if not np.isnan(r.error_rate)]
    if aris:
        lines.append(f"  mean adj. Rand: {np.mean(aris):.2f}   "
                     f"mean error rate: {np.mean(errs):.2f}")
    lines.append("  per dataset:")
    for res in results:
        extra = "" if np.isnan(res.ari) else \
            f"  adj={res.ari:.2f}  er={res.error_rate:.2f}"
        lines.append(f"    seed {res.seed}: K0_hat={res.K0_hat}{extra}"
                     f"  (M0_rho={res.M0_rho:.2f})")
    return "\n".join(lines)
