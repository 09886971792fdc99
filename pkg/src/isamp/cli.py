"""Command-line interface.

Commands
--------
simulate-study   Monte Carlo comparison of the three estimators.
fit              Fit one model/method to a CSV survey dataset.
weights-dist     Estimate the population law of inclusion probabilities.
emit-plot-data   Regenerate plot/metrics CSVs from a stored run.json.

A JSON config file (--config) may supply any option; explicit flags
override file values.  ISAMP_THREADS caps the replicate worker pool.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .dataio import DatasetSpec, load_dataset
from .exceptions import DomainError, LoadError
from .fit import fit_posterior, fit_spline
from .harness import (ScenarioConfig, run_curve_study, run_study,
                      run_weight_dist_experiment)
from .model import make_linear_posterior, make_probit_posterior
from .report import emit_files, fit_payload, write_report
from .sampler import ChainConfig, Draws, summarize

SCENARIO_FLAGS = {"slr-skewed": "slr_skewed",
                  "slr-symmetric": "slr_symmetric",
                  "nonlinear": "nonlinear"}


def _split_csv(value):
    if not value:
        return ()
    return tuple(s.strip() for s in value.split(",") if s.strip())


def _merged(args, config, key, default=None):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    return config.get(key, default)


def _load_config(path):
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _split_rhat(chains):
    """Split R-hat per parameter over a list of equal-length draw matrices."""
    halves = []
    for values in chains:
        h = values.shape[0] // 2
        halves.extend([values[:h], values[h:2 * h]])
    stacked = np.stack(halves)  # (m, n, dim)
    m, n, _ = stacked.shape
    means = stacked.mean(axis=1)
    variances = stacked.var(axis=1, ddof=1)
    w = variances.mean(axis=0)
    b = n * means.var(axis=0, ddof=1)
    var_hat = (n - 1) / n * w + b / n
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(var_hat / w)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_simulate_study(args):
    config = _load_config(args.config)
    kind_flag = _merged(args, config, "scenario")
    if kind_flag not in SCENARIO_FLAGS:
        raise DomainError(f"--scenario must be one of {sorted(SCENARIO_FLAGS)}")
    scenario = ScenarioConfig(
        kind=SCENARIO_FLAGS[kind_flag],
        N=int(_merged(args, config, "N", 20000)),
        n=int(_merged(args, config, "n", 500)),
        M=int(_merged(args, config, "M", 200)),
        b_pi_true=float(_merged(args, config, "b-pi", 2.0)),
        base_seed=int(_merged(args, config, "seed", 0)),
        n_warmup=int(_merged(args, config, "warmup", 1000)),
        n_draws=int(_merged(args, config, "draws", 2000)),
    )
    out_dir = _merged(args, config, "out")
    if not out_dir:
        raise DomainError("--out directory is required")
    workers = _merged(args, config, "workers")
    workers = int(workers) if workers is not None else None
    t0 = time.perf_counter()
    if scenario.kind == "nonlinear":
        result = run_curve_study(scenario, workers=workers)
    else:
        result = run_study(scenario, workers=workers)
    wall = time.perf_counter() - t0
    cfg = {"scenario": kind_flag, "N": scenario.N, "n": scenario.n,
           "M": scenario.M, "b-pi": scenario.b_pi_true,
           "seed": scenario.base_seed, "warmup": scenario.n_warmup,
           "draws": scenario.n_draws}
    paths = write_report(result, out_dir, command="simulate-study",
                         config=cfg, wall_time_s=wall)
    for p in paths:
        print(p)
    return 0


def cmd_fit(args):
    config = _load_config(args.config)
    data_path = _merged(args, config, "data")
    if not data_path:
        raise DomainError("--data is required")
    out_dir = _merged(args, config, "out")
    if not out_dir:
        raise DomainError("--out directory is required")
    spec = DatasetSpec(
        path=data_path,
        response_column=_merged(args, config, "response", "y"),
        weight_column=_merged(args, config, "weight", "weight"),
        weight_kind=_merged(args, config, "weight-kind", "weight"),
        y_covariates=_split_csv(_merged(args, config, "y-covariates", "")),
        pi_covariates=_split_csv(_merged(args, config, "pi-covariates", "")),
        spline_column=_merged(args, config, "spline-col"),
        categorical_columns=_split_csv(_merged(args, config, "categorical", "")),
        log_columns=_split_csv(_merged(args, config, "log-columns", "")),
        log1p_columns=_split_csv(_merged(args, config, "log1p-columns", "")),
    )
    t0 = time.perf_counter()
    observations, report = load_dataset(spec)
    print(f"rows: {report.n_rows}, used: {report.n_used}, "
          f"dropped missing: {report.n_dropped_missing}, "
          f"dropped nonpositive weight: {report.n_dropped_weight}")
    model = _merged(args, config, "model", "linear")
    method = _merged(args, config, "method", "full")
    chain = ChainConfig(
        n_warmup=int(_merged(args, config, "warmup", 1000)),
        n_draws=int(_merged(args, config, "draws", 2000)),
    )
    seed = int(_merged(args, config, "seed", 0))
    n_chains = int(_merged(args, config, "chains", 1))
    root = np.random.SeedSequence((seed, 3))
    children = root.spawn(n_chains)

    y = np.array([o.y for o in observations])
    logpi = np.array([o.log_pi for o in observations])
    Xy = np.array([o.x_y for o in observations])
    Xpi = np.array([o.x_pi for o in observations])
    curve = None
    if model in ("linear", "probit"):
        maker = make_linear_posterior if model == "linear" else make_probit_posterior
        post = maker(y, logpi, Xy, Xpi, method=method)
        fits = [fit_posterior(post, chain, child) for child in children]
        chain_mats = [post.constrain(f.draws.values) for f in fits]
        report_names = post.constrained_names
        draw_objs = [f.draws for f in fits]
    elif model == "spline":
        xs = np.array([np.nan if o.x_spline is None else o.x_spline
                       for o in observations], dtype=float)
        if np.any(np.isnan(xs)):
            raise DomainError("spline model requires --spline-col")
        b = int(_merged(args, config, "spline-b", 8))
        k = int(_merged(args, config, "spline-k", 4))
        fits = [fit_spline(y, logpi, xs, chain, child, b=b, k=k,
                           extra_design=Xy[:, 1:], Xpi=Xpi, method=method)
                for child in children]
        chain_mats = [f.report_draws for f in fits]
        report_names = fits[0].report_names
        draw_objs = [f.draws for f in fits]
        grid = np.linspace(fits[0].basis.x_min, fits[0].basis.x_max, 101)
        curves = np.vstack([f.curve_draws(grid) for f in fits])
        lo, hi = np.quantile(curves, [0.025, 0.975], axis=0, method="linear")
        curve = {"x": grid, "mean": curves.mean(axis=0), "lo": lo, "hi": hi}
    else:
        raise DomainError(f"unknown model: {model!r}")

    all_values = np.vstack(chain_mats)
    merged = Draws(values=all_values, names=report_names,
                   accept_rate=float(np.mean([d.accept_rate for d in draw_objs])),
                   divergence_count=sum(d.divergence_count for d in draw_objs))
    summary = summarize(merged)
    diagnostics = {"accept_rate": merged.accept_rate,
                   "divergences": merged.divergence_count,
                   "chains": n_chains}
    if n_chains > 1:
        rhat = _split_rhat(chain_mats)
        diagnostics["split_rhat"] = {
            name: float(r) for name, r in zip(report_names, rhat)}
        worst = max(diagnostics["split_rhat"].values())
        print(f"max split R-hat: {worst:.4f}")
    if merged.flagged:
        print(f"warning: {merged.divergence_count} divergent iterations",
              file=sys.stderr)
    payload = fit_payload(summary, method=method, model=model, curve=curve,
                          diagnostics=diagnostics)
    wall = time.perf_counter() - t0
    cfg = {"data": data_path, "model": model, "method": method, "seed": seed,
           "warmup": chain.n_warmup, "draws": chain.n_draws, "chains": n_chains,
           "response": spec.response_column, "weight": spec.weight_column,
           "weight-kind": spec.weight_kind}
    paths = write_report(payload, out_dir, command="fit", config=cfg,
                         wall_time_s=wall)
    for p in paths:
        print(p)
    return 0


def cmd_weights_dist(args):
    config = _load_config(args.config)
    out_dir = _merged(args, config, "out")
    if not out_dir:
        raise DomainError("--out directory is required")
    N = int(_merged(args, config, "N", 100000))
    n = int(_merged(args, config, "n", 100))
    seed = int(_merged(args, config, "seed", 0))
    chain = ChainConfig(
        n_warmup=int(_merged(args, config, "warmup", 1000)),
        n_draws=int(_merged(args, config, "draws", 2000)),
    )
    pi_scale = float(_merged(args, config, "pi-scale", 1.0))
    t0 = time.perf_counter()
    result = run_weight_dist_experiment(N, n, seed=seed, chain=chain,
                                        pi_scale=pi_scale)
    wall = time.perf_counter() - t0
    cfg = {"N": N, "n": n, "seed": seed, "warmup": chain.n_warmup,
           "draws": chain.n_draws, "pi-scale": pi_scale}
    paths = write_report(result, out_dir, command="weights-dist", config=cfg,
                         wall_time_s=wall)
    for p in paths:
        print(p)
    return 0


def cmd_emit_plot_data(args):
    run_dir = args.run
    path = os.path.join(run_dir, "run.json")
    if not os.path.exists(path):
        raise LoadError(f"no run.json under {run_dir}")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    paths = emit_files(doc["payload"], run_dir)
    for p in paths:
        print(p)
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="isamp",
        description="Bayesian estimation under informative survey sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-study", help="run a Monte Carlo study")
    p.add_argument("--config")
    p.add_argument("--scenario", choices=sorted(SCENARIO_FLAGS))
    p.add_argument("--b-pi", type=float, dest="b_pi")
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate_study)

    p = sub.add_parser("fit", help="fit a model to a CSV dataset")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--model", choices=["linear", "probit", "spline"])
    p.add_argument("--method", choices=["full", "pseudo", "ignore"])
    p.add_argument("--response")
    p.add_argument("--weight")
    p.add_argument("--weight-kind", choices=["weight", "inclusion_prob"],
                   dest="weight_kind")
    p.add_argument("--y-covariates", dest="y_covariates")
    p.add_argument("--pi-covariates", dest="pi_covariates")
    p.add_argument("--spline-col", dest="spline_col")
    p.add_argument("--spline-b", type=int, dest="spline_b")
    p.add_argument("--spline-k", type=int, dest="spline_k")
    p.add_argument("--categorical")
    p.add_argument("--log-columns", dest="log_columns")
    p.add_argument("--log1p-columns", dest="log1p_columns")
    p.add_argument("--warmup", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("weights-dist",
                       help="inclusion-probability distribution experiment")
    p.add_argument("--config")
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--pi-scale", type=float, dest="pi_scale")
    p.add_argument("--out")
    p.set_defaults(func=cmd_weights_dist)

    p = sub.add_parser("emit-plot-data",
                       help="regenerate plot CSVs from a stored run")
    p.add_argument("--run", required=True)
    p.set_defaults(func=cmd_emit_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, LoadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
