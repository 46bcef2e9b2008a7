"""Command-line interface: estimate, simulate, demo, validate, diagnose, irf.

Exit codes: 0 success (estimate additionally requires a passing convergence
verdict), 2 estimation finished but the verdict failed (results are still
written), 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .. import __version__
from ..bayes import build_data_matrices, posterior_update
from ..demo import UnidentifiedNormalTarget, analytic_marginal, simulate_observations
from ..diagnostics import (acf, compute_report, convergence_verdict, ess,
                           prefix_curves, required_multivariate_ess, split_rhat)
from ..errors import SvarError, UnstableParameters
from ..oracle import accept_reject
from ..sampler import SamplerConfig, initialize, run_chains
from ..target import flatten_structural, make_target, unflatten_structural
from ..transforms import compile_schema
from ..varmodel import (ModelShape, ReducedFormParams, irf, is_stable,
                        structural_to_reduced)
from . import runio
from .runio import RunConfig, read_data_csv
from .schema_format import parse_schema_text

PRESETS = {
    "supply-demand": {
        "var_names": ["q", "p"],
        "intercept": [0.0, 0.0],
        "lags": [[[0.5, 0.1], [0.1, 0.4]]],
        "impact": [[1.0, 0.5], [-0.8, 0.7]],
    },
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SvarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svarhmc",
        description="Sign/ranking/bound/zero-identified Bayesian SVAR estimation by "
                    "reparameterized HMC",
    )
    sub = parser.add_subparsers(required=True)

    p_est = sub.add_parser("estimate", help="run the full estimation pipeline")
    p_est.add_argument("--config", required=True)
    p_est.add_argument("--seed", type=int, default=None)
    p_est.add_argument("--chains", type=int, default=None)
    p_est.add_argument("--out", default=None)
    p_est.set_defaults(func=cmd_estimate)

    p_sim = sub.add_parser("simulate", help="simulate a stable VAR dataset")
    p_sim.add_argument("--preset", choices=sorted(PRESETS))
    p_sim.add_argument("--params", help="JSON file with intercept/lags/impact")
    p_sim.add_argument("--n-obs", type=int, default=200)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--burn-in", type=int, default=200)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_demo = sub.add_parser("demo-unidentified-normal",
                            help="set-identified mean-decomposition demo")
    p_demo.add_argument("--k", type=int, choices=(2, 1000), required=True)
    p_demo.add_argument("--n-obs", type=int, default=1000)
    p_demo.add_argument("--iters", type=int, default=10_000)
    p_demo.add_argument("--warmup", type=int, default=2000)
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--metric", choices=("auto", "diag", "dense"), default="auto")
    p_demo.add_argument("--target-accept", type=float, default=None)
    p_demo.add_argument("--max-tree-depth", type=int, default=10)
    p_demo.add_argument("--out", required=True)
    p_demo.set_defaults(func=cmd_demo)

    p_val = sub.add_parser("validate",
                           help="side-by-side HMC vs accept-reject percentiles")
    p_val.add_argument("--config", required=True)
    p_val.add_argument("--oracle-draws", type=int, default=10_000)
    p_val.add_argument("--max-tries", type=int, default=10_000_000)
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument("--out", default=None)
    p_val.set_defaults(func=cmd_validate)

    p_diag = sub.add_parser("diagnose", help="prefix R-hat/ESS curves from a draws file")
    p_diag.add_argument("--draws", required=True)
    p_diag.add_argument("--stride", type=int, default=1000)
    p_diag.add_argument("--params", nargs="*", default=None)
    p_diag.add_argument("--out", required=True)
    p_diag.set_defaults(func=cmd_diagnose)

    p_irf = sub.add_parser("irf", help="recompute IRF quantiles from structural draws")
    p_irf.add_argument("--draws", required=True)
    p_irf.add_argument("--manifest", required=True)
    p_irf.add_argument("--horizon", type=int, required=True)
    p_irf.add_argument("--out", required=True)
    p_irf.set_defaults(func=cmd_irf)
    return parser


def _resolve_metric(cfg_metric: str, target) -> str:
    return target.preferred_metric if cfg_metric == "auto" else cfg_metric


def run_estimation(cfg: RunConfig):
    """Shared pipeline: data → posterior → target → chains → structural draws."""
    dataset = read_data_csv(cfg.data, cfg.columns, cfg.date_column, cfg.exog_columns)
    schema = cfg.load_schema()
    if schema.shape.n_vars != len(dataset.columns):
        raise SvarError(
            f"schema has {schema.shape.n_vars} variables, data selection has "
            f"{len(dataset.columns)}"
        )
    shape = schema.shape
    data = build_data_matrices(dataset.values, shape, dataset.exog)
    posterior = posterior_update(cfg.build_prior(shape), data)
    parameterization = cfg.parameterization
    if parameterization == "auto":
        parameterization = "noncentered" if shape.restricted_horizon == 0 else "centered"
    target = make_target(schema, posterior, shape, parameterization)
    sampler_cfg = SamplerConfig(
        warmup_iters=cfg.sampler.warmup_iters,
        sampling_iters=cfg.sampler.sampling_iters,
        target_accept=cfg.sampler.target_accept,
        metric_kind=_resolve_metric(cfg.metric, target),
        max_tree_depth=cfg.sampler.max_tree_depth,
        init_step_size=cfg.sampler.init_step_size,
        seed=cfg.sampler.seed,
        n_chains=cfg.sampler.n_chains,
    )

    def init(chain_idx, rng):
        return initialize(schema, posterior, shape, rng, parameterization=parameterization)

    chains = run_chains(target, sampler_cfg, init)
    return dataset, schema, shape, posterior, target, sampler_cfg, chains


def _structural_and_irfs(target, schema, draws, horizon):
    """One pass over θ draws: flattened structural values and IRFs to `horizon`."""
    comp = compile_schema(schema)
    n = schema.shape.n_vars
    s = draws.shape[0]
    flat = np.empty((s, comp.dim))
    irfs = np.empty((s, horizon + 1, n, n))
    for i in range(s):
        st = target.structural(draws[i])
        flat[i] = flatten_structural(comp, st)
        rf = structural_to_reduced(st)
        irfs[i] = irf(rf, st.impact, horizon)
    return flat, irfs


def cmd_estimate(args) -> int:
    cfg = RunConfig.from_file(args.config, overrides={
        "seed": args.seed, "chains": args.chains, "out": args.out,
    })
    t0 = time.time()
    dataset, schema, shape, posterior, target, sampler_cfg, chains = run_estimation(cfg)
    comp = compile_schema(schema)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    theta_per_chain = [c.draws for c in chains]
    runio.write_draws_csv(out / "theta_draws.csv", target.parameter_names, theta_per_chain)
    np.save(out / "theta_draws.npy", np.stack(theta_per_chain))
    runio.write_draws_csv(out / "warmup_theta_draws.csv", target.parameter_names,
                          [c.warmup_draws for c in chains])

    structural_per_chain = []
    irfs_all = []
    for c in chains:
        flat, irfs_c = _structural_and_irfs(target, schema, c.draws, cfg.horizon)
        structural_per_chain.append(flat)
        irfs_all.append(irfs_c)
    runio.write_draws_csv(out / "structural_draws.csv", target.structural_names,
                          structural_per_chain)
    np.save(out / "structural_draws.npy", np.stack(structural_per_chain))
    warmup_structural = [
        _structural_and_irfs(target, schema, c.warmup_draws, 0)[0] if c.warmup_draws.size
        else np.zeros((0, comp.dim))
        for c in chains
    ]
    runio.write_draws_csv(out / "warmup_structural_draws.csv", target.structural_names,
                          warmup_structural)

    _write_trace(out / "trace.csv", chains)
    _write_telemetry(out / "telemetry.csv", chains)

    runio.write_json(out / "irf_quantiles.json", runio.irf_quantiles_payload(
        np.concatenate(irfs_all), schema.var_names, schema.shock_names,
    ))

    monitored = [i for i, name in enumerate(target.structural_names) if name.startswith("B.")]
    restricted_cols = [j for j in range(shape.n_vars) if j not in comp.free_columns]
    mvess_cols = [
        pos for pos, cell in enumerate(comp.slots)
        if cell[0] == 0 and cell[2] in restricted_cols
    ]
    stacked = np.stack(structural_per_chain)
    report = compute_report(
        stacked[:, :, monitored], [target.structural_names[i] for i in monitored],
        mvess_columns=[monitored.index(c) for c in mvess_cols if c in monitored] or None,
        acf_max_lag=min(50, sampler_cfg.sampling_iters - 1),
    )
    verdict = convergence_verdict(report)
    diag_payload = report.to_dict()
    diag_payload["verdict"] = {"passed": verdict.passed, "reasons": verdict.reasons}
    if report.multivariate_ess is not None:
        d = len(mvess_cols)
        diag_payload["required_multivariate_ess"] = {
            "precision": 0.05, "confidence": 0.95, "dimension": d,
            "value": required_multivariate_ess(d),
        }
    runio.write_json(out / "diagnostics.json", diag_payload)

    manifest = {
        "schema_version": runio.SCHEMA_VERSION,
        "command": "estimate",
        "config": cfg.echo(),
        "versions": {"svarhmc": __version__, "numpy": np.__version__},
        "wall_time_s": time.time() - t0,
        "step_sizes": [c.step_size for c in chains],
        "divergences": [int(c.divergences.sum()) for c in chains],
    }
    runio.write_json(out / "manifest.json", manifest)

    print(f"wrote {out} ({'converged' if verdict.passed else 'NOT converged'})")
    for reason in verdict.reasons[:10]:
        print(f"  {reason}")
    return 0 if verdict.passed else 2


def _write_trace(path, chains):
    with open(path, "w", newline="") as fh:
        fh.write("chain,iteration,warmup,log_density\n")
        for c in chains:
            for i, v in enumerate(c.warmup_log_densities):
                fh.write(f"{c.chain_index},{i},1,{v:.17g}\n")
            n_w = len(c.warmup_log_densities)
            for i, v in enumerate(c.log_densities):
                fh.write(f"{c.chain_index},{n_w + i},0,{v:.17g}\n")


def _write_telemetry(path, chains):
    with open(path, "w", newline="") as fh:
        fh.write("chain,iteration,tree_depth,accept_stat,divergent,energy\n")
        for c in chains:
            for i in range(len(c.log_densities)):
                fh.write(
                    f"{c.chain_index},{i},{c.tree_depths[i]},{c.accept_stats[i]:.17g},"
                    f"{int(c.divergences[i])},{c.energies[i]:.17g}\n"
                )


def cmd_simulate(args) -> int:
    if bool(args.preset) == bool(args.params):
        raise SvarError("simulate needs exactly one of --preset / --params")
    spec = PRESETS[args.preset] if args.preset else json.loads(Path(args.params).read_text())
    intercept = np.asarray(spec["intercept"], dtype=float)
    lags = np.asarray(spec["lags"], dtype=float)
    impact = np.asarray(spec["impact"], dtype=float)
    var_names = spec.get("var_names") or [f"y{i + 1}" for i in range(len(intercept))]
    n = len(intercept)
    rf = ReducedFormParams(intercept=intercept, exog=np.zeros((n, 0)), lags=lags,
                           sigma=impact @ impact.T)
    if not is_stable(rf):
        raise UnstableParameters("companion-matrix spectral radius is not below one")

    rng = np.random.default_rng(args.seed)
    p = lags.shape[0]
    total = args.n_obs + args.burn_in + p
    y = np.zeros((total, n))
    for t in range(p, total):
        acc = intercept.copy()
        for i in range(p):
            acc += lags[i] @ y[t - 1 - i]
        y[t] = acc + impact @ rng.standard_normal(n)
    y = y[p + args.burn_in:]

    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        fh.write(",".join(var_names) + "\n")
        for row in y:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(f"wrote {out} ({args.n_obs} rows)")
    return 0


def cmd_demo(args) -> int:
    t0 = time.time()
    rng = np.random.default_rng(args.seed)
    obs = simulate_observations(args.k, args.n_obs, rng)
    x_bar = float(obs.mean())
    target = UnidentifiedNormalTarget(args.k, x_bar, args.n_obs)

    # calibrated defaults: the flat ridge of the k=2 case rotates its stiff
    # direction too much for one dense metric, so a diagonal metric with a
    # high acceptance target is used there; for large k the stiff direction
    # is essentially fixed and a dense metric whitens it away
    metric = args.metric
    if metric == "auto":
        metric = "diag" if args.k == 2 else "dense"
    delta = args.target_accept
    if delta is None:
        delta = 0.95 if args.k == 2 else 0.9
    cfg = SamplerConfig(
        warmup_iters=args.warmup, sampling_iters=args.iters, seed=args.seed,
        metric_kind=metric, max_tree_depth=args.max_tree_depth, target_accept=delta,
    )
    # start at the identified set's center: equal split of the sample mean
    mu0 = np.full(args.k, x_bar / args.k)
    u = (mu0 + 10.0) / 20.0
    theta0 = np.log(u) - np.log1p(-u)
    chains = run_chains(target, cfg, theta0)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keep = min(args.k, 10)
    names = target.parameter_names[:keep]
    mu_chains = [target.mu(c.draws[:, :keep]) for c in chains]
    runio.write_draws_csv(out / "demo_draws.csv", names, mu_chains)
    runio.write_draws_csv(out / "demo_warmup_draws.csv", names,
                          [target.mu(c.warmup_draws[:, :keep]) for c in chains])
    _write_trace(out / "trace.csv", chains)

    grid = np.linspace(-10.0, 10.0, 801)
    dens = analytic_marginal(grid, args.k, x_bar, args.n_obs)
    with open(out / "analytic_marginal.csv", "w", newline="") as fh:
        fh.write("mu,density\n")
        for g, d in zip(grid, dens):
            fh.write(f"{g:.17g},{d:.17g}\n")

    max_lag = min(50, args.iters - 1)
    acfs = {names[j]: [float(v) for v in acf(mu_chains[0][:, j], max_lag)]
            for j in range(keep)}
    rhats = {names[j]: float(split_rhat(np.stack([m[:, j] for m in mu_chains])))
             for j in range(keep)}
    esss = {names[j]: float(ess(np.stack([m[:, j] for m in mu_chains]), "bulk"))
            for j in range(keep)}
    runio.write_json(out / "demo_stats.json", {
        "schema_version": runio.SCHEMA_VERSION,
        "k": args.k, "n_obs": args.n_obs, "x_bar": x_bar,
        "acf_max_lag": max_lag, "acf": acfs,
        "split_rhat": rhats, "bulk_ess": esss,
        "tree_depth_mean": float(np.mean([c.tree_depths.mean() for c in chains])),
        "divergences": int(sum(c.divergences.sum() for c in chains)),
    })
    runio.write_json(out / "manifest.json", {
        "schema_version": runio.SCHEMA_VERSION,
        "command": "demo-unidentified-normal",
        "k": args.k, "n_obs": args.n_obs, "iters": args.iters,
        "warmup": args.warmup, "seed": args.seed, "metric": metric,
        "max_tree_depth": args.max_tree_depth,
        "versions": {"svarhmc": __version__, "numpy": np.__version__},
        "wall_time_s": time.time() - t0,
    })
    print(f"wrote {out} (max R-hat {max(rhats.values()):.4f})")
    return 0


def _quantile_se(draws: np.ndarray, prob: float, n_eff: float) -> float:
    """Asymptotic SE of a sample quantile: √(p(1−p)/n_eff) / f̂(q_p)."""
    lo, hi = np.quantile(draws, [max(prob - 0.02, 0.001), min(prob + 0.02, 0.999)])
    width = max(hi - lo, 1e-12)
    density = (min(prob + 0.02, 0.999) - max(prob - 0.02, 0.001)) / width
    return float(np.sqrt(prob * (1.0 - prob) / max(n_eff, 2.0)) / density)


def cross_sampler_table(hmc_draws: np.ndarray, hmc_ess: np.ndarray,
                        oracle_draws: np.ndarray, names: list[str]) -> list[dict]:
    """Percentile comparison rows with combined Monte Carlo standard errors."""
    rows = []
    for j, name in enumerate(names):
        row = {"name": name}
        ok = True
        for prob, label in ((0.16, "q16"), (0.50, "q50"), (0.84, "q84")):
            qh = float(np.quantile(hmc_draws[:, j], prob))
            qo = float(np.quantile(oracle_draws[:, j], prob))
            se_h = _quantile_se(hmc_draws[:, j], prob, hmc_ess[j])
            se_o = _quantile_se(oracle_draws[:, j], prob, oracle_draws.shape[0])
            se = float(np.hypot(se_h, se_o))
            row[label] = {"hmc": qh, "oracle": qo, "diff": qh - qo, "se": se}
            ok = ok and abs(qh - qo) < 3.0 * se
        row["within_3se"] = ok
        rows.append(row)
    return rows


def cmd_validate(args) -> int:
    cfg = RunConfig.from_file(args.config, overrides={"seed": args.seed})
    dataset, schema, shape, posterior, target, sampler_cfg, chains = run_estimation(cfg)
    comp = compile_schema(schema)

    watch = [pos for pos, cell in enumerate(comp.slots) if cell[0] in (0, 1)]
    names = [target.structural_names[i] for i in watch]
    stacked = np.stack([
        _structural_and_irfs(target, schema, c.draws, 0)[0][:, watch] for c in chains
    ])
    hmc_draws = stacked.reshape(-1, len(watch))
    hmc_ess = np.array([
        min(ess(stacked[:, :, j], "bulk"), ess(stacked[:, :, j], "tail"))
        for j in range(len(watch))
    ])

    rng = np.random.default_rng(sampler_cfg.seed + 777)
    draws, rate = accept_reject(posterior, schema, shape, args.oracle_draws,
                                args.max_tries, rng)
    oracle_flat = np.stack([flatten_structural(comp, d.structural) for d in draws])
    oracle_draws = oracle_flat[:, watch]

    rows = cross_sampler_table(hmc_draws, hmc_ess, oracle_draws, names)
    payload = {
        "schema_version": runio.SCHEMA_VERSION,
        "acceptance_rate": rate,
        "hmc_draws": int(hmc_draws.shape[0]),
        "oracle_draws": int(oracle_draws.shape[0]),
        "rows": rows,
        "all_within_3se": all(r["within_3se"] for r in rows),
    }
    if args.out:
        runio.write_json(Path(args.out), payload)

    print(f"accept-reject acceptance rate: {rate:.4f}")
    print(f"{'parameter':<22}{'q':>4}{'HMC':>12}{'oracle':>12}{'diff':>11}{'3·SE':>10}")
    for r in rows:
        for label in ("q16", "q50", "q84"):
            c = r[label]
            print(f"{r['name']:<22}{label:>4}{c['hmc']:>12.4f}{c['oracle']:>12.4f}"
                  f"{c['diff']:>11.4f}{3 * c['se']:>10.4f}")
    print("all percentiles within 3 SE" if payload["all_within_3se"]
          else "DISAGREEMENT beyond 3 SE")
    return 0 if payload["all_within_3se"] else 2


def cmd_diagnose(args) -> int:
    names, chains = runio.read_draws_csv(Path(args.draws))
    arr = np.stack(chains)
    if args.params:
        idx = [names.index(p) for p in args.params]
        arr = arr[:, :, idx]
        names = list(args.params)
    payload = prefix_curves(arr, names, stride=args.stride)
    runio.write_json(Path(args.out), payload)
    print(f"wrote {args.out} ({len(payload['points'])} prefix points)")
    return 0


def cmd_irf(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    cfg_echo = manifest["config"]
    schema = parse_schema_text(
        cfg_echo["schema_text"], n_lags=cfg_echo["lags"],
        n_exog=len(cfg_echo.get("exog_columns", [])),
    )
    comp = compile_schema(schema)
    names, chains = runio.read_draws_csv(Path(args.draws))
    pooled = np.concatenate(chains)
    n = schema.shape.n_vars
    irfs = np.empty((pooled.shape[0], args.horizon + 1, n, n))
    for i in range(pooled.shape[0]):
        st = unflatten_structural(comp, pooled[i])
        rf = structural_to_reduced(st)
        irfs[i] = irf(rf, st.impact, args.horizon)
    runio.write_json(Path(args.out), runio.irf_quantiles_payload(
        irfs, schema.var_names, schema.shock_names,
    ))
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
