"""Command-line interface.

Subcommands: fit, simulate, prior, cv-delta, gof, gli, study, oracle.
Numeric results land in machine-readable files (JSON for fits, CSV for
tables); a human summary goes to stdout.  Every run writes a manifest
(resolved configuration + package version + seed) alongside its outputs
so any result file can be regenerated from the manifest alone.

Exit codes: 0 success, 1 usage error, 2 estimation failure
(non-convergence or hull infeasibility), 3 I/O or input-format error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    CoverageStudyConfig,
    DeltaSweepConfig,
    gli_report,
    gof,
    run_coverage_study,
    run_delta_sweep,
)
from .errors import ErgmPoolError, GraphFormatError, HullInfeasibleError
from .estimator import EstimatorConfig, FitResult
from .graphs import read_graph_set, write_graph_set, GraphSet
from .oracle import enumerate_graphs, exact_mean, exact_mle, exact_psi
from .pooled import (
    PosteriorResult,
    build_bernoulli_prior,
    conjugate_map,
    load_prior,
    pooled_mle,
    protein_mean_degree,
    save_prior,
    tune_delta_cv,
)
from .sampler import ChainConfig, sample_ergm
from .terms import parse_model_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ESTIMATION = 2
EXIT_IO = 3


def _default_threads() -> int:
    env = os.environ.get("ERGMPOOL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _parse_ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def _write_manifest(out_dir: Path, subcommand: str, args: argparse.Namespace) -> None:
    resolved = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func"
    }
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": resolved.get("seed"),
        "config": resolved,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "manifest.json").open("w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _chain_config(args, seed=None) -> ChainConfig:
    return ChainConfig(
        burn_in=args.burn_in,
        thin=args.thin,
        n_draws=args.draws,
        seed=args.seed if seed is None else seed,
    )


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        method=args.method,
        chain=_chain_config(args),
        max_outer=args.max_outer,
        t_ratio_threshold=args.t_ratio,
        hotelling_pvalue=args.hotelling,
    )


def _add_chain_flags(p: argparse.ArgumentParser, draws_default=512):
    p.add_argument("--burn-in", type=int, default=None, help="MCMC burn-in steps (default 1e4*n)")
    p.add_argument("--thin", type=int, default=None, help="steps between retained draws (default 1e2*n)")
    p.add_argument("--draws", type=int, default=draws_default, help="retained draws per batch")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def _add_estimator_flags(p: argparse.ArgumentParser):
    p.add_argument(
        "--method",
        choices=["geyer-thompson", "stochastic-approximation"],
        default="geyer-thompson",
    )
    p.add_argument("--max-outer", type=int, default=25, help="outer iteration cap")
    p.add_argument("--t-ratio", type=float, default=0.1, help="convergence t-ratio threshold")
    p.add_argument(
        "--hotelling", type=float, default=None,
        help="also require Hotelling T^2 p-value above this (off by default)",
    )


def _fit_payload(result: FitResult | PosteriorResult) -> dict:
    if isinstance(result, PosteriorResult):
        fit_res = result.fit
        payload = {
            "estimate_kind": "conjugate-map",
            "theta": result.map.tolist(),
            "sd": result.sd.tolist(),
            "credible_interval": result.credible_intervals.tolist(),
            "laplace_cov": result.laplace_cov.tolist(),
            "delta": result.delta,
            "n0": result.n0,
            "m": result.m,
            "weight": fit_res.weight,
            "converged": bool(result.converged),
        }
    else:
        fit_res = result
        payload = {
            "estimate_kind": "pooled-mle",
            "theta": fit_res.theta.tolist(),
            "se": fit_res.se.tolist(),
            "wald_ci": fit_res.wald_ci.tolist(),
            "covariance": fit_res.covariance.tolist(),
            "weight": fit_res.weight,
            "converged": bool(fit_res.converged),
        }
    payload["stat_names"] = fit_res.model.stat_names()
    payload["target"] = fit_res.target.tolist()
    payload["fisher_info"] = fit_res.fisher_info.tolist()
    diag = fit_res.diagnostics
    payload["diagnostics"] = {
        "method": diag.get("method"),
        "iterations": diag.get("iterations", diag.get("rounds")),
        "final_t_ratios": np.asarray(diag.get("final_t_ratios")).tolist(),
        "accept_rate": diag.get("accept_rate"),
    }
    return payload


def _print_fit_summary(result: FitResult | PosteriorResult) -> None:
    if isinstance(result, PosteriorResult):
        names = result.model.stat_names()
        est, sd, ci = result.map, result.sd, result.credible_intervals
        print(f"conjugate MAP (m={result.m}, n0={result.n0:g}, delta={result.delta:.6g})")
        label = "credible_interval"
    else:
        names = result.model.stat_names()
        est, sd, ci = result.theta, result.se, result.wald_ci
        print(f"pooled MLE (weight m={result.weight:g})")
        label = "wald_ci"
    print(f"{'term':<32}{'estimate':>12}{'sd':>10}  {label}")
    for k, nm in enumerate(names):
        print(f"{nm:<32}{est[k]:>12.4f}{sd[k]:>10.4f}  ({ci[k,0]:.4f}, {ci[k,1]:.4f})")
    if not result.converged:
        print("WARNING: fit did not converge")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_fit(args) -> int:
    data = read_graph_set(args.data)
    model = parse_model_file(args.model)
    cfg = _estimator_config(args)
    out_dir = Path(args.out)
    _write_manifest(out_dir, "fit", args)
    if args.map:
        if not args.prior:
            print("error: --map requires --prior", file=sys.stderr)
            return EXIT_USAGE
        prior = load_prior(args.prior)
        result = conjugate_map(data, model, prior, cfg)
    else:
        result = pooled_mle(data, model, cfg)
    with (out_dir / "fit.json").open("w") as fh:
        json.dump(_fit_payload(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _print_fit_summary(result)
    return EXIT_OK if result.converged else EXIT_ESTIMATION


def _cmd_simulate(args) -> int:
    model = parse_model_file(args.model)
    theta = np.asarray(_parse_floats(args.theta))
    cov = constraint = None
    reference = None
    if args.data:
        data = read_graph_set(args.data)
        cov, constraint = data.covariates, data.constraint
        reference = data.graphs[0]
        n = data.n
    else:
        n = args.n
    if n is None:
        print("error: pass --n or --data", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out)
    _write_manifest(out_dir, "simulate", args)
    batch = sample_ergm(
        model, theta, cov=cov, constraint=constraint,
        cfg=_chain_config(args), n=n, reference_graph=reference,
        record_graphs=args.save_graphs,
    )
    _write_csv(
        out_dir / "stats.csv",
        model.stat_names(),
        [[f"{v:.17g}" for v in row] for row in batch.stats],
    )
    if args.save_graphs:
        write_graph_set(out_dir / "graphs", GraphSet(batch.graphs, cov, constraint))
    print(
        f"simulated {batch.n_draws} draws (n={n}); mean statistics: "
        + ", ".join(f"{nm}={v:.4f}" for nm, v in zip(model.stat_names(), batch.mean()))
    )
    return EXIT_OK


def _cmd_prior_bernoulli(args) -> int:
    model = parse_model_file(args.model)
    cov = constraint = None
    if args.data:
        data = read_graph_set(args.data)
        cov, constraint = data.covariates, data.constraint
        n = data.n
    else:
        n = args.n
    if n is None:
        print("error: pass --n or --data", file=sys.stderr)
        return EXIT_USAGE
    prior = build_bernoulli_prior(
        model, n, args.mean_degree, args.n0, n_sims=args.sims,
        constraint=constraint, seed=args.seed, cov=cov,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_prior(out, prior)
    _write_manifest(out.parent, "prior-bernoulli", args)
    print(
        f"prior expectation from {args.sims} Bernoulli draws "
        f"(p={args.mean_degree / (n - 1):.5g}), n0={args.n0:g}:"
    )
    for nm, v in zip(model.stat_names(), prior.tau_bar.values):
        print(f"  {nm:<32}{v:.4f}")
    return EXIT_OK


def _cmd_prior_protein(args) -> int:
    deg = protein_mean_degree(args.mass_kda)
    print(f"unfolded surface area : {deg.area_unfolded:.3f} A^2")
    print(f"folded surface area   : {deg.area_folded:.3f} A^2")
    print(f"expected mean degree  : {deg.mean_degree:.4f}")
    if args.model and (args.n or args.data):
        args.mean_degree = deg.mean_degree
        return _cmd_prior_bernoulli(args)
    return EXIT_OK


def _cmd_cv_delta(args) -> int:
    data = read_graph_set(args.data)
    model = parse_model_file(args.model)
    prior = load_prior(args.prior)
    prior.check_model(model)
    cfg = _estimator_config(args)
    out_dir = Path(args.out)
    _write_manifest(out_dir, "cv-delta", args)
    result = tune_delta_cv(
        data, model, prior.tau_bar, _parse_floats(args.n0_grid), cfg,
        sim_draws=args.sim_draws, seed=args.seed,
    )
    _write_csv(
        out_dir / "cv.csv",
        ["n0", "delta", "cv_error", "failed_folds"],
        [[f"{r.n0:.17g}", f"{r.delta:.17g}", f"{r.cv_error:.17g}", r.failed_folds] for r in result.rows],
    )
    for r in result.rows:
        marker = " <- best" if r.n0 == result.best_n0 else ""
        print(f"n0={r.n0:<10g} delta={r.delta:<12.6g} cv_error={r.cv_error:.3f}{marker}")
    if result.best_n0 is None:
        print("WARNING: no grid point completed all folds")
        return EXIT_ESTIMATION
    return EXIT_OK


def _load_fit_result(path, data, model):
    """Rebuild enough of a fit from fit.json to drive GOF/GLI simulation."""
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("stat_names") != model.stat_names():
        raise GraphFormatError(f"{path}: fit was for a different model")
    fisher = np.asarray(payload["fisher_info"])
    diagnostics = {"method": payload["diagnostics"].get("method")}
    if payload.get("estimate_kind") == "conjugate-map":
        theta = np.asarray(payload["theta"])
        lap = np.asarray(payload["laplace_cov"])
        base = FitResult(
            theta=theta, fisher_info=fisher, weight=payload["weight"],
            covariance=lap, converged=payload["converged"], model=model,
            target=np.asarray(payload["target"]), diagnostics=diagnostics,
        )
        return PosteriorResult(
            map=theta, Q=np.linalg.inv(lap), laplace_cov=lap,
            delta=payload["delta"], n0=payload["n0"], m=payload["m"],
            credible_intervals=np.asarray(payload["credible_interval"]),
            fit=base, model=model,
        )
    return FitResult(
        theta=np.asarray(payload["theta"]), fisher_info=fisher,
        weight=payload["weight"], covariance=np.asarray(payload["covariance"]),
        converged=payload["converged"], model=model,
        target=np.asarray(payload["target"]), diagnostics=diagnostics,
        wald_ci=np.asarray(payload["wald_ci"]),
    )


def _cmd_gof(args) -> int:
    data = read_graph_set(args.data)
    model = parse_model_file(args.model)
    result = _load_fit_result(args.fit, data, model)
    out_dir = Path(args.out)
    _write_manifest(out_dir, "gof", args)
    report = gof(result, data, n_pred_draws=args.draws, seed=args.seed,
                 chain=ChainConfig(burn_in=args.burn_in, thin=args.thin, seed=args.seed))
    for name, band in report.families().items():
        rows = []
        for b in range(len(band.bins)):
            rows.append(
                [band.bins[b], f"{band.observed[b]:.17g}"]
                + [f"{band.quantiles[q, b]:.17g}" for q in range(band.quantiles.shape[0])]
            )
        _write_csv(
            out_dir / f"gof_{name}.csv",
            ["bin", "observed_mean", "q025", "q25", "q50", "q75", "q975"],
            rows,
        )
        if band.observed_per_graph is not None:
            _write_csv(
                out_dir / f"gof_{name}_per_graph.csv",
                ["graph"] + [str(b) for b in band.bins],
                [
                    [data.names[k]] + [f"{v:.17g}" for v in row]
                    for k, row in enumerate(band.observed_per_graph)
                ],
            )
    inside = {}
    for name, band in report.families().items():
        lo, hi = band.quantiles[0], band.quantiles[-1]
        ok = np.mean((band.observed >= lo) & (band.observed <= hi))
        inside[name] = ok
    print(
        f"GOF with {report.n_pred_draws} predictive draws; fraction of bins with "
        "observed mean inside the 95% band:"
    )
    for name, ok in inside.items():
        print(f"  {name:<10} {ok:.3f}")
    return EXIT_OK


def _cmd_gli(args) -> int:
    data = read_graph_set(args.data)
    result = None
    if args.fit:
        model = parse_model_file(args.model)
        result = _load_fit_result(args.fit, data, model)
    out_dir = Path(args.out)
    _write_manifest(out_dir, "gli", args)
    report = gli_report(data, result, n_pred_draws=args.draws, seed=args.seed,
                        chain=ChainConfig(burn_in=args.burn_in, thin=args.thin, seed=args.seed))
    _write_csv(
        out_dir / "gli.csv",
        ["graph"] + list(report.names),
        [[data.names[k]] + [f"{v:.17g}" for v in row] for k, row in enumerate(report.observed)],
    )
    if report.predictive is not None:
        _write_csv(
            out_dir / "gli_predictive.csv",
            ["draw"] + list(report.names),
            [[k] + [f"{v:.17g}" for v in row] for k, row in enumerate(report.predictive)],
        )
    print("observed graph-level indices (mean over graphs):")
    for k, nm in enumerate(report.names):
        line = f"  {nm:<20} {report.observed[:, k].mean():.4f}"
        if report.predictive is not None:
            line += f"   predictive mean {report.predictive[:, k].mean():.4f}"
        print(line)
    return EXIT_OK


def _cmd_study_coverage(args) -> int:
    model = parse_model_file(args.model)
    cov = constraint = None
    if args.data:
        data = read_graph_set(args.data)
        cov, constraint = data.covariates, data.constraint
        n = data.n
    else:
        n = args.n
    cfg = CoverageStudyConfig(
        theta_star=np.asarray(_parse_floats(args.theta)),
        model=model,
        n=n,
        m_grid=tuple(_parse_ints(args.m_grid)),
        n_replicates=args.replicates,
        covariates=cov,
        constraint=constraint,
        estimator=_estimator_config(args),
        sim_chain=ChainConfig(burn_in=args.burn_in, thin=args.thin),
        seed=args.seed,
        n_threads=args.threads,
    )
    out_dir = Path(args.out)
    _write_manifest(out_dir, "study-coverage", args)
    cells = run_coverage_study(cfg)
    _write_csv(
        out_dir / "coverage.csv",
        ["m", "coord", "term", "mean_estimate", "bias", "mean_se", "empirical_sd",
         "coverage", "n_ok", "n_failed"],
        [[c.m, c.coord, c.name, f"{c.mean_estimate:.17g}", f"{c.bias:.17g}",
          f"{c.mean_se:.17g}", f"{c.empirical_sd:.17g}", f"{c.coverage:.17g}",
          c.n_ok, c.n_failed] for c in cells],
    )
    print(f"{'m':>5} {'term':<28} {'bias':>9} {'se':>8} {'coverage':>9}")
    for c in cells:
        print(f"{c.m:>5} {c.name:<28} {c.bias:>9.4f} {c.mean_se:>8.4f} {c.coverage:>9.3f}")
    return EXIT_OK


def _cmd_study_delta_sweep(args) -> int:
    model = parse_model_file(args.model)
    prior = load_prior(args.prior)
    prior.check_model(model)
    cov = constraint = None
    if args.data:
        data = read_graph_set(args.data)
        cov, constraint = data.covariates, data.constraint
        n = data.n
    else:
        n = args.n
    cfg = DeltaSweepConfig(
        theta_star=np.asarray(_parse_floats(args.theta)),
        model=model,
        n=n,
        prior_tau_bar=prior.tau_bar.values,
        delta_grid=tuple(_parse_floats(args.delta_grid)),
        m=args.m,
        n_replicates=args.replicates,
        covariates=cov,
        constraint=constraint,
        estimator=_estimator_config(args),
        sim_chain=ChainConfig(burn_in=args.burn_in, thin=args.thin),
        seed=args.seed,
        n_threads=args.threads,
    )
    out_dir = Path(args.out)
    _write_manifest(out_dir, "study-delta-sweep", args)
    cells = run_delta_sweep(cfg)
    _write_csv(
        out_dir / "delta_sweep.csv",
        ["delta", "n0", "coord", "term", "mean_map", "bias", "coverage", "n_ok", "n_failed"],
        [[f"{c.delta:.17g}", f"{c.n0:.17g}", c.coord, c.name, f"{c.mean_map:.17g}",
          f"{c.bias:.17g}", f"{c.coverage:.17g}", c.n_ok, c.n_failed] for c in cells],
    )
    print(f"{'delta':>8} {'term':<28} {'mean_map':>10} {'bias':>9} {'coverage':>9}")
    for c in cells:
        print(f"{c.delta:>8.4f} {c.name:<28} {c.mean_map:>10.4f} {c.bias:>9.4f} {c.coverage:>9.3f}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    model = parse_model_file(args.model)
    cov = constraint = None
    if args.data:
        data = read_graph_set(args.data)
        cov, constraint = data.covariates, data.constraint
        n = data.n
    else:
        n = args.n
    if n is None:
        print("error: pass --n or --data", file=sys.stderr)
        return EXIT_USAGE
    table = enumerate_graphs(model, n, cov, constraint)
    payload = {"n": n, "count": table.count, "stat_names": model.stat_names()}
    if args.theta:
        theta = np.asarray(_parse_floats(args.theta))
        payload["theta"] = theta.tolist()
        payload["psi"] = exact_psi(table, theta)
        payload["mean"] = exact_mean(table, theta).tolist()
    if args.target:
        target = np.asarray(_parse_floats(args.target))
        payload["target"] = target.tolist()
        payload["mle"] = exact_mle(table, target).tolist()
    out_dir = Path(args.out)
    _write_manifest(out_dir, "oracle", args)
    with (out_dir / "oracle.json").open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"enumerated {table.count} graphs on n={n}")
    if "psi" in payload:
        print(f"psi(theta)  = {payload['psi']:.10f}")
        print(f"E_theta g   = {np.round(payload['mean'], 6).tolist()}")
    if "mle" in payload:
        print(f"exact MLE   = {np.round(payload['mle'], 6).tolist()}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ergmpool", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fit", help="pooled MLE or conjugate MAP on a graph-set directory")
    p.add_argument("--data", required=True, help="graph-set directory")
    p.add_argument("--model", required=True, help="model term file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--pooled", action="store_true", help="pooled MLE (default)")
    group.add_argument("--map", action="store_true", help="conjugate MAP (needs --prior)")
    p.add_argument("--prior", help="prior file from `prior bernoulli`/`prior protein`")
    p.add_argument("--out", required=True, help="output directory")
    _add_chain_flags(p)
    _add_estimator_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="draw graphs/statistics from an ERGM")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True, help="comma-separated coefficients")
    p.add_argument("--n", type=int, help="vertex count (or take it from --data)")
    p.add_argument("--data", help="graph-set directory supplying covariates/constraint")
    p.add_argument("--out", required=True)
    p.add_argument("--save-graphs", action="store_true", help="also write edge lists")
    _add_chain_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("prior", help="build conjugate priors")
    psub = p.add_subparsers(dest="prior_kind", required=True)
    pb = psub.add_parser("bernoulli", help="tau_bar from Bernoulli-graph simulation")
    pb.add_argument("--model", required=True)
    pb.add_argument("--n", type=int)
    pb.add_argument("--data", help="graph-set directory supplying n/covariates/constraint")
    pb.add_argument("--mean-degree", type=float, required=True)
    pb.add_argument("--n0", type=float, default=0.01)
    pb.add_argument("--sims", type=int, default=500)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--out", required=True, help="prior file to write")
    pb.set_defaults(func=_cmd_prior_bernoulli)
    pp = psub.add_parser("protein", help="mean degree from protein mass (optionally a full prior)")
    pp.add_argument("--mass-kda", type=float, required=True)
    pp.add_argument("--model")
    pp.add_argument("--n", type=int)
    pp.add_argument("--data")
    pp.add_argument("--n0", type=float, default=0.1)
    pp.add_argument("--sims", type=int, default=1000)
    pp.add_argument("--seed", type=int, default=0)
    pp.add_argument("--out", help="prior file to write (with --model)")
    pp.set_defaults(func=_cmd_prior_protein)

    p = sub.add_parser("cv-delta", help="leave-one-out CV over the prior weight grid")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--prior", required=True, help="prior file carrying tau_bar")
    p.add_argument("--n0-grid", required=True, help="comma-separated n0 values")
    p.add_argument("--sim-draws", type=int, default=100)
    p.add_argument("--out", required=True)
    _add_chain_flags(p)
    _add_estimator_flags(p)
    p.set_defaults(func=_cmd_cv_delta)

    p = sub.add_parser("gof", help="posterior/MLE predictive goodness-of-fit bands")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--fit", required=True, help="fit.json from `fit`")
    p.add_argument("--out", required=True)
    _add_chain_flags(p, draws_default=200)
    p.set_defaults(func=_cmd_gof)

    p = sub.add_parser("gli", help="graph-level indices (observed and predictive)")
    p.add_argument("--data", required=True)
    p.add_argument("--model")
    p.add_argument("--fit", help="fit.json for predictive draws")
    p.add_argument("--out", required=True)
    _add_chain_flags(p, draws_default=200)
    p.set_defaults(func=_cmd_gli)

    p = sub.add_parser("study", help="replication studies")
    ssub = p.add_subparsers(dest="study_kind", required=True)
    sc = ssub.add_parser("coverage", help="pooled-MLE bias/SE/coverage across m")
    sc.add_argument("--model", required=True)
    sc.add_argument("--theta", required=True, help="generating coefficients")
    sc.add_argument("--n", type=int)
    sc.add_argument("--data")
    sc.add_argument("--m-grid", default="1,5,20")
    sc.add_argument("--replicates", type=int, default=200)
    sc.add_argument("--threads", type=int, default=_default_threads())
    sc.add_argument("--out", required=True)
    _add_chain_flags(sc)
    _add_estimator_flags(sc)
    sc.set_defaults(func=_cmd_study_coverage)
    sd = ssub.add_parser("delta-sweep", help="MAP bias/coverage across prior weights")
    sd.add_argument("--model", required=True)
    sd.add_argument("--theta", required=True)
    sd.add_argument("--n", type=int)
    sd.add_argument("--data")
    sd.add_argument("--prior", required=True)
    sd.add_argument("--delta-grid", default="0,0.005,0.02,0.1,0.3,0.6,0.9")
    sd.add_argument("--m", type=int, default=1)
    sd.add_argument("--replicates", type=int, default=100)
    sd.add_argument("--threads", type=int, default=_default_threads())
    sd.add_argument("--out", required=True)
    _add_chain_flags(sd)
    _add_estimator_flags(sd)
    sd.set_defaults(func=_cmd_study_delta_sweep)

    p = sub.add_parser("oracle", help="exact enumeration answers on tiny graphs")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--data")
    p.add_argument("--theta", help="report exact psi and expectations")
    p.add_argument("--target", help="report the exact MLE for this target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except HullInfeasibleError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (GraphFormatError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ErgmPoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
