"""Command-line front end.

Subcommands: simulate-network, compute-ard, meanfield, estimate,
oracle-validate, run-experiment. A JSON config file supplies defaults and
flags override individual fields. Exit codes: 0 success, 1 validation
problem, 2 runtime failure, 3 oracle-suite tolerance violation.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments
from .ard import ArdVector, compute_ard
from .dynamics import SweepConfig, sample_network
from .errors import ArdnetError, DegenerateEvidenceError, ParseError, ValidationError
from .meanfield import fixed_point_solve
from .model import Network, Theta, UtilityModel
from .sampler import (
    SamplerConfig,
    credible_interval,
    posterior_mean,
    resolve_burn_in,
    run_chain,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_SUITE = 3


def _load_config(path):
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _setting(args, config, key, default=None):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    return config.get(key, default)


def _covariates(args, config):
    path = _setting(args, config, "covariates")
    if path:
        return experiments.load_covariates(path)
    n = int(_setting(args, config, "n", 15))
    return experiments.synthetic_ages(n)


def _model_and_truth(args, config):
    preset = _setting(args, config, "preset", "design1")
    if preset == "design1":
        model, truth = experiments.design1_model(), experiments.design1_theta_true()
    elif preset == "design2":
        model, truth = experiments.design2_model(), experiments.design2_theta_true()
    else:
        with open(preset, "r", encoding="utf-8") as fh:
            model, truth = UtilityModel.from_dict(json.load(fh)), None
    theta = _setting(args, config, "theta")
    if theta is not None:
        if isinstance(theta, str):
            theta = [float(x) for x in theta.split(",")]
        truth = np.asarray(theta, dtype=np.float64)
    if truth is None:
        raise ValidationError("--theta is required for custom model files")
    if truth.size != model.total_dim():
        raise ValidationError("theta does not match the model dimension")
    return model, truth


def _write_network_csv(path, g: Network) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in g.adj:
            fh.write(",".join("1" if x else "0" for x in row))
            fh.write("\n")


def _read_network_csv(path) -> Network:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([int(c) for c in line.split(",")])
            except ValueError:
                raise ParseError("adjacency cells must be 0 or 1", line=lineno) from None
    return Network(np.asarray(rows, dtype=bool))


def _cmd_simulate_network(args) -> int:
    config = _load_config(args.config)
    X = _covariates(args, config)
    model, truth = _model_and_truth(args, config)
    sweeps = int(_setting(args, config, "sweeps", 50))
    seed = int(_setting(args, config, "seed", 0))
    g = sample_network(
        X,
        model,
        Theta.from_vector(model, truth),
        SweepConfig(sweeps=sweeps, init="empty", rng_seed=seed),
    )
    out = _setting(args, config, "out", "network.csv")
    _write_network_csv(out, g)
    print(json.dumps({"n": g.n, "links": g.link_count(), "out": str(out)}, sort_keys=True))
    return EXIT_OK


def _cmd_compute_ard(args) -> int:
    config = _load_config(args.config)
    X = _covariates(args, config)
    queries = experiments.resolve_query_set(_setting(args, config, "queries", "design1"))
    g = _read_network_csv(args.network)
    psi = compute_ard(g, X, queries)
    out = _setting(args, config, "out", "ard.json")
    experiments.write_json(
        out,
        {
            "n": g.n,
            "query_names": list(queries.names()),
            "values": [int(v) for v in psi.values],
        },
    )
    print(json.dumps({"d_psi": int(psi.values.size), "out": str(out)}, sort_keys=True))
    return EXIT_OK


def _cmd_meanfield(args) -> int:
    config = _load_config(args.config)
    X = _covariates(args, config)
    model, truth = _model_and_truth(args, config)
    state = fixed_point_solve(X, model, Theta.from_vector(model, truth))
    payload = {
        "bound": state.bound,
        "phi_mf": state.phi_mf,
        "converged": state.converged,
        "iterations": state.iterations,
        "n": X.n,
    }
    print(json.dumps(payload, sort_keys=True))
    if args.out:
        experiments.write_json(args.out, payload)
    return EXIT_OK


def _sampler_config(args, config, model_dim, preset) -> SamplerConfig:
    base = experiments.default_sampler_config(preset if preset in experiments.PRESETS else "design1")
    overrides = {}
    for key, attr in (
        ("rounds", "rounds"),
        ("draws", "draws_per_round"),
        ("delta0", "delta0"),
        ("sweeps", "sweeps_per_proposal"),
        ("norm", "norm"),
    ):
        value = _setting(args, config, key)
        if value is not None:
            overrides[attr] = value
    seed = _setting(args, config, "seed")
    if seed is not None:
        overrides["rng_seed"] = int(seed)
    cfg = replace(base, **overrides)
    if cfg.dim() != model_dim:
        raise ValidationError("sampler configuration does not match the model")
    return cfg


def _cmd_estimate(args) -> int:
    config = _load_config(args.config)
    X = _covariates(args, config)
    preset = _setting(args, config, "preset", "design1")
    model, _ = _model_and_truth(args, config)
    queries = experiments.resolve_query_set(_setting(args, config, "queries", "design1"))
    with open(args.ard, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    psi0 = ArdVector(np.asarray(payload["values"], dtype=np.int64), int(payload["n"]))
    cfg = _sampler_config(args, config, model.total_dim(), preset)
    records, state = run_chain(psi0, X, model, queries, cfg)
    out = Path(_setting(args, config, "out", "estimate-out"))
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(out / "trace.csv", records)
    burn = resolve_burn_in(cfg)
    ci = credible_interval(records, 0.9, burn, state.flagged_rounds)
    mean = posterior_mean(records, burn, state.flagged_rounds)
    experiments.write_json(
        out / "summary.json",
        {
            "coordinates": [
                {"mean": float(m), "ci_lo": float(lo), "ci_hi": float(hi), "level": 0.9}
                for m, lo, hi in zip(mean, ci.lo, ci.hi)
            ],
            "round_accept_rates": [float(x) for x in state.round_accept_rates],
            "dropped_rounds": [int(x) for x in state.flagged_rounds],
            "seed": cfg.rng_seed,
            "final_delta": float(state.delta),
        },
    )
    print(json.dumps({"out": str(out), "iterations": len(records)}, sort_keys=True))
    return EXIT_OK


def _cmd_oracle_validate(args) -> int:
    report = experiments.oracle_validate(args.suite, rng_seed=int(args.seed or 0))
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    return EXIT_OK if report["passed"] else EXIT_SUITE


def _cmd_run_experiment(args) -> int:
    config = _load_config(args.config)
    sampler_over = {}
    for key, attr in (
        ("rounds", "rounds"),
        ("draws", "draws_per_round"),
        ("delta0", "delta0"),
        ("sweeps", "sweeps_per_proposal"),
        ("norm", "norm"),
    ):
        value = _setting(args, config, key)
        if value is not None:
            sampler_over[attr] = value
    preset = _setting(args, config, "preset", "design1")
    sampler = experiments.default_sampler_config(
        preset if preset in experiments.PRESETS else "design1"
    )
    if sampler_over:
        sampler = replace(sampler, **sampler_over)
    default_reps = 4 if preset == "design2" else 1
    cfg = experiments.ExperimentConfig(
        preset=preset if preset in experiments.PRESETS else "custom",
        model_file=None if preset in experiments.PRESETS else preset,
        query_set=_setting(args, config, "queries", "design1"),
        sampler=sampler,
        replications=int(_setting(args, config, "replications", default_reps)),
        output_dir=str(_setting(args, config, "out", "experiment-out")),
        n=int(_setting(args, config, "n", 15)),
        covariates_file=_setting(args, config, "covariates"),
        seed=int(_setting(args, config, "seed", 0)),
        truth_sweeps=int(_setting(args, config, "truth-sweeps", 50)),
        workers=int(_setting(args, config, "workers", 1)),
    )
    summary = experiments.run_experiment(cfg)
    print(
        json.dumps(
            {
                "out": cfg.output_dir,
                "replications": cfg.replications,
                "pooled": summary["pooled"],
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--preset", help="design1, design2, or a model JSON file")
    p.add_argument("--covariates", help="covariate CSV (default: synthetic ages)")
    p.add_argument("--n", type=int, help="node count for synthetic covariates")
    p.add_argument("--theta", help="comma-separated coefficient vector")


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--queries", help="query-set preset name or JSON file")
    p.add_argument("--rounds", type=int, help="adaptation rounds")
    p.add_argument("--draws", type=int, help="draws per round")
    p.add_argument("--delta0", type=float, help="initial tolerance")
    p.add_argument("--sweeps", type=int, help="sweeps per network proposal")
    p.add_argument("--norm", choices=["l1", "l2", "linf"], help="answer-distance norm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ardnet",
        description="Estimate network-formation coefficients from aggregate "
        "relational data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-network", help="draw a network at given coefficients")
    _add_common(p)
    p.add_argument("--sweeps", type=int, help="heat-bath sweeps from empty")
    p.set_defaults(func=_cmd_simulate_network)

    p = sub.add_parser("compute-ard", help="answer a query set on a stored network")
    _add_common(p)
    p.add_argument("--network", required=True, help="adjacency CSV")
    p.add_argument("--queries", help="query-set preset name or JSON file")
    p.set_defaults(func=_cmd_compute_ard)

    p = sub.add_parser("meanfield", help="solve the variational bound once")
    _add_common(p)
    p.set_defaults(func=_cmd_meanfield)

    p = sub.add_parser("estimate", help="run one posterior chain on stored answers")
    _add_common(p)
    _add_sampler_flags(p)
    p.add_argument("--ard", required=True, help="answer JSON from compute-ard")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("oracle-validate", help="run an enumeration cross-check suite")
    p.add_argument(
        "--suite",
        required=True,
        choices=["stationary", "meanfield", "sufficiency", "kernel"],
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_oracle_validate)

    p = sub.add_parser("run-experiment", help="full simulate/compress/estimate pipeline")
    _add_common(p)
    _add_sampler_flags(p)
    p.add_argument("--replications", type=int)
    p.add_argument("--truth-sweeps", type=int, help="sweeps for the ground-truth draw")
    p.add_argument("--workers", type=int, help="replication worker processes")
    p.set_defaults(func=_cmd_run_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError, DegenerateEvidenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ArdnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
