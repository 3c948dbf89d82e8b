"""Acceptance suite: one test per release criterion, one PASS line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the line-per-
criterion report. Criteria 7 and 8 run full desk-scale estimation studies
and dominate the runtime; everything else is oracle-backed and quick.
"""
import time

import numpy as np

from ardnet import oracle
from ardnet.ard import compute_ard
from ardnet.dynamics import sample_stationary_codes
from ardnet.experiments import (
    ExperimentConfig,
    default_sampler_config,
    example2_covariates,
    example2_grid,
    example2_model,
    example2_queries,
    run_experiment,
    synthetic_ages,
    write_interval_table,
    _kernel_balance_residual,
)
from ardnet.meanfield import MeanFieldOptions, fixed_point_solve
from ardnet.model import (
    CovariateTable,
    Theta,
    UtilityModel,
    abs_diff,
    constant,
    utility_matrices,
)
from ardnet.sampler import SamplerConfig, delta_multiplier


def report(num, name, passed, detail):
    print(f"{'PASS' if passed else 'FAIL'}: criterion {num} ({name}) {detail}")
    assert passed, f"criterion {num} ({name}): {detail}"


def test_criterion_1_separable_exactness():
    started = time.time()
    rng = np.random.default_rng(101)
    worst_mf = 0.0
    worst_exact = 0.0
    for k in range(20):
        n = int(rng.choice([3, 4]))
        X = CovariateTable({"age": rng.uniform(18, 80, size=n)})
        model = UtilityModel(direct_features=(constant(), abs_diff("age", 20.0)))
        theta = Theta(rng.uniform(-2, 2, size=2), np.array([]), np.array([]))
        U, _, _ = utility_matrices(model, theta, X)
        off = ~np.eye(n, dtype=bool)
        closed = float(np.logaddexp(0.0, U[off]).sum())
        bound = fixed_point_solve(X, model, theta, MeanFieldOptions(tol=1e-11)).bound
        exact = oracle.log_c_exact(X, model, theta)
        worst_mf = max(worst_mf, abs(bound - closed))
        worst_exact = max(worst_exact, abs(exact - closed))
    elapsed = time.time() - started
    report(
        1,
        "separable exactness",
        worst_mf < 1e-8 and worst_exact < 1e-10 and elapsed < 10,
        f"mf err {worst_mf:.2e} (<1e-8), enum err {worst_exact:.2e} (<1e-10), {elapsed:.1f}s",
    )


def test_criterion_2_bound_sign_on_grid():
    started = time.time()
    X = synthetic_ages(4, seed=11)
    model = UtilityModel(
        direct_features=(constant(), abs_diff("age", 20.0)),
        mutual_features=(constant(),),
        indirect_features=(constant(),),
    )
    base = np.array([1.0, -1.0])
    worst = -np.inf
    for g1 in np.linspace(-1.0, 1.0, 5):
        for g2 in np.linspace(-1.0, 1.0, 5):
            theta = Theta(base, np.array([g1]), np.array([g2]))
            gap = oracle.log_c_exact(X, model, theta) - fixed_point_solve(
                X, model, theta
            ).bound
            worst = max(worst, -gap)
    elapsed = time.time() - started
    report(
        2,
        "mean-field bound sign",
        worst <= 1e-9 and elapsed < 60,
        f"max overshoot {worst:.2e} (<=1e-9), {elapsed:.1f}s",
    )


def test_criterion_3_stationary_fidelity():
    started = time.time()
    X = synthetic_ages(3, seed=11)
    model = UtilityModel(
        direct_features=(constant(), abs_diff("age", 20.0)),
        mutual_features=(constant(),),
        indirect_features=(constant(),),
    )
    theta = Theta(np.array([0.2, -0.5]), np.array([0.5]), np.array([0.25]))
    codes = sample_stationary_codes(
        X, model, theta, samples=1_000_000, burn_in=500, rng_seed=7
    )
    pi = oracle.exact_pi_all(X, model, theta)
    emp = np.bincount(codes, minlength=pi.size) / codes.size
    tv = 0.5 * float(np.abs(emp - pi).sum())
    elapsed = time.time() - started
    report(
        3,
        "stationary-law fidelity",
        tv < 0.02 and elapsed < 120,
        f"TV {tv:.4f} (<0.02) over 1e6 samples, {elapsed:.1f}s",
    )


def test_criterion_4_sufficiency_reproduction():
    started = time.time()
    X = example2_covariates()
    model = example2_model()
    queries = example2_queries()
    grid = example2_grid()
    assert len(grid) >= 25
    variation = oracle.sufficiency_variation(queries, X, model, grid)
    g0 = oracle.network_from_code(0b101101001100, 4)
    psi0 = compute_ard(g0, X, queries)
    from_ard = oracle.exact_posterior_on_grid(psi0, X, model, grid, queries=queries)
    from_net = oracle.exact_posterior_on_grid(g0, X, model, grid)
    post_diff = float(np.max(np.abs(from_ard - from_net)))
    elapsed = time.time() - started
    report(
        4,
        "sufficiency reproduction",
        variation < 1e-10 and post_diff < 1e-9 and elapsed < 60,
        f"variation {variation:.2e} (<1e-10), posterior diff {post_diff:.2e} (<1e-9), "
        f"{len(grid)} grid points, {elapsed:.1f}s",
    )


def test_criterion_5_kernel_detailed_balance():
    started = time.time()
    residual = _kernel_balance_residual(pairs=200, rng_seed=0)
    elapsed = time.time() - started
    report(
        5,
        "kernel detailed balance",
        residual < 1e-9 and elapsed < 60,
        f"max |forward - backward| {residual:.2e} (<1e-9) over 200 pairs, {elapsed:.1f}s",
    )


def test_criterion_6_tolerance_schedule_table():
    bands = [
        (0.60, 0.98),
        (0.30, 0.99),
        (0.05, 1.0),
        (0.005, 1.005),
        (0.001, 1.01),
    ]
    boundaries = [(0.50, 0.99), (0.18, 1.0), (0.01, 1.005), (0.003, 1.01)]
    ok = all(delta_multiplier(r) == m for r, m in bands) and all(
        delta_multiplier(r) == m for r, m in boundaries
    )
    report(6, "tolerance schedule table", ok, "five bands plus boundary rates exact")


def test_criterion_7_design1_recovery(tmp_path):
    started = time.time()
    sampler = default_sampler_config("design1", rounds=30, draws=50)
    cfg = ExperimentConfig(
        preset="design1",
        query_set="design1",
        sampler=sampler,
        replications=4,
        output_dir=str(tmp_path / "design1"),
        n=15,
        seed=0,
        truth_sweeps=50,
    )
    summary = run_experiment(cfg)
    covered = 0
    means = []
    for rep in summary["replications"]:
        coord = rep["coordinates"][1]
        if coord["ci_lo"] <= -1.0 <= coord["ci_hi"]:
            covered += 1
        means.append(coord["mean"])
    pooled_mean = float(np.mean(means))
    elapsed = time.time() - started
    report(
        7,
        "design-1 desk-scale recovery",
        covered >= 3 and -2.0 < pooled_mean < 0.0 and elapsed < 600,
        f"CI covered truth in {covered}/4 replications (need >=3), "
        f"pooled mean {pooled_mean:.3f} in (-2,0), {elapsed:.1f}s",
    )


def test_criterion_8_design2_interval_narrowing(tmp_path):
    started = time.time()
    results = {}
    for name in ("design2-benchmark", "design2-augmented"):
        cfg = ExperimentConfig(
            preset="design2",
            query_set=name,
            sampler=default_sampler_config("design2"),
            replications=4,
            output_dir=str(tmp_path / name),
            n=15,
            seed=3,
            truth_sweeps=50,
        )
        results[name] = run_experiment(cfg)

    coverage = {}
    for name, summary in results.items():
        cb = cg = 0
        for rep in summary["replications"]:
            b1, g1 = rep["coordinates"][1], rep["coordinates"][2]
            cb += b1["ci_lo"] <= -1.0 <= b1["ci_hi"]
            cg += g1["ci_lo"] <= 0.1 <= g1["ci_hi"]
        coverage[name] = (cb, cg)

    narrower = 0
    for rb, ra in zip(
        results["design2-benchmark"]["replications"],
        results["design2-augmented"]["replications"],
    ):
        wb = rb["coordinates"][2]["ci_hi"] - rb["coordinates"][2]["ci_lo"]
        wa = ra["coordinates"][2]["ci_hi"] - ra["coordinates"][2]["ci_lo"]
        narrower += wa <= wb

    rows = []
    for label, name in (("benchmark", "design2-benchmark"), ("augmented", "design2-augmented")):
        pooled = results[name]["pooled"]["coordinates"]
        rows.append(
            (
                label,
                (pooled[1]["ci_lo"], pooled[1]["ci_hi"]),
                (pooled[2]["ci_lo"], pooled[2]["ci_hi"]),
            )
        )
    write_interval_table(tmp_path / "interval_table.csv", rows)

    ok = (
        coverage["design2-benchmark"][0] >= 3
        and coverage["design2-benchmark"][1] >= 3
        and coverage["design2-augmented"][0] >= 3
        and coverage["design2-augmented"][1] >= 3
        and narrower >= 3
    )
    elapsed = time.time() - started
    report(
        8,
        "design-2 desk-scale behavior",
        ok and elapsed < 1200,
        f"benchmark coverage b1/g1 {coverage['design2-benchmark']}, "
        f"augmented {coverage['design2-augmented']} (need >=3 each), "
        f"augmented narrower in {narrower}/4 (need >=3), table emitted, {elapsed:.0f}s",
    )


def test_criterion_9_byte_identical_reruns(tmp_path):
    sampler = SamplerConfig(
        prior_lo=(4.0, -3.0),
        prior_hi=(6.0, 1.0),
        theta_step=(0.0, 0.3),
        theta_init=(5.0, -2.0),
        rounds=4,
        draws_per_round=25,
        delta0=6.0,
    )
    payloads = []
    for tag in ("a", "b"):
        cfg = ExperimentConfig(
            preset="design1",
            query_set="design1",
            sampler=sampler,
            replications=2,
            output_dir=str(tmp_path / tag),
            n=10,
            seed=42,
            truth_sweeps=20,
        )
        run_experiment(cfg)
        payloads.append(
            {
                name: (tmp_path / tag / name).read_bytes()
                for name in (
                    "trace_rep0.csv",
                    "trace_rep1.csv",
                    "plot_rep0.csv",
                    "plot_rep1.csv",
                    "summary.json",
                )
            }
        )
    identical = all(payloads[0][k] == payloads[1][k] for k in payloads[0])
    report(
        9,
        "deterministic reruns",
        identical,
        "trace, plot and summary payloads byte-identical across reruns",
    )
