"""Random-walk sampler over (coefficients, latent network) given survey answers.

Each iteration proposes fresh coefficients by a reflected Gaussian step and a
fresh network by a few heat-bath sweeps at the *current* coefficients (so the
network proposal law is the stationary law given the current state). The
pair is accepted with the ratio that treats exp(potential)/c_mf as the
network likelihood, with the exact-match indicator relaxed to a distance
tolerance. The tolerance adapts once per round from the round's acceptance
rate. While the chain has not yet produced a network within tolerance every
proposal is accepted, which bootstraps it into the feasible region.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ard import ArdQuerySet, ArdVector, ard_distance, query_masks, NORMS
from .dynamics import run_sweeps
from .errors import ArdnetError, ValidationError
from .meanfield import LogCMFCache, MeanFieldOptions
from .model import CovariateTable, ModelContext, Network, Theta, UtilityModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain layout, proposal scales, box prior and tolerance policy.

    ``theta_step`` may be a scalar or one scale per coordinate; a zero step
    pins that coordinate at its initial value. ``delta0=None`` resolves to
    0.1 times the norm of the observed answer vector, and the tolerance
    guard defaults to [1e-6, 10*delta0]; rounds whose adapted tolerance hits
    the guard are flagged for the interval filter.
    """

    prior_lo: tuple
    prior_hi: tuple
    theta_step: tuple
    rounds: int = 150
    draws_per_round: int = 200
    delta0: float | None = None
    norm: str = "l2"
    sweeps_per_proposal: int = 3
    rng_seed: int = 0
    burn_in_rounds: int | None = None
    min_delta: float | None = None
    max_delta: float | None = None
    theta_init: tuple | None = None
    feasibility_budget: int = 2000
    mf_damping: float = 0.5
    mf_tol: float = 1e-8
    mf_max_iter: int = 10_000
    mf_restarts: int = 1
    mf_warm_start: bool = True

    def __post_init__(self):
        lo = np.asarray(self.prior_lo, dtype=np.float64)
        hi = np.asarray(self.prior_hi, dtype=np.float64)
        step = np.atleast_1d(np.asarray(self.theta_step, dtype=np.float64))
        if step.size == 1 and lo.size > 1:
            step = np.full(lo.size, float(step[0]))
        if lo.shape != hi.shape or lo.shape != step.shape:
            raise ValidationError("prior bounds and step must share one shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError("prior bounds must be finite")
        if not np.all(lo < hi):
            raise ValidationError("prior boxes need lo < hi in every coordinate")
        if np.any(step < 0) or not np.all(np.isfinite(step)):
            raise ValidationError("proposal steps must be finite and non-negative")
        if self.rounds * self.draws_per_round < 1:
            raise ValidationError("rounds * draws_per_round must be at least 1")
        if self.delta0 is not None and not self.delta0 > 0:
            raise ValidationError("delta0 must be positive")
        if self.norm not in NORMS:
            raise ValidationError(f"norm must be one of {NORMS}")
        if self.sweeps_per_proposal < 1:
            raise ValidationError("sweeps_per_proposal must be at least 1")
        object.__setattr__(self, "prior_lo", tuple(float(x) for x in lo))
        object.__setattr__(self, "prior_hi", tuple(float(x) for x in hi))
        object.__setattr__(self, "theta_step", tuple(float(x) for x in step))
        if self.theta_init is not None:
            ti = np.asarray(self.theta_init, dtype=np.float64)
            if ti.shape != lo.shape:
                raise ValidationError("theta_init must match the prior box shape")
            object.__setattr__(self, "theta_init", tuple(float(x) for x in ti))

    def dim(self) -> int:
        return len(self.prior_lo)


@dataclass(frozen=True, eq=False)
class TraceRecord:
    round: int
    iter: int
    theta: np.ndarray
    delta: float
    accepted: bool
    ard_distance: float
    log_c_mf_current: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValidationError("trace records need delta > 0")
        if self.ard_distance < 0:
            raise ValidationError("trace records need ard_distance >= 0")


@dataclass(frozen=True, eq=False)
class CredibleInterval:
    level: float
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValidationError("interval ends must satisfy lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def covers(self, value) -> np.ndarray:
        v = np.asarray(value, dtype=np.float64)
        return (self.lo <= v) & (v <= self.hi)

    def width(self) -> np.ndarray:
        return self.hi - self.lo


@dataclass
class ChainState:
    """End-of-run snapshot plus per-round diagnostics."""

    theta: np.ndarray
    network: Network
    delta: float
    round_accept_rates: list
    flagged_rounds: list
    mf_rejections: int


def _reflect(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # fold only the coordinates that left the box; inside it the map is the
    # identity and must stay bit-exact
    outside = (x < lo) | (x > hi)
    if not outside.any():
        return x
    width = hi - lo
    y = np.mod(x - lo, 2.0 * width)
    y = np.where(y > width, 2.0 * width - y, y)
    return np.where(outside, lo + y, x)


def propose_theta(
    theta: np.ndarray,
    step: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Gaussian random-walk step folded back into the prior box.

    Folding preserves proposal symmetry, so the proposal-density ratio in
    the acceptance formula is identically one. Zero-step coordinates never
    move.
    """
    theta = np.asarray(theta, dtype=np.float64)
    draw = theta + step * rng.standard_normal(theta.size)
    return _reflect(draw, lo, hi)


def delta_multiplier(accept_rate: float) -> float:
    """Tolerance multiplier as a function of the round's acceptance rate."""
    if not 0.0 <= accept_rate <= 1.0:
        raise ValidationError("acceptance rate must lie in [0, 1]")
    if accept_rate > 0.50:
        return 0.98
    if accept_rate > 0.18:
        return 0.99
    if accept_rate > 0.01:
        return 1.0
    if accept_rate > 0.003:
        return 1.005
    return 1.01


def adapt_delta(
    delta: float,
    accept_rate: float,
    min_delta: float | None = None,
    max_delta: float | None = None,
) -> float:
    """Scale the tolerance by the rate band, clamping to the guard interval."""
    if not delta > 0:
        raise ValidationError("delta must be positive")
    new = delta * delta_multiplier(accept_rate)
    if min_delta is not None and new < min_delta:
        log.warning("tolerance clamped up to min_delta=%g", min_delta)
        return min_delta
    if max_delta is not None and new > max_delta:
        log.warning("tolerance clamped down to max_delta=%g", max_delta)
        return max_delta
    return new


class ChainContext:
    """Bound inputs of one chain: feature tensors, query masks, bound cache."""

    def __init__(
        self,
        X: CovariateTable,
        model: UtilityModel,
        qs: ArdQuerySet,
        cfg: SamplerConfig,
    ):
        if cfg.dim() != model.total_dim():
            raise ValidationError(
                f"sampler is {cfg.dim()}-dimensional, model needs {model.total_dim()}"
            )
        self.X = X
        self.model = model
        self.qs = qs
        self.cfg = cfg
        self.mctx = ModelContext(model, X)
        self._masks = query_masks(X, qs)
        self._directions = [q.direction for q in qs.queries]
        self.cache = LogCMFCache(
            X,
            model,
            opts=MeanFieldOptions(
                damping=cfg.mf_damping,
                tol=cfg.mf_tol,
                max_iter=cfg.mf_max_iter,
                restarts=cfg.mf_restarts,
            ),
            warm_start=cfg.mf_warm_start,
        )
        self.lo = np.asarray(cfg.prior_lo)
        self.hi = np.asarray(cfg.prior_hi)
        self.step = np.asarray(cfg.theta_step)

    def ard_values(self, adj: np.ndarray) -> np.ndarray:
        cols = []
        for direction, mask in zip(self._directions, self._masks):
            if direction == "outbound":
                cols.append((adj & mask).sum(axis=1))
            else:
                cols.append((adj.T & mask).sum(axis=1))
        return np.column_stack(cols).ravel().astype(np.int64)

    def distance(self, values: np.ndarray, psi0: np.ndarray) -> float:
        d = (values - psi0).astype(np.float64)
        if self.cfg.norm == "l1":
            return float(np.sum(np.abs(d)))
        if self.cfg.norm == "l2":
            return float(np.sqrt(np.sum(d * d)))
        return float(np.max(np.abs(d)))

    def in_support(self, theta: np.ndarray) -> bool:
        return bool(np.all(theta >= self.lo) and np.all(theta <= self.hi))

    def log_c(self, theta: np.ndarray):
        return self.cache.bound(Theta.from_vector(self.model, theta))

    def matrices(self, theta: np.ndarray):
        return self.mctx.matrices(Theta.from_vector(self.model, theta))

    def potential(self, adj: np.ndarray, mats) -> float:
        return self.mctx.potential_from(adj, *mats)


def acceptance_log_ratio(
    ctx: ChainContext,
    theta: np.ndarray,
    g: Network,
    theta_p: np.ndarray,
    g_p: Network,
    psi0: ArdVector,
    delta: float,
) -> float:
    """Log acceptance ratio for the joint proposal (theta', g').

    Composed of: the (unit) box-uniform prior ratio inside the support and
    -inf outside; the relaxed-indicator ratio; the likelihood ratio
    exp(Q(g';theta'))/c_mf(theta') over exp(Q(g;theta))/c_mf(theta); and the
    network-proposal correction exp(Q(g;theta'))/c_mf(theta') over
    exp(Q(g';theta))/c_mf(theta). The symmetric coefficient proposal drops
    out. An out-of-tolerance current state returns +inf (accept until a
    feasible network appears); a non-converged bound solve at theta' rejects.
    """
    if not ctx.in_support(theta_p):
        return -math.inf
    logc_p, conv_p = ctx.log_c(theta_p)
    if not conv_p:
        log.warning("bound solve did not converge at proposed theta; rejecting")
        return -math.inf
    psi0_vals = psi0.values
    dist_cur = ctx.distance(ctx.ard_values(g.adj), psi0_vals)
    if dist_cur > delta:
        return math.inf
    dist_new = ctx.distance(ctx.ard_values(g_p.adj), psi0_vals)
    if dist_new > delta:
        return -math.inf
    logc, _ = ctx.log_c(theta)
    mats = ctx.matrices(theta)
    mats_p = ctx.matrices(theta_p)
    q_g_t = ctx.potential(g.adj, mats)
    q_gp_t = ctx.potential(g_p.adj, mats)
    q_g_tp = ctx.potential(g.adj, mats_p)
    q_gp_tp = ctx.potential(g_p.adj, mats_p)
    return (q_gp_tp + q_g_tp - q_g_t - q_gp_t) - 2.0 * (logc_p - logc)


def resolve_burn_in(cfg: SamplerConfig) -> int:
    return cfg.burn_in_rounds if cfg.burn_in_rounds is not None else cfg.rounds // 5


def _resolve_delta0(cfg: SamplerConfig, psi0: ArdVector) -> float:
    if cfg.delta0 is not None:
        return cfg.delta0
    zero = ArdVector(np.zeros_like(psi0.values), psi0.n)
    scale = ard_distance(psi0, zero, cfg.norm)
    return 0.1 * scale if scale > 0 else 1.0


def run_chain(
    psi0: ArdVector,
    X: CovariateTable,
    model: UtilityModel,
    qs: ArdQuerySet,
    cfg: SamplerConfig,
):
    """Run the full chain; returns (trace records, final chain state).

    The network starts empty and the coefficients at the prior midpoint
    unless ``cfg.theta_init`` says otherwise. Deterministic given the seed.
    """
    if psi0.values.size != qs.d_psi(X.n):
        raise ValidationError("observed answers do not match the query set and n")
    ctx = ChainContext(X, model, qs, cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    lo, hi, step = ctx.lo, ctx.hi, ctx.step

    theta = (
        np.asarray(cfg.theta_init, dtype=np.float64)
        if cfg.theta_init is not None
        else (lo + hi) / 2.0
    )
    g = Network.empty(X.n)
    delta = _resolve_delta0(cfg, psi0)
    min_delta = cfg.min_delta if cfg.min_delta is not None else 1e-6
    max_delta = cfg.max_delta if cfg.max_delta is not None else 10.0 * delta
    burn_in = resolve_burn_in(cfg)

    psi0_vals = psi0.values
    mats = ctx.matrices(theta)
    logc_cur, _ = ctx.log_c(theta)
    dist_cur = ctx.distance(ctx.ard_values(g.adj), psi0_vals)

    records: list[TraceRecord] = []
    round_rates: list[float] = []
    flagged: list[int] = []
    feasible_seen = dist_cur <= delta
    accepted_in_round = 0

    total = cfg.rounds * cfg.draws_per_round
    for t in range(total):
        rnd = t // cfg.draws_per_round
        theta_p = propose_theta(theta, step, lo, hi, rng)
        adj_p = g.adj.copy()
        run_sweeps(adj_p, *mats, ctx.mctx.pairs, cfg.sweeps_per_proposal, rng)
        g_p = Network(adj_p)
        logr = acceptance_log_ratio(ctx, theta, g, theta_p, g_p, psi0, delta)
        u = rng.random()
        accept = logr == math.inf or (
            logr > -math.inf and (u == 0.0 or math.log(u) < logr)
        )
        if accept:
            theta = theta_p
            g = g_p
            mats = ctx.matrices(theta)
            logc_cur, _ = ctx.log_c(theta)
            dist_cur = ctx.distance(ctx.ard_values(g.adj), psi0_vals)
            accepted_in_round += 1
        if dist_cur <= delta:
            feasible_seen = True
        records.append(
            TraceRecord(
                round=rnd,
                iter=t,
                theta=theta.copy(),
                delta=delta,
                accepted=accept,
                ard_distance=dist_cur,
                log_c_mf_current=logc_cur,
            )
        )
        if not feasible_seen and t + 1 >= cfg.feasibility_budget:
            raise ArdnetError(
                f"no state within tolerance after {t + 1} iterations; "
                f"delta0={delta:g} is too small for these answers"
            )
        if (t + 1) % cfg.draws_per_round == 0:
            rate = accepted_in_round / cfg.draws_per_round
            round_rates.append(rate)
            new_delta = adapt_delta(delta, rate, min_delta, max_delta)
            if new_delta != delta * delta_multiplier(rate):
                flagged.append(rnd)
            delta = new_delta
            accepted_in_round = 0

    state = ChainState(
        theta=theta.copy(),
        network=g,
        delta=delta,
        round_accept_rates=round_rates,
        flagged_rounds=flagged,
        mf_rejections=ctx.cache.failures,
    )
    if burn_in >= cfg.rounds:
        log.warning("burn_in_rounds >= rounds; interval summaries will be empty")
    return records, state


def _filtered_thetas(records, burn_in_rounds: int, drop_rounds=()):
    dropped = set(drop_rounds)
    rows = [
        r.theta
        for r in records
        if r.round >= burn_in_rounds and r.round not in dropped
    ]
    if not rows:
        raise ValidationError("no trace records left after burn-in and filtering")
    return np.asarray(rows)


def credible_interval(
    records,
    level: float = 0.9,
    burn_in_rounds: int = 0,
    drop_rounds=(),
) -> CredibleInterval:
    """Equal-tailed posterior interval per coordinate from the kept draws."""
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    thetas = _filtered_thetas(records, burn_in_rounds, drop_rounds)
    tail = (1.0 - level) / 2.0
    lo = np.quantile(thetas, tail, axis=0)
    hi = np.quantile(thetas, 1.0 - tail, axis=0)
    return CredibleInterval(level, lo, hi)


def posterior_mean(records, burn_in_rounds: int = 0, drop_rounds=()) -> np.ndarray:
    return _filtered_thetas(records, burn_in_rounds, drop_rounds).mean(axis=0)


def write_trace_csv(path, records, chain: int = 0) -> None:
    """Trace table: chain,round,iter,theta_0..theta_{k-1},delta,accepted,ard_distance."""
    if not records:
        raise ValidationError("cannot write an empty trace")
    dim = records[0].theta.size
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["chain", "round", "iter"]
            + [f"theta_{k}" for k in range(dim)]
            + ["delta", "accepted", "ard_distance"]
        )
        for r in records:
            writer.writerow(
                [chain, r.round, r.iter]
                + [repr(float(x)) for x in r.theta]
                + [repr(float(r.delta)), int(r.accepted), repr(float(r.ard_distance))]
            )


def read_trace_csv(path):
    """Returns (header, rows as float arrays) for plot tooling and tests."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    return header, rows
