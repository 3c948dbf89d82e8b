"""Network simulation by single-link heat-bath sweeps.

One sweep visits every ordered pair in a fresh uniformly random order and
resamples that link from its conditional distribution given the rest of the
network, i.e. sets it with probability logistic(potential increment). The
induced chain is finite, irreducible and aperiodic, and its unique
stationary law is the Gibbs distribution exp(potential)/c.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ValidationError
from .model import CovariateTable, ModelContext, Network, Theta, UtilityModel

INIT_KINDS = ("empty", "given", "random")


@dataclass(frozen=True)
class SweepConfig:
    """How many sweeps to run and from which starting network."""

    sweeps: int
    init: str = "empty"
    given: Network | None = None
    p: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValidationError("sweeps must be at least 1")
        if self.init not in INIT_KINDS:
            raise ValidationError(f"init must be one of {INIT_KINDS}")
        if self.init == "given" and self.given is None:
            raise ValidationError("init='given' needs a network")
        if self.init == "random" and not 0.0 <= self.p <= 1.0:
            raise ValidationError("random init probability must lie in [0, 1]")


def _draw_sweep_randomness(n_pairs: int, sweeps: int, rng: np.random.Generator):
    base = np.tile(np.arange(n_pairs, dtype=np.int64), (sweeps, 1))
    order = rng.permuted(base, axis=1)
    unif = rng.random((sweeps, n_pairs))
    return order, unif


def run_sweeps(
    adj: np.ndarray,
    U: np.ndarray,
    M: np.ndarray,
    V: np.ndarray,
    pairs: np.ndarray,
    sweeps: int,
    rng: np.random.Generator,
) -> None:
    """Low-level driver over a raw adjacency; mutates ``adj`` in place."""
    order, unif = _draw_sweep_randomness(pairs.shape[0], sweeps, rng)
    _kernels.glauber_sweeps(adj, U, M, V, pairs, order, unif)


def glauber_sweep(
    g: Network,
    X: CovariateTable,
    model: UtilityModel,
    theta: Theta,
    rng: np.random.Generator,
) -> Network:
    """One full heat-bath pass over all ordered pairs; updates ``g`` in place."""
    ctx = ModelContext(model, X)
    if g.n != X.n:
        raise ValidationError(f"network has {g.n} nodes, covariates have {X.n}")
    U, M, V = ctx.matrices(theta)
    run_sweeps(g.adj, U, M, V, ctx.pairs, 1, rng)
    return g


def _initial_network(n: int, cfg: SweepConfig, rng: np.random.Generator) -> Network:
    if cfg.init == "empty":
        return Network.empty(n)
    if cfg.init == "given":
        if cfg.given.n != n:
            raise ValidationError("given network size does not match covariates")
        return cfg.given.copy()
    return Network.random(n, cfg.p, rng)


def sample_network(
    X: CovariateTable, model: UtilityModel, theta: Theta, cfg: SweepConfig
) -> Network:
    """Run ``cfg.sweeps`` sweeps from ``cfg.init``; deterministic given the seed."""
    ctx = ModelContext(model, X)
    rng = np.random.default_rng(cfg.rng_seed)
    g = _initial_network(X.n, cfg, rng)
    U, M, V = ctx.matrices(theta)
    run_sweeps(g.adj, U, M, V, ctx.pairs, cfg.sweeps, rng)
    return g


def sample_stationary_codes(
    X: CovariateTable,
    model: UtilityModel,
    theta: Theta,
    samples: int,
    sweeps_between: int = 1,
    burn_in: int = 100,
    rng_seed: int = 0,
    chunk: int = 50_000,
) -> np.ndarray:
    """Long-run state trace for small n: packed link patterns, one retained
    state every ``sweeps_between`` sweeps after ``burn_in`` sweeps.

    Only sensible for n <= 8 (the packed code must fit an int64).
    """
    if X.n > 8:
        raise ValidationError("state recording is limited to n <= 8")
    ctx = ModelContext(model, X)
    rng = np.random.default_rng(rng_seed)
    g = Network.empty(X.n)
    U, M, V = ctx.matrices(theta)
    if burn_in > 0:
        run_sweeps(g.adj, U, M, V, ctx.pairs, burn_in, rng)
    out = np.empty(samples, dtype=np.int64)
    filled = 0
    n_pairs = ctx.pairs.shape[0]
    while filled < samples:
        take = min(chunk, samples - filled)
        total_sweeps = take * sweeps_between
        order, unif = _draw_sweep_randomness(n_pairs, total_sweeps, rng)
        codes = np.empty(total_sweeps, dtype=np.int64)
        _kernels.glauber_sweeps_record(g.adj, U, M, V, ctx.pairs, order, unif, codes)
        out[filled : filled + take] = codes[sweeps_between - 1 :: sweeps_between]
        filled += take
    return out
