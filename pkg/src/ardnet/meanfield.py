"""Variational lower bound on the log normalizing constant.

Restricting the network law to independent link Bernoullis mu_ij and
maximizing expected-potential-plus-entropy gives a lower bound on
log c = log sum over all networks of exp(potential). The maximizer solves
mu_ij = logistic(d expected_potential / d mu_ij), which the damped
fixed-point iteration in ``_kernels`` chases. The bound is kept unscaled;
callers wanting the per-pair-squared rescaling read ``phi_mf = bound / n^2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ValidationError
from .model import CovariateTable, Theta, UtilityModel, utility_matrices

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeanFieldOptions:
    init: np.ndarray | None = None
    damping: float = 0.5
    tol: float = 1e-8
    max_iter: int = 10_000
    restarts: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValidationError("tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValidationError("damping must lie in (0, 1]")
        if self.max_iter < 1 or self.restarts < 1:
            raise ValidationError("max_iter and restarts must be at least 1")


@dataclass(eq=False)
class MeanFieldState:
    """Solution of one bound maximization.

    ``bound`` equals ``n**2 * phi_mf`` by construction and is the value of
    expected_potential(mu) + entropy(mu) at the returned ``mu``.
    """

    mu: np.ndarray
    bound: float
    phi_mf: float
    converged: bool
    iterations: int
    bound_trace: np.ndarray | None = field(default=None, repr=False)


def expected_potential(
    mu: np.ndarray, X: CovariateTable, model: UtilityModel, theta: Theta
) -> float:
    """Potential averaged over independent links with probabilities ``mu``.

    Plugging in a 0/1 matrix reproduces the potential of that network.
    """
    mu = _as_mu(mu, X.n, clamp=False)
    U, M, V = utility_matrices(model, theta, X)
    return _kernels._expected_potential_vec(mu, U, M, V)


def entropy(mu: np.ndarray) -> float:
    """Sum of the n(n-1) per-link Bernoulli entropies (natural log)."""
    return _kernels._entropy_vec(_as_mu(mu, None))


def _as_mu(mu, n, clamp=True) -> np.ndarray:
    a = np.array(mu, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("mu must be a square matrix")
    if n is not None and a.shape[0] != n:
        raise ValidationError(f"mu must be {n}x{n}, got {a.shape}")
    off = ~np.eye(a.shape[0], dtype=bool)
    if np.any(a[off] < 0.0) or np.any(a[off] > 1.0):
        raise ValidationError("mu entries must lie in [0, 1]")
    if clamp:
        np.clip(a, _kernels.MU_CLAMP, 1.0 - _kernels.MU_CLAMP, out=a)
    a[np.diag_indices(a.shape[0])] = 0.0
    return a


def _starts(n: int, opts: MeanFieldOptions):
    rng = np.random.default_rng(opts.rng_seed)
    if opts.init is not None:
        first = _as_mu(opts.init, n)
    else:
        first = np.full((n, n), 0.5)
        first[np.diag_indices(n)] = 0.0
    yield first
    for _ in range(opts.restarts - 1):
        m = rng.uniform(0.02, 0.98, size=(n, n))
        m[np.diag_indices(n)] = 0.0
        yield m


def fixed_point_solve(
    X: CovariateTable,
    model: UtilityModel,
    theta: Theta,
    opts: MeanFieldOptions | None = None,
    record_trace: bool = False,
) -> MeanFieldState:
    """Maximize the bound from several starts and keep the best.

    The default start is the uniform 1/2 matrix; the remaining
    ``opts.restarts - 1`` starts are uniform random (the bound need not be
    concave once reciprocity or indirect terms are active). Non-convergence
    is reported through ``converged`` rather than raised.
    """
    opts = opts or MeanFieldOptions()
    U, M, V = utility_matrices(model, theta, X)
    best: MeanFieldState | None = None
    for start in _starts(X.n, opts):
        mu = start.copy()
        trace = np.empty(opts.max_iter)
        iters, conv, bound, _ = _kernels.meanfield_iterate(
            U, M, V, mu, opts.damping, opts.tol, opts.max_iter, trace
        )
        state = MeanFieldState(
            mu=mu,
            bound=float(bound),
            phi_mf=float(bound) / (X.n * X.n),
            converged=bool(conv),
            iterations=int(iters),
            bound_trace=trace[:iters].copy() if record_trace else None,
        )
        if best is None or state.bound > best.bound:
            best = state
    return best


def log_c_mf(
    X: CovariateTable,
    model: UtilityModel,
    theta: Theta,
    opts: MeanFieldOptions | None = None,
) -> float:
    """The bound value itself, i.e. the log of the approximated constant."""
    state = fixed_point_solve(X, model, theta, opts)
    if not state.converged:
        log.warning(
            "mean-field iteration hit max_iter without meeting tol (bound=%.6g)",
            state.bound,
        )
    return state.bound


class LogCMFCache:
    """Per-chain memo of bound solves keyed by the exact theta bit pattern.

    Stores only (bound, converged) per theta so a long chain stays small,
    and warm-starts each solve from the most recent solution, which cuts the
    iteration count sharply for the small proposal steps of a random walk.
    """

    def __init__(
        self,
        X: CovariateTable,
        model: UtilityModel,
        opts: MeanFieldOptions | None = None,
        warm_start: bool = True,
    ):
        self.X = X
        self.model = model
        self.opts = opts or MeanFieldOptions()
        self.warm_start = warm_start
        self._store: dict[bytes, tuple[float, bool]] = {}
        self._last_mu: np.ndarray | None = None
        self.failures = 0

    def __len__(self):
        return len(self._store)

    def bound(self, theta: Theta) -> tuple[float, bool]:
        key = theta.as_vector().tobytes()
        hit = self._store.get(key)
        if hit is not None:
            return hit
        opts = self.opts
        if self.warm_start and self._last_mu is not None:
            opts = MeanFieldOptions(
                init=self._last_mu,
                damping=opts.damping,
                tol=opts.tol,
                max_iter=opts.max_iter,
                restarts=opts.restarts,
                rng_seed=opts.rng_seed,
            )
        st = fixed_point_solve(self.X, self.model, theta, opts)
        if not st.converged:
            self.failures += 1
        else:
            self._last_mu = st.mu
        hit = (st.bound, st.converged)
        self._store[key] = hit
        return hit
