"""Brute-force enumeration over every directed network on up to five nodes.

Each of the 2**(n*(n-1)) link patterns maps to an integer code whose bit p
is the link at ``ordered_pairs(n)[p]``. Enumeration walks the codes in
chunks and evaluates the potential of every network from its bit columns,
which yields the exact constant, the exact stationary law, exact answer
likelihoods and the grid posteriors that back the sampler's tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ard import ArdQuerySet, ArdVector, query_masks
from .errors import CapacityError, DegenerateEvidenceError, ValidationError
from .model import (
    CovariateTable,
    Network,
    Theta,
    UtilityModel,
    ordered_pairs,
    utility_matrices,
)

N_MAX = 5
GRID_MAX_POINTS = 10_000
_CHUNK = 1 << 16


def _check_capacity(n: int) -> None:
    if n > N_MAX:
        raise CapacityError(f"exact enumeration is capped at n={N_MAX}, got n={n}")


def logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + float(np.log(np.sum(np.exp(x - m))))


def network_code(g: Network) -> int:
    pairs = ordered_pairs(g.n)
    bits = g.adj[pairs[:, 0], pairs[:, 1]].astype(np.int64)
    return int(bits @ (1 << np.arange(pairs.shape[0], dtype=np.int64)))


def network_from_code(code: int, n: int) -> Network:
    pairs = ordered_pairs(n)
    adj = np.zeros((n, n), dtype=bool)
    for p in range(pairs.shape[0]):
        if (code >> p) & 1:
            adj[pairs[p, 0], pairs[p, 1]] = True
    return Network(adj)


def _pair_tables(n: int, V: np.ndarray):
    pairs = ordered_pairs(n)
    index = np.full((n, n), -1, dtype=np.int64)
    for p in range(pairs.shape[0]):
        index[pairs[p, 0], pairs[p, 1]] = p
    rev = index[pairs[:, 1], pairs[:, 0]]
    trip_a, trip_b, trip_c = [], [], []
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for k in range(n):
                if k == i or k == j:
                    continue
                trip_a.append(index[i, j])
                trip_b.append(index[j, k])
                trip_c.append(V[i, k])
    return (
        pairs,
        rev,
        np.asarray(trip_a, dtype=np.int64),
        np.asarray(trip_b, dtype=np.int64),
        np.asarray(trip_c, dtype=np.float64),
    )


def enumerate_potentials(
    X: CovariateTable, model: UtilityModel, theta: Theta
) -> np.ndarray:
    """Potential of every network, indexed by code; shape (2**(n*(n-1)),)."""
    n = X.n
    _check_capacity(n)
    U, M, V = utility_matrices(model, theta, X)
    pairs, rev, ta, tb, tc = _pair_tables(n, V)
    L = pairs.shape[0]
    u_flat = U[pairs[:, 0], pairs[:, 1]]
    m_flat = M[pairs[:, 0], pairs[:, 1]]
    shifts = np.arange(L, dtype=np.int64)
    total = 1 << L
    out = np.empty(total)
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        q = bits @ u_flat
        q += (bits * bits[:, rev]) @ m_flat
        if ta.size:
            q += (bits[:, ta] * bits[:, tb]) @ tc
        out[lo:hi] = q
    return out


def enumerate_ard(X: CovariateTable, qs: ArdQuerySet) -> np.ndarray:
    """Answer matrix of every network, shape (2**L, n*len(qs)), int8."""
    n = X.n
    _check_capacity(n)
    pairs = ordered_pairs(n)
    L = pairs.shape[0]
    masks = query_masks(X, qs)
    nq = len(qs)
    # weight[p, i*nq + k] = 1 when link at pair p counts toward answer (i, k)
    W = np.zeros((L, n * nq), dtype=np.float64)
    for p in range(L):
        a, b = pairs[p]
        for k, (q, mask) in enumerate(zip(qs.queries, masks)):
            if q.direction == "outbound":
                W[p, a * nq + k] = 1.0 if mask[a, b] else 0.0
            else:
                W[p, b * nq + k] = 1.0 if mask[b, a] else 0.0
    shifts = np.arange(L, dtype=np.int64)
    total = 1 << L
    out = np.empty((total, n * nq), dtype=np.int8)
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        codes = np.arange(lo, hi, dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        out[lo:hi] = np.rint(bits @ W).astype(np.int8)
    return out


def ard_cells(X: CovariateTable, qs: ArdQuerySet):
    """Partition cells: (cell id per code, unique answer rows as int64)."""
    psi = enumerate_ard(X, qs)
    packed = np.ascontiguousarray(psi).view(
        np.dtype((np.void, psi.dtype.itemsize * psi.shape[1]))
    ).ravel()
    _, first, inverse = np.unique(packed, return_index=True, return_inverse=True)
    return inverse.astype(np.int64), psi[first].astype(np.int64)


def log_c_exact(X: CovariateTable, model: UtilityModel, theta: Theta) -> float:
    """Log of the exact normalizing constant via stable log-sum-exp."""
    return logsumexp(enumerate_potentials(X, model, theta))


def exact_pi(
    g: Network, X: CovariateTable, model: UtilityModel, theta: Theta
) -> float:
    """Exact stationary probability of one network."""
    from .model import potential

    _check_capacity(X.n)
    return float(np.exp(potential(g, X, model, theta) - log_c_exact(X, model, theta)))


def exact_pi_all(X: CovariateTable, model: UtilityModel, theta: Theta) -> np.ndarray:
    """Exact stationary probabilities of every network, indexed by code."""
    q = enumerate_potentials(X, model, theta)
    return np.exp(q - logsumexp(q))


def exact_ard_likelihood(
    psi0: ArdVector,
    X: CovariateTable,
    model: UtilityModel,
    theta: Theta,
    queries: ArdQuerySet,
) -> float:
    """Total stationary mass of the networks whose answers equal psi0."""
    _check_capacity(X.n)
    if psi0.values.size != queries.d_psi(X.n):
        raise ValidationError("answer vector does not match the query set")
    psi = enumerate_ard(X, queries)
    mask = np.all(psi == psi0.values[None, :], axis=1)
    if not mask.any():
        return 0.0
    pi = exact_pi_all(X, model, theta)
    return float(pi[mask].sum())


@dataclass(frozen=True)
class ThetaGrid:
    """Cartesian coefficient grid, row-major, optionally filtered."""

    axes: tuple
    points: np.ndarray

    @classmethod
    def from_axes(cls, axes, keep=None) -> "ThetaGrid":
        arrays = tuple(np.asarray(a, dtype=np.float64) for a in axes)
        for a in arrays:
            if a.size == 0:
                raise ValidationError("grid axes must be non-empty")
            if not np.all(np.isfinite(a)):
                raise ValidationError("grid axes must be finite")
        mesh = np.stack(np.meshgrid(*arrays, indexing="ij"), axis=-1)
        points = mesh.reshape(-1, len(arrays))
        if keep is not None:
            sel = np.array([bool(keep(p)) for p in points])
            points = points[sel]
        if points.shape[0] == 0:
            raise ValidationError("grid filter removed every point")
        if points.shape[0] > GRID_MAX_POINTS:
            raise ValidationError(f"grid is capped at {GRID_MAX_POINTS} points")
        return cls(arrays, points)

    def __len__(self):
        return self.points.shape[0]


def _prior_values(prior, points: np.ndarray) -> np.ndarray:
    if prior is None:
        return np.ones(points.shape[0])
    if callable(prior):
        vals = np.array([float(prior(p)) for p in points])
    else:
        vals = np.asarray(prior, dtype=np.float64)
        if vals.size != points.shape[0]:
            raise ValidationError("prior weights must match the number of grid points")
    if np.any(vals < 0):
        raise ValidationError("prior weights must be non-negative")
    return vals


def exact_posterior_on_grid(
    observation,
    X: CovariateTable,
    model: UtilityModel,
    grid: ThetaGrid,
    prior=None,
    queries: ArdQuerySet | None = None,
) -> np.ndarray:
    """Normalized posterior weights over the grid.

    ``observation`` is either an :class:`ArdVector` (needs ``queries``; the
    likelihood is the answer-cell mass) or a :class:`Network` (likelihood is
    the exact stationary probability). Weights are prior times likelihood,
    normalized to sum to one.
    """
    _check_capacity(X.n)
    pvals = _prior_values(prior, grid.points)
    like = np.empty(len(grid))
    if isinstance(observation, ArdVector):
        if queries is None:
            raise ValidationError("answer-vector observations need the query set")
        psi = enumerate_ard(X, queries)
        mask = np.all(psi == observation.values[None, :], axis=1)
        for t, point in enumerate(grid.points):
            theta = Theta.from_vector(model, point)
            pi = exact_pi_all(X, model, theta)
            like[t] = float(pi[mask].sum())
    elif isinstance(observation, Network):
        code = network_code(observation)
        for t, point in enumerate(grid.points):
            theta = Theta.from_vector(model, point)
            pi = exact_pi_all(X, model, theta)
            like[t] = float(pi[code])
    else:
        raise ValidationError("observation must be an ArdVector or a Network")
    w = pvals * like
    total = w.sum()
    if total <= 0.0:
        raise DegenerateEvidenceError("all grid points received zero weight")
    return w / total


def sufficiency_variation(
    queries: ArdQuerySet,
    X: CovariateTable,
    model: UtilityModel,
    grid: ThetaGrid,
) -> float:
    """Largest spread over the grid of P[network | its own answers].

    Zero (within float noise) certifies that the conditional law of the
    network given its answers does not move with the coefficients, for every
    network and every pair of grid points.
    """
    _check_capacity(X.n)
    cell_ids, _ = ard_cells(X, queries)
    ncells = int(cell_ids.max()) + 1
    pmax = np.full(cell_ids.shape[0], -np.inf)
    pmin = np.full(cell_ids.shape[0], np.inf)
    for point in grid.points:
        theta = Theta.from_vector(model, point)
        pi = exact_pi_all(X, model, theta)
        cell_mass = np.bincount(cell_ids, weights=pi, minlength=ncells)
        cond = pi / cell_mass[cell_ids]
        np.maximum(pmax, cond, out=pmax)
        np.minimum(pmin, cond, out=pmin)
    return float(np.max(pmax - pmin))
