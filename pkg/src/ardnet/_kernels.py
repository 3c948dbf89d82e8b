"""Hot numeric loops: heat-bath link updates and the mean-field fixed point.

Each kernel ships in two builds. The loop bodies below are compiled with
``numba.njit`` when numba is importable; the numpy build either reuses the
same body uncompiled (link updates, which are inherently sequential) or a
vectorised equivalent (mean-field iteration). ``backend.active_backend()``
picks the build at call time.
"""
from __future__ import annotations

import numpy as np

from .backend import HAS_NUMBA, active_backend

MU_CLAMP = 1e-12

# Bound dips smaller than this are treated as float noise; anything larger
# halves the damping factor.
ASCENT_SLACK = 1e-12


def _sweep_loop(adj, U, M, V, pairs, order, unif):
    # One heat-bath pass per row of `order`; adj is mutated in place.
    n = adj.shape[0]
    S, L = order.shape
    for s in range(S):
        for t in range(L):
            p = order[s, t]
            i = pairs[p, 0]
            j = pairs[p, 1]
            d = U[i, j] + 2.0 * M[i, j] * adj[j, i]
            for k in range(n):
                d += adj[j, k] * V[i, k] + adj[k, i] * V[k, j]
            if d >= 0.0:
                pr = 1.0 / (1.0 + np.exp(-d))
            else:
                e = np.exp(d)
                pr = e / (1.0 + e)
            adj[i, j] = unif[s, t] < pr


def _sweep_loop_record(adj, U, M, V, pairs, order, unif, codes):
    # Same pass as _sweep_loop, recording the packed link pattern per sweep.
    n = adj.shape[0]
    S, L = order.shape
    for s in range(S):
        for t in range(L):
            p = order[s, t]
            i = pairs[p, 0]
            j = pairs[p, 1]
            d = U[i, j] + 2.0 * M[i, j] * adj[j, i]
            for k in range(n):
                d += adj[j, k] * V[i, k] + adj[k, i] * V[k, j]
            if d >= 0.0:
                pr = 1.0 / (1.0 + np.exp(-d))
            else:
                e = np.exp(d)
                pr = e / (1.0 + e)
            adj[i, j] = unif[s, t] < pr
        c = 0
        for p in range(L):
            if adj[pairs[p, 0], pairs[p, 1]]:
                c += 1 << p
        codes[s] = c


def _meanfield_loop(U, M, V, mu, damping, tol, max_iter, trace):
    # Damped parallel update of every link probability, with the variational
    # bound tracked per iteration. mu is mutated in place; trace[:iters]
    # holds the bound path. Returns (iters, converged, bound, damping).
    n = U.shape[0]
    new = np.zeros((n, n))
    prev = -1.0e300
    bound = 0.0
    iters = 0
    converged = 0
    for it in range(max_iter):
        for i in range(n):
            for j in range(n):
                if i == j:
                    new[i, j] = 0.0
                    continue
                d = U[i, j] + 2.0 * M[i, j] * mu[j, i]
                for k in range(n):
                    d += V[i, k] * mu[j, k] + mu[k, i] * V[k, j]
                if d >= 0.0:
                    sg = 1.0 / (1.0 + np.exp(-d))
                else:
                    e = np.exp(d)
                    sg = e / (1.0 + e)
                v = (1.0 - damping) * mu[i, j] + damping * sg
                if v < MU_CLAMP:
                    v = MU_CLAMP
                elif v > 1.0 - MU_CLAMP:
                    v = 1.0 - MU_CLAMP
                new[i, j] = v
        step = 0.0
        for i in range(n):
            for j in range(n):
                df = new[i, j] - mu[i, j]
                if df < 0.0:
                    df = -df
                if df > step:
                    step = df
                mu[i, j] = new[i, j]
        # bound = expected potential + entropy, all loops kept inline so the
        # whole solve compiles as one unit
        ep = 0.0
        ent = 0.0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                m = mu[i, j]
                ep += m * U[i, j] + m * mu[j, i] * M[i, j]
                ent -= m * np.log(m) + (1.0 - m) * np.log(1.0 - m)
                s3 = 0.0
                for k in range(n):
                    s3 += mu[i, k] * mu[k, j]
                ep += s3 * V[i, j]
        bound = ep + ent
        trace[it] = bound
        iters = it + 1
        if bound < prev - ASCENT_SLACK:
            damping *= 0.5
        prev = bound
        if step < tol:
            converged = 1
            break
    return iters, converged, bound, damping


if HAS_NUMBA:
    from numba import njit

    _sweep_numba = njit(cache=True)(_sweep_loop)
    _sweep_record_numba = njit(cache=True)(_sweep_loop_record)
    _meanfield_numba = njit(cache=True)(_meanfield_loop)


def _sweep_numpy(adj, U, M, V, pairs, order, unif):
    # Sequential pass with the inner sums vectorised; same update law as the
    # compiled loop, dot-product summation order may differ in the last ulps.
    af = adj.astype(np.float64)
    S, L = order.shape
    for s in range(S):
        for t in range(L):
            p = order[s, t]
            i = pairs[p, 0]
            j = pairs[p, 1]
            d = U[i, j] + 2.0 * M[i, j] * af[j, i] + af[j] @ V[i] + af[:, i] @ V[:, j]
            if d >= 0.0:
                pr = 1.0 / (1.0 + np.exp(-d))
            else:
                e = np.exp(d)
                pr = e / (1.0 + e)
            hit = unif[s, t] < pr
            adj[i, j] = hit
            af[i, j] = 1.0 if hit else 0.0


def _sweep_record_numpy(adj, U, M, V, pairs, order, unif, codes):
    S, L = order.shape
    weights = 1 << np.arange(L, dtype=np.int64)
    flat = pairs[:, 0] * adj.shape[0] + pairs[:, 1]
    for s in range(S):
        _sweep_numpy(adj, U, M, V, pairs, order[s : s + 1], unif[s : s + 1])
        codes[s] = int(adj.reshape(-1)[flat].astype(np.int64) @ weights)


def _expected_potential_vec(mu, U, M, V):
    t1 = float(np.sum(mu * U))
    t2 = float(np.sum(mu * mu.T * M))
    t3 = float(np.sum((mu @ mu) * V))
    return t1 + t2 + t3


def _entropy_vec(mu):
    n = mu.shape[0]
    off = ~np.eye(n, dtype=bool)
    m = mu[off]
    return float(-np.sum(m * np.log(m) + (1.0 - m) * np.log(1.0 - m)))


def _meanfield_numpy(U, M, V, mu, damping, tol, max_iter, trace):
    n = U.shape[0]
    diag = np.diag_indices(n)
    prev = -np.inf
    bound = 0.0
    iters = 0
    converged = 0
    for it in range(max_iter):
        D = U + 2.0 * M * mu.T + V @ mu.T + mu.T @ V
        sg = 1.0 / (1.0 + np.exp(-np.clip(D, -700.0, 700.0)))
        new = (1.0 - damping) * mu + damping * sg
        np.clip(new, MU_CLAMP, 1.0 - MU_CLAMP, out=new)
        new[diag] = 0.0
        step = float(np.max(np.abs(new - mu)))
        mu[:] = new
        bound = _expected_potential_vec(mu, U, M, V) + _entropy_vec(mu)
        trace[it] = bound
        iters = it + 1
        if bound < prev - ASCENT_SLACK:
            damping *= 0.5
        prev = bound
        if step < tol:
            converged = 1
            break
    return iters, converged, bound, damping


def glauber_sweeps(adj, U, M, V, pairs, order, unif):
    """Run ``order.shape[0]`` heat-bath sweeps in place."""
    if active_backend() == "numba":
        _sweep_numba(adj, U, M, V, pairs, order, unif)
    else:
        _sweep_numpy(adj, U, M, V, pairs, order, unif)


def glauber_sweeps_record(adj, U, M, V, pairs, order, unif, codes):
    """Like :func:`glauber_sweeps` but stores the packed state after each sweep."""
    if active_backend() == "numba":
        _sweep_record_numba(adj, U, M, V, pairs, order, unif, codes)
    else:
        _sweep_record_numpy(adj, U, M, V, pairs, order, unif, codes)


def meanfield_iterate(U, M, V, mu, damping, tol, max_iter, trace):
    """Drive the damped fixed-point iteration; returns (iters, converged, bound, damping)."""
    if active_backend() == "numba":
        return _meanfield_numba(U, M, V, mu, damping, tol, max_iter, trace)
    return _meanfield_numpy(U, M, V, mu, damping, tol, max_iter, trace)
