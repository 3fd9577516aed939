"""Numba-compiled lattice kernels, loop-for-loop equivalents of the numpy ones.

Compiled lazily on first call and cached on disk, so repeated processes pay
the compile cost once.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _logsumexp_vec(x):
    m = x[0]
    for i in range(1, x.shape[0]):
        if x[i] > m:
            m = x[i]
    s = 0.0
    for i in range(x.shape[0]):
        s += np.exp(x[i] - m)
    return m + np.log(s)


@njit(cache=True)
def forward_alpha(unary, trans, init):
    n, V = unary.shape
    alpha = np.empty((n, V))
    for b in range(V):
        alpha[0, b] = init[b] + unary[0, b]
    work = np.empty(V)
    for t in range(1, n):
        for b in range(V):
            for a in range(V):
                work[a] = alpha[t - 1, a] + trans[a, b]
            alpha[t, b] = _logsumexp_vec(work) + unary[t, b]
    return alpha, _logsumexp_vec(alpha[n - 1])


@njit(cache=True)
def backward_beta(unary, trans):
    n, V = unary.shape
    beta = np.zeros((n, V))
    work = np.empty(V)
    for t in range(n - 2, -1, -1):
        for a in range(V):
            for b in range(V):
                work[b] = trans[a, b] + unary[t + 1, b] + beta[t + 1, b]
            beta[t, a] = _logsumexp_vec(work)
    return beta


@njit(cache=True)
def posterior_marginals(alpha, beta, logZ):
    n, V = alpha.shape
    gamma = np.empty((n, V))
    for t in range(n):
        for y in range(V):
            gamma[t, y] = np.exp(alpha[t, y] + beta[t, y] - logZ)
    return gamma


@njit(cache=True)
def expected_transitions(alpha, beta, unary, trans, logZ):
    n, V = unary.shape
    E = np.zeros((V, V))
    for t in range(1, n):
        for a in range(V):
            for b in range(V):
                E[a, b] += np.exp(
                    alpha[t - 1, a] + trans[a, b] + unary[t, b] + beta[t, b] - logZ
                )
    return E


@njit(cache=True)
def viterbi_path(unary, trans, init):
    n, V = unary.shape
    delta = np.empty((n, V))
    bp = np.zeros((n, V), dtype=np.int32)
    for b in range(V):
        delta[0, b] = init[b] + unary[0, b]
    for t in range(1, n):
        for b in range(V):
            best = delta[t - 1, 0] + trans[0, b]
            arg = 0
            for a in range(1, V):
                s = delta[t - 1, a] + trans[a, b]
                if s > best:
                    best = s
                    arg = a
            delta[t, b] = best + unary[t, b]
            bp[t, b] = arg
    path = np.empty(n, dtype=np.int32)
    best = delta[n - 1, 0]
    arg = 0
    for b in range(1, V):
        if delta[n - 1, b] > best:
            best = delta[n - 1, b]
            arg = b
    path[n - 1] = arg
    for t in range(n - 2, -1, -1):
        path[t] = bp[t + 1, path[t + 1]]
    return path, delta[n - 1, path[n - 1]]


@njit(cache=True)
def unary_from_features(W, feat_idx, feat_off):
    n = feat_off.shape[0] - 1
    V = W.shape[1]
    unary = np.zeros((n, V))
    for t in range(n):
        for p in range(feat_off[t], feat_off[t + 1]):
            f = feat_idx[p]
            for y in range(V):
                unary[t, y] += W[f, y]
    return unary


@njit(cache=True)
def scatter_unary_grad(grad_W, feat_idx, feat_off, coef):
    n = feat_off.shape[0] - 1
    V = coef.shape[1]
    for t in range(n):
        for p in range(feat_off[t], feat_off[t + 1]):
            f = feat_idx[p]
            for y in range(V):
                grad_W[f, y] += coef[t, y]
