"""Reference numpy implementations of the lattice kernels.

All scores live in log space. Shapes: unary is (n, V) per-token label
scores, trans is (V, V) with trans[a, b] the score of label a followed by
label b, init is (V,) for the sentence-initial label.
"""

from __future__ import annotations

import numpy as np


def _logsumexp_rows(x: np.ndarray) -> np.ndarray:
    """Log-sum-exp over the last axis with max offsetting."""
    m = np.max(x, axis=-1, keepdims=True)
    return (m + np.log(np.sum(np.exp(x - m), axis=-1, keepdims=True)))[..., 0]


def forward_alpha(unary: np.ndarray, trans: np.ndarray, init: np.ndarray):
    """Forward log messages and the log partition function."""
    n, V = unary.shape
    alpha = np.empty((n, V))
    alpha[0] = init + unary[0]
    for t in range(1, n):
        # inner[b, a] = alpha[t-1, a] + trans[a, b]; sum over previous label a
        alpha[t] = _logsumexp_rows(trans.T + alpha[t - 1][None, :]) + unary[t]
    return alpha, float(_logsumexp_rows(alpha[n - 1]))


def backward_beta(unary: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Backward log messages; beta[n-1] is zero."""
    n, V = unary.shape
    beta = np.zeros((n, V))
    for t in range(n - 2, -1, -1):
        inner = trans + (unary[t + 1] + beta[t + 1])[None, :]
        beta[t] = _logsumexp_rows(inner)
    return beta


def posterior_marginals(alpha: np.ndarray, beta: np.ndarray, logZ: float) -> np.ndarray:
    """P(label at t = y | sentence), rows summing to one."""
    return np.exp(alpha + beta - logZ)


def expected_transitions(
    alpha: np.ndarray,
    beta: np.ndarray,
    unary: np.ndarray,
    trans: np.ndarray,
    logZ: float,
) -> np.ndarray:
    """Expected counts of each label bigram a->b under the posterior."""
    n, V = unary.shape
    E = np.zeros((V, V))
    for t in range(1, n):
        E += np.exp(alpha[t - 1][:, None] + trans + (unary[t] + beta[t])[None, :] - logZ)
    return E


def viterbi_path(unary: np.ndarray, trans: np.ndarray, init: np.ndarray):
    """Best label path and its score; ties resolve to the first maximum."""
    n, V = unary.shape
    delta = np.empty((n, V))
    bp = np.zeros((n, V), dtype=np.int32)
    delta[0] = init + unary[0]
    for t in range(1, n):
        scores = delta[t - 1][:, None] + trans
        bp[t] = np.argmax(scores, axis=0)
        delta[t] = scores[bp[t], np.arange(V)] + unary[t]
    path = np.empty(n, dtype=np.int32)
    path[n - 1] = int(np.argmax(delta[n - 1]))
    for t in range(n - 2, -1, -1):
        path[t] = bp[t + 1, path[t + 1]]
    return path, float(delta[n - 1, path[n - 1]])


def unary_from_features(W: np.ndarray, feat_idx: np.ndarray, feat_off: np.ndarray) -> np.ndarray:
    """Per-token label scores by summing weight rows of the active features.

    feat_idx holds the active feature rows for all tokens, flattened;
    feat_off[t]:feat_off[t+1] delimits token t.
    """
    n = feat_off.shape[0] - 1
    unary = np.zeros((n, W.shape[1]))
    counts = np.diff(feat_off)
    tok_ids = np.repeat(np.arange(n), counts)
    np.add.at(unary, tok_ids, W[feat_idx])
    return unary


def scatter_unary_grad(
    grad_W: np.ndarray, feat_idx: np.ndarray, feat_off: np.ndarray, coef: np.ndarray
) -> None:
    """Add coef[t] into grad_W[f] for every feature f active at token t."""
    n = feat_off.shape[0] - 1
    counts = np.diff(feat_off)
    tok_ids = np.repeat(np.arange(n), counts)
    np.add.at(grad_W, feat_idx, coef[tok_ids])
