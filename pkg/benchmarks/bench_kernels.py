"""Compare the numba lattice kernels against the numpy reference.

Runs every kernel on the same batch of random lattices, checks that both
backends agree to near machine precision, and reports per-kernel timings.

    python3 benchmarks/bench_kernels.py --sentences 300 --repeats 5
"""

import argparse
import time

import numpy as np

from selftag.kernels import _numpy_impl

try:
    from selftag.kernels import _numba_impl
except ImportError:
    _numba_impl = None


def make_batch(rng, sentences, V, features, per_token):
    batch = []
    for _ in range(sentences):
        n = int(rng.integers(5, 31))
        unary = rng.normal(size=(n, V))
        feat_idx = rng.integers(0, features, size=n * per_token).astype(np.int64)
        feat_off = (np.arange(n + 1) * per_token).astype(np.int64)
        batch.append((unary, feat_idx, feat_off))
    trans = rng.normal(size=(V, V))
    init = rng.normal(size=V)
    W = rng.normal(size=(features, V))
    return batch, trans, init, W


def run_backend(impl, batch, trans, init, W):
    """One full pass over the batch; returns outputs for the parity check."""
    sink = []
    for unary, feat_idx, feat_off in batch:
        scored = impl.unary_from_features(W, feat_idx, feat_off) + unary
        alpha, logZ = impl.forward_alpha(scored, trans, init)
        beta = impl.backward_beta(scored, trans)
        gamma = impl.posterior_marginals(alpha, beta, logZ)
        E = impl.expected_transitions(alpha, beta, scored, trans, logZ)
        path, score = impl.viterbi_path(scored, trans, init)
        grad = np.zeros_like(W)
        impl.scatter_unary_grad(grad, feat_idx, feat_off, gamma)
        sink.append((logZ, gamma, E, np.asarray(path), score, grad))
    return sink


def time_backend(impl, batch, trans, init, W, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        run_backend(impl, batch, trans, init, W)
        best = min(best, time.perf_counter() - start)
    return best


def check_parity(numpy_out, numba_out):
    for ref, got in zip(numpy_out, numba_out):
        np.testing.assert_allclose(got[0], ref[0], atol=1e-10)  # logZ
        np.testing.assert_allclose(got[1], ref[1], atol=1e-10)  # marginals
        np.testing.assert_allclose(got[2], ref[2], atol=1e-10)  # transition counts
        assert np.array_equal(got[3], ref[3])  # viterbi path
        np.testing.assert_allclose(got[4], ref[4], atol=1e-10)  # viterbi score
        np.testing.assert_allclose(got[5], ref[5], atol=1e-10)  # scattered gradient


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=300)
    ap.add_argument("--labels", type=int, default=9)
    ap.add_argument("--features", type=int, default=5000)
    ap.add_argument("--per-token", type=int, default=14)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    batch, trans, init, W = make_batch(
        rng, args.sentences, args.labels, args.features, args.per_token
    )

    numpy_out = run_backend(_numpy_impl, batch, trans, init, W)
    numpy_time = time_backend(_numpy_impl, batch, trans, init, W, args.repeats)
    print(f"numpy   {numpy_time * 1000:9.1f} ms / pass")

    if _numba_impl is None:
        print("numba   unavailable (package not importable)")
        return

    # first pass triggers JIT compilation, so run once before timing
    numba_out = run_backend(_numba_impl, batch, trans, init, W)
    check_parity(numpy_out, numba_out)
    numba_time = time_backend(_numba_impl, batch, trans, init, W, args.repeats)
    print(f"numba   {numba_time * 1000:9.1f} ms / pass")
    print(f"speedup {numpy_time / numba_time:9.2f}x  (outputs agree to 1e-10)")


if __name__ == "__main__":
    main()
