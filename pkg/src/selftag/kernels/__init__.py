"""Lattice kernels with a compiled and a pure-numpy backend.

The SELFTAG_BACKEND environment variable picks the implementation at import
time: "numba" (default when numba imports cleanly) or "numpy". Both expose
the same functions with the same semantics; only speed differs.
"""

from __future__ import annotations

import os

_choice = os.environ.get("SELFTAG_BACKEND", "").strip().lower()
if _choice not in ("", "numba", "numpy"):
    raise ValueError(
        f"SELFTAG_BACKEND={_choice!r}: expected 'numba' or 'numpy'"
    )

if _choice in ("", "numba"):
    try:
        from . import _numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import _numpy_impl as _impl

        BACKEND = "numpy"
else:
    from . import _numpy_impl as _impl

    BACKEND = "numpy"

forward_alpha = _impl.forward_alpha
backward_beta = _impl.backward_beta
posterior_marginals = _impl.posterior_marginals
expected_transitions = _impl.expected_transitions
viterbi_path = _impl.viterbi_path
unary_from_features = _impl.unary_from_features
scatter_unary_grad = _impl.scatter_unary_grad

__all__ = [
    "BACKEND",
    "forward_alpha",
    "backward_beta",
    "posterior_marginals",
    "expected_transitions",
    "viterbi_path",
    "unary_from_features",
    "scatter_unary_grad",
]
