"""Pairwise-scan kernels with a compiled core and a numpy fallback.

The O(n^2) scans (largest intra-region distance, largest pair gain) are the
hot loops of the experiment harness. `max_pairwise_dist` and `max_pair_gain`
resolve to the compiled Cython versions when the extension was built, and
to the chunked numpy twins otherwise. Set UNRECTIFY_FORCE_FALLBACK=1 to
force the fallback (used by tests and the benchmark).
"""

import os

from . import _pairwise_np

BACKEND = "numpy"

if not os.environ.get("UNRECTIFY_FORCE_FALLBACK"):
    try:
        from . import _pairwise_cy  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "cython":
    max_pairwise_dist = _pairwise_cy.max_pairwise_dist
    max_pair_gain = _pairwise_cy.max_pair_gain
else:
    max_pairwise_dist = _pairwise_np.max_pairwise_dist
    max_pair_gain = _pairwise_np.max_pair_gain
