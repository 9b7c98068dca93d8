"""Pure-numpy collapsed-Gibbs sweep, the fallback when the compiled
kernel is unavailable.

Numerically identical to the Cython kernel: per-topic weights are built
with the same expression order, the cumulative sum is sequential, and
the selected topic is the first index whose cumulative weight exceeds
u * total (clamped to K-1), so both kernels produce the same chain from
the same uniforms.
"""

from __future__ import annotations

import numpy as np


def sweep(z, doc_of, word_of, n_dk, n_kw, n_k, alpha, beta, beta_row_sums, u):
    """One full pass over all token positions, updating state in place."""
    n = z.shape[0]
    K = n_kw.shape[0]
    for j in range(n):
        d = doc_of[j]
        w = word_of[j]
        old = z[j]

        n_dk[d, old] -= 1
        n_kw[old, w] -= 1
        n_k[old] -= 1

        p = (n_dk[d, :] + alpha) * (n_kw[:, w] + beta[:, w]) / (n_k + beta_row_sums)
        cum = np.cumsum(p)

        r = u[j] * cum[K - 1]
        new = int(np.searchsorted(cum, r, side="right"))
        if new >= K:
            new = K - 1

        z[j] = new
        n_dk[d, new] += 1
        n_kw[new, w] += 1
        n_k[new] += 1
