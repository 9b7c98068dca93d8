# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled collapsed-Gibbs sweep.

Must stay numerically identical to topicstream.kernels.py_gibbs.sweep:
same expression order per topic, sequential cumulative sum, and the same
first-index-exceeding selection rule, so that both kernels walk the same
chain from the same pre-drawn uniforms.
"""

import numpy as np

cimport numpy as cnp


def sweep(int[::1] z,
          const int[::1] doc_of,
          const int[::1] word_of,
          int[:, ::1] n_dk,
          int[:, ::1] n_kw,
          int[::1] n_k,
          double alpha,
          const double[:, ::1] beta,
          const double[::1] beta_row_sums,
          const double[::1] u):
    """One full pass over all token positions, updating state in place."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t K = n_kw.shape[0]
    cdef Py_ssize_t j, k, new
    cdef int d, w, old
    cdef double acc, r, p
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cum_arr = np.empty(K, dtype=np.float64)
    cdef double[::1] cum = cum_arr

    for j in range(n):
        d = doc_of[j]
        w = word_of[j]
        old = z[j]

        n_dk[d, old] -= 1
        n_kw[old, w] -= 1
        n_k[old] -= 1

        acc = 0.0
        for k in range(K):
            p = (n_dk[d, k] + alpha) * (n_kw[k, w] + beta[k, w]) / (n_k[k] + beta_row_sums[k])
            acc = acc + p
            cum[k] = acc

        r = u[j] * cum[K - 1]
        new = 0
        while new < K - 1 and cum[new] <= r:
            new += 1

        z[j] = <int>new
        n_dk[d, new] += 1
        n_kw[new, w] += 1
        n_k[new] += 1
