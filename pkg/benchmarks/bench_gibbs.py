#!/usr/bin/env python3
"""Benchmark the compiled Gibbs-sweep kernel against the pure-Python
fallback on a synthetic slice, and verify that both walk the same chain.

Usage: python benchmarks/bench_gibbs.py [--docs N] [--doc-length L]
                                        [--topics K] [--vocab V] [--sweeps S]
"""

import argparse
import time

import numpy as np

from topicstream import kernels, lda
from topicstream.preprocess import ProcessedDoc


def make_docs(n_docs, doc_length, vocab_size, seed):
    rng = np.random.default_rng(seed)
    return [ProcessedDoc(str(d), rng.integers(0, vocab_size, doc_length).tolist())
            for d in range(n_docs)]


def run(kernel_name, docs, priors, sweeps, seed):
    kernel = kernels.get_kernel(kernel_name)
    state = lda.init_state(docs, priors, seed)
    beta = priors.beta_matrix
    beta_sums = beta.sum(axis=1)
    start = time.perf_counter()
    for _ in range(sweeps):
        u = state.rng.random(state.n_tokens)
        kernel(state.z, state.doc_of, state.word_of,
               state.n_dk, state.n_kw, state.n_k,
               priors.alpha, beta, beta_sums, u)
    elapsed = time.perf_counter() - start
    return state, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=200)
    parser.add_argument("--doc-length", type=int, default=50)
    parser.add_argument("--topics", type=int, default=10)
    parser.add_argument("--vocab", type=int, default=500)
    parser.add_argument("--sweeps", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    docs = make_docs(args.docs, args.doc_length, args.vocab, args.seed)
    priors = lda.PriorSpec(0.5, np.full((args.topics, args.vocab), 0.01))
    tokens = args.docs * args.doc_length
    print(f"corpus: {args.docs} docs x {args.doc_length} tokens, "
          f"K={args.topics}, V={args.vocab}, {args.sweeps} sweeps")
    print(f"selected kernel at import: {kernels.KERNEL_NAME}")

    state_py, t_py = run("python", docs, priors, args.sweeps, args.seed)
    rate_py = tokens * args.sweeps / t_py
    print(f"python   kernel: {t_py:8.3f} s  ({rate_py:12.0f} tokens/s)")

    if kernels.HAVE_COMPILED:
        state_c, t_c = run("compiled", docs, priors, args.sweeps, args.seed)
        rate_c = tokens * args.sweeps / t_c
        print(f"compiled kernel: {t_c:8.3f} s  ({rate_c:12.0f} tokens/s)")
        print(f"speedup: {t_py / t_c:.1f}x")
        same = (np.array_equal(state_py.z, state_c.z)
                and np.array_equal(state_py.n_kw, state_c.n_kw))
        print(f"identical chains: {same}")
        if not same:
            raise SystemExit("kernel mismatch: chains diverged")
    else:
        print("compiled kernel not available; skipping comparison")


if __name__ == "__main__":
    main()
