"""Shared test utilities: an independent synthetic-LDA generator used as
the recovery oracle, and greedy topic matching."""

import numpy as np

from topicstream.preprocess import ProcessedDoc


def block_topics(k_true: int, vocab_size: int, block_mass: float = 0.95) -> np.ndarray:
    """Well-separated true topics: topic k puts block_mass uniformly on
    its own contiguous word block, the rest spread over the vocabulary."""
    block = vocab_size // k_true
    topics = np.full((k_true, vocab_size), (1 - block_mass) / (vocab_size - block))
    for k in range(k_true):
        topics[k, k * block:(k + 1) * block] = block_mass / block
    return topics / topics.sum(axis=1, keepdims=True)


def draw_corpus(topics: np.ndarray, n_docs: int, doc_length: int, seed: int,
                doc_alpha: float = 0.1) -> list[ProcessedDoc]:
    """Scripted LDA sampler: docs drawn from the given true topics."""
    rng = np.random.default_rng(seed)
    k_true, vocab_size = topics.shape
    docs = []
    for d in range(n_docs):
        theta = rng.dirichlet(np.full(k_true, doc_alpha))
        counts = rng.multinomial(doc_length, theta)
        ids = []
        for k, c in enumerate(counts):
            if c:
                ids.extend(rng.choice(vocab_size, size=c, p=topics[k]).tolist())
        docs.append(ProcessedDoc(str(d), ids))
    return docs


def greedy_cosine_match(phi_est: np.ndarray, phi_true: np.ndarray) -> list[float]:
    """Greedy one-to-one matching of estimated to true topics by cosine;
    returns the matched cosines (length = number of true topics)."""
    est = phi_est / np.linalg.norm(phi_est, axis=1, keepdims=True)
    true = phi_true / np.linalg.norm(phi_true, axis=1, keepdims=True)
    sims = est @ true.T
    matched = []
    avail_e = set(range(est.shape[0]))
    avail_t = set(range(true.shape[0]))
    while avail_e and avail_t:
        best = max(((sims[e, t], e, t) for e in avail_e for t in avail_t))
        matched.append(float(best[0]))
        avail_e.discard(best[1])
        avail_t.discard(best[2])
    return matched
