"""Collapsed Gibbs sampler for LDA over one time slice.

The sampler accepts an asymmetric per-topic, per-word prior matrix, which
is how the slice-to-slice prior chaining enters the model. The per-sweep
inner loop runs in the compiled kernel when available (see
topicstream.kernels); uniforms are pre-drawn per sweep from a seeded
generator so both kernels walk identical chains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, InvariantError
from .preprocess import ProcessedDoc

ROW_SUM_TOL = 1e-9


@dataclass
class PriorSpec:
    """Symmetric document-topic prior plus an asymmetric topic-word prior
    matrix (row k is the prior over words for topic k)."""

    alpha: float
    beta_matrix: np.ndarray  # (K, V)

    def __post_init__(self):
        self.beta_matrix = np.ascontiguousarray(self.beta_matrix, dtype=np.float64)
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.beta_matrix.ndim != 2:
            raise ConfigError("beta_matrix must be K x V")
        if not np.all(self.beta_matrix > 0):
            raise ConfigError("beta_matrix entries must all be > 0")

    @property
    def n_topics(self) -> int:
        return self.beta_matrix.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.beta_matrix.shape[1]


def symmetric_prior(n_topics: int, vocab_size: int, alpha: float,
                    base_beta: float) -> PriorSpec:
    """Cold-start prior: uniform base_beta everywhere."""
    return PriorSpec(alpha, np.full((n_topics, vocab_size), base_beta))


class TopicModelState:
    """Gibbs sampler state: token topic assignments plus count matrices."""

    def __init__(self, docs: list[ProcessedDoc], priors: PriorSpec, seed: int):
        K, V = priors.n_topics, priors.vocab_size
        if K < 2:
            raise ConfigError(f"K must be >= 2, got {K}")
        if not docs:
            raise ConfigError("cannot initialize a model on an empty corpus")

        doc_of = []
        word_of = []
        for d, doc in enumerate(docs):
            doc_of.extend([d] * doc.length)
            word_of.extend(doc.token_ids)
        if not word_of:
            raise ConfigError("corpus has no tokens after preprocessing")
        self.doc_of = np.asarray(doc_of, dtype=np.int32)
        self.word_of = np.asarray(word_of, dtype=np.int32)
        if int(self.word_of.max()) >= V:
            raise ConfigError("document token id exceeds prior vocabulary size")

        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.n_docs = len(docs)
        self.n_topics = K
        self.vocab_size = V
        self.doc_lengths = np.asarray([doc.length for doc in docs], dtype=np.int64)

        self.z = self.rng.integers(0, K, size=self.word_of.shape[0], dtype=np.int32)
        self.n_dk = np.zeros((self.n_docs, K), dtype=np.int32)
        self.n_kw = np.zeros((K, V), dtype=np.int32)
        self.n_k = np.zeros(K, dtype=np.int32)
        np.add.at(self.n_dk, (self.doc_of, self.z), 1)
        np.add.at(self.n_kw, (self.z, self.word_of), 1)
        np.add.at(self.n_k, self.z, 1)

    @property
    def n_tokens(self) -> int:
        return self.z.shape[0]

    def validate(self) -> None:
        """Raise InvariantError if the count matrices disagree with the
        assignments or document lengths."""
        if not np.array_equal(self.n_dk.sum(axis=1), self.doc_lengths):
            raise InvariantError("per-document topic counts do not sum to doc lengths")
        if not np.array_equal(self.n_kw.sum(axis=1), self.n_k):
            raise InvariantError("topic-word counts do not sum to topic totals")
        if int(self.n_k.sum()) != self.n_tokens:
            raise InvariantError("topic totals do not sum to the token count")


def init_state(docs: list[ProcessedDoc], priors: PriorSpec, seed: int) -> TopicModelState:
    """Assign every token a uniformly random topic from the seeded generator."""
    return TopicModelState(docs, priors, seed)


def gibbs_sweep(state: TopicModelState, priors: PriorSpec, kernel=None) -> TopicModelState:
    """One full resampling pass over all token positions, in place."""
    if kernel is None:
        kernel = kernels.sweep
    beta = priors.beta_matrix
    beta_row_sums = beta.sum(axis=1)
    u = state.rng.random(state.n_tokens)
    kernel(state.z, state.doc_of, state.word_of,
           state.n_dk, state.n_kw, state.n_k,
           float(priors.alpha), beta, beta_row_sums, u)
    return state


def estimate_phi(state: TopicModelState, priors: PriorSpec) -> np.ndarray:
    """Posterior topic-word estimate: (n_kw + beta) / (n_k + sum beta_k)."""
    beta = priors.beta_matrix
    denom = state.n_k + beta.sum(axis=1)
    return (state.n_kw + beta) / denom[:, None]


def estimate_theta(state: TopicModelState, alpha: float) -> np.ndarray:
    """Posterior doc-topic estimate: (n_dk + alpha) / (len_d + K*alpha)."""
    K = state.n_topics
    denom = state.doc_lengths + K * alpha
    if alpha == 0:
        # guard 0/0 for empty documents; rows become uniform
        denom = np.where(denom == 0, 1.0, denom)
    return (state.n_dk + alpha) / denom[:, None]


def train(docs: list[ProcessedDoc], priors: PriorSpec, n_sweeps: int,
          burn_in: int, seed: int, sample_lag: int = 20,
          kernel_name: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Run init plus n_sweeps sweeps; phi/theta are averages of the
    post-burn-in estimates taken every sample_lag sweeps (the first
    post-burn-in sweep is always sampled)."""
    if burn_in < 0 or n_sweeps <= burn_in:
        raise ConfigError(f"need n_sweeps > burn_in >= 0, got {n_sweeps}/{burn_in}")
    if sample_lag < 1:
        raise ConfigError(f"sample_lag must be >= 1, got {sample_lag}")

    kernel = kernels.get_kernel(kernel_name)
    state = init_state(docs, priors, seed)
    beta = priors.beta_matrix
    beta_row_sums = beta.sum(axis=1)
    alpha = float(priors.alpha)

    phi_acc = np.zeros((state.n_topics, state.vocab_size))
    theta_acc = np.zeros((state.n_docs, state.n_topics))
    n_samples = 0
    for sweep_no in range(1, n_sweeps + 1):
        u = state.rng.random(state.n_tokens)
        kernel(state.z, state.doc_of, state.word_of,
               state.n_dk, state.n_kw, state.n_k,
               alpha, beta, beta_row_sums, u)
        if sweep_no > burn_in and (sweep_no - burn_in - 1) % sample_lag == 0:
            phi_acc += estimate_phi(state, priors)
            theta_acc += estimate_theta(state, alpha)
            n_samples += 1

    phi = phi_acc / n_samples
    theta = theta_acc / n_samples
    _check_rows(phi, "phi")
    _check_rows(theta, "theta")
    return phi, theta


def _check_rows(matrix: np.ndarray, name: str) -> None:
    sums = matrix.sum(axis=1)
    if matrix.size and np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
        raise InvariantError(f"{name} rows deviate from 1 by more than {ROW_SUM_TOL}")


CHECKPOINT_VERSION = 1


def save_checkpoint(path, phi: np.ndarray, theta: np.ndarray, priors: PriorSpec,
                    seed: int, n_sweeps: int) -> None:
    """Versioned binary container with the model outputs and settings."""
    np.savez(path, version=CHECKPOINT_VERSION,
             n_topics=priors.n_topics, vocab_size=priors.vocab_size,
             phi=phi, theta=theta, alpha=priors.alpha,
             beta_matrix=priors.beta_matrix, seed=seed, n_sweeps=n_sweeps)


def load_checkpoint(path) -> dict:
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        return {key: data[key].item() if data[key].shape == () else data[key].copy()
                for key in data.files}
