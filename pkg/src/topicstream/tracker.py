"""Slice-by-slice orchestration of the online topic model.

Each slice trains a Gibbs LDA whose topic-word prior is an adaptively
weighted sum of the previous w slices' topic-word distributions: per
topic, a softmax similarity weight (dot product against the previous
slice's prior) times an exponential time-decay weight. Because each
slice's prior chains from its predecessors, topic index k refers to the
same evolving topic across slices, so per-topic divergences compare like
with like.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import anomaly, labeling, lda
from .config import RunConfig
from .errors import ConfigError
from .ingest import Post, TimeSlice
from .preprocess import CorpusStats, ProcessedDoc, Vocabulary

MODES = ("iedl", "idea_like", "olda")


@dataclass
class DecayParams:
    """Window size, decay coefficient, and prior-combination mode.

    Modes: "iedl" uses similarity times decay weights; "idea_like"
    drops the decay (weights by similarity only); "olda" uses only the
    immediately preceding slice with unit weight.
    """

    window_w: int = 3
    lam: float = 0.5
    mode: str = "iedl"

    def __post_init__(self):
        if self.window_w < 1:
            raise ConfigError(f"window_w must be >= 1, got {self.window_w}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")


def decay_weights(lam: float, w: int) -> np.ndarray:
    """Exponential decay weights exp(-lam * i) for i = 1..w."""
    if w < 1:
        raise ConfigError(f"window size must be >= 1, got {w}")
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    return np.exp(-lam * np.arange(1, w + 1, dtype=np.float64))


@dataclass
class WindowBuffer:
    """The last w topic-word matrices (most recent first) plus the prior
    used for the most recent trained slice."""

    phis: list[np.ndarray] = field(default_factory=list)
    prev_prior: np.ndarray | None = None

    def push(self, phi: np.ndarray, window_w: int) -> None:
        self.phis.insert(0, phi)
        del self.phis[window_w:]

    def __len__(self) -> int:
        return len(self.phis)


def similarity_weights(window: WindowBuffer, topic: int,
                       literal_form: bool = False) -> np.ndarray:
    """Softmax similarity of each windowed slice's topic row against the
    previous slice's prior row.

    literal_form reproduces the non-softmax variant (exponential
    numerator over a plain sum denominator) for comparison; only the
    standard form returns a simplex vector.
    """
    if not window.phis:
        raise ConfigError("similarity weights need a non-empty window")
    if window.prev_prior is None:
        raise ConfigError("similarity weights need the previous slice's prior")
    scores = np.array([float(phi[topic] @ window.prev_prior[topic])
                       for phi in window.phis])
    if literal_form:
        denom = scores.sum()
        if denom == 0:
            raise ConfigError("literal similarity form is undefined for all-zero scores")
        return np.exp(scores) / denom
    shifted = scores - scores.max()
    exps = np.exp(shifted)
    return exps / exps.sum()


def combine_prior(window: WindowBuffer, params: DecayParams, base_beta: float,
                  epsilon_floor: float, literal_softmax: bool = False) -> np.ndarray:
    """Build the next slice's topic-word prior from the window.

    Per topic, the weighted sum of past topic rows is rescaled so every
    row sums to base_beta * V while staying >= epsilon_floor elementwise
    (the floor is folded into the rescale so both properties hold
    exactly). Prior strength is therefore controlled by base_beta alone,
    independent of the mixing weights.
    """
    if not window.phis:
        raise ConfigError("combine_prior needs a non-empty window; "
                          "use the cold-start prior for the first slice")
    n_topics, vocab_size = window.phis[0].shape
    target = base_beta * vocab_size
    if epsilon_floor * vocab_size >= target:
        raise ConfigError("epsilon_floor too large for base_beta * V")

    if params.mode == "olda":
        raw = np.array(window.phis[0], dtype=np.float64, copy=True)
    else:
        stack = np.stack(window.phis)  # (n, K, V), most recent first
        n = stack.shape[0]
        lam = 0.0 if params.mode == "idea_like" else params.lam
        mu = decay_weights(lam, n)
        gamma = np.empty((n, n_topics))
        for k in range(n_topics):
            gamma[:, k] = similarity_weights(window, k, literal_form=literal_softmax)
        weights = mu[:, None] * gamma  # (n, K)
        raw = np.einsum("nk,nkv->kv", weights, stack)

    row_sums = raw.sum(axis=1, keepdims=True)
    normalized = raw / row_sums
    return epsilon_floor + (target - vocab_size * epsilon_floor) * normalized


@dataclass
class SliceResult:
    """Everything produced for one time slice."""

    t: int
    period_label: str
    post_ids: tuple[str, ...]
    phi: np.ndarray
    theta: np.ndarray  # (len(post_ids), K), rows aligned with post_ids
    prior_used: np.ndarray
    divergences: np.ndarray
    threshold: float
    anomaly_topics: frozenset[int]
    labels: list[labeling.TopicLabelBundle] | None
    carried: bool


def _slice_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


def run_stream(slices: list[TimeSlice], docs: dict[str, ProcessedDoc],
               config: RunConfig,
               posts: dict[str, Post] | None = None,
               vocab: Vocabulary | None = None,
               stats: CorpusStats | None = None) -> list[SliceResult]:
    """Train every slice in order, chaining priors through the window.

    Slice 0 trains with the symmetric cold-start prior; later slices use
    combine_prior over up to min(t, w) past topic-word matrices. Empty
    slices carry the previous phi forward unchanged, flagged, with no
    anomaly evaluation. Labels are attached when vocab/posts/stats are
    provided.
    """
    if not slices:
        return []
    vocab_size = vocab.size if vocab is not None else _infer_vocab_size(docs)
    if vocab_size == 0:
        raise ConfigError("cannot run a stream over an empty vocabulary")
    n_topics = config.k
    alpha = config.effective_alpha
    params = DecayParams(window_w=config.window_w, lam=config.lambda_,
                         mode=config.mode)
    label_kwargs = dict(top_n=config.top_n, top_m=config.top_m,
                        coherence_n=config.coherence_n, eta=config.eta)

    window = WindowBuffer()
    results: list[SliceResult] = []
    prev_phi: np.ndarray | None = None

    for t, timeslice in enumerate(slices):
        if window.phis:
            prior = combine_prior(window, params, config.base_beta,
                                  config.epsilon_floor,
                                  literal_softmax=config.softmax_compat)
        else:
            prior = np.full((n_topics, vocab_size), config.base_beta)

        slice_docs = [docs[pid] for pid in timeslice.post_ids]
        if not slice_docs or sum(d.length for d in slice_docs) == 0:
            phi = (prev_phi.copy() if prev_phi is not None
                   else np.full((n_topics, vocab_size), 1.0 / vocab_size))
            theta = np.zeros((len(slice_docs), n_topics))
            divergences = np.zeros(n_topics)
            threshold = np.inf
            anomalies: frozenset[int] = frozenset()
            carried = True
        else:
            priors = lda.PriorSpec(alpha, prior)
            phi, theta = lda.train(slice_docs, priors, config.n_sweeps,
                                   config.burn_in, _slice_seed(config.seed, t),
                                   sample_lag=config.sample_lag)
            if prev_phi is None:
                divergences = np.zeros(n_topics)
                threshold = np.inf
                anomalies = frozenset()
            else:
                report = anomaly.detect(phi, prev_phi,
                                        method=config.outlier_method,
                                        slice_index=t)
                divergences = report.js
                threshold = report.threshold
                anomalies = report.anomalies
            carried = False

        labels = None
        if vocab is not None and posts is not None and stats is not None:
            doc_lengths = {pid: docs[pid].length for pid in timeslice.post_ids}
            labels = labeling.label_topics(phi, theta, list(timeslice.post_ids),
                                           posts, doc_lengths, vocab, stats,
                                           **label_kwargs)

        results.append(SliceResult(
            t=t, period_label=timeslice.period_label,
            post_ids=tuple(timeslice.post_ids),
            phi=phi, theta=theta, prior_used=prior,
            divergences=divergences, threshold=float(threshold),
            anomaly_topics=anomalies, labels=labels, carried=carried,
        ))
        window.push(phi, params.window_w)
        window.prev_prior = prior
        prev_phi = phi

    return results


def _infer_vocab_size(docs: dict[str, ProcessedDoc]) -> int:
    top = -1
    for doc in docs.values():
        if doc.token_ids:
            top = max(top, max(doc.token_ids))
    return top + 1
