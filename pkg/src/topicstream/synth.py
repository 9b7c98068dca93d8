"""Synthetic corpus generator for end-to-end verification.

Draws a slice-varying LDA corpus whose true topics own disjoint word
blocks, optionally drifting the within-block proportions each slice, and
injects one topic replacement (the shifted topic moves to a reserved
word block) at a chosen slice. The ground truth goes to a sidecar file so
downstream checks can match model topics to true topics.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import Post, save_posts_jsonl


@dataclass
class SynthParams:
    k_true: int = 10
    block_size: int = 60
    block_growth: float = 3.0
    n_slices: int = 6
    docs_per_slice: int = 250
    sparse_docs: int = 0  # >0: odd slices get only this many docs
    noise_docs: int = 0   # >0: odd slices also get this many off-topic docs
    doc_length: int = 50
    shift_slice: int = 3
    shift_topic: int = -1  # -1 draws one from the seeded generator
    shift_magnitude: float = 1.0
    drift: float = 0.0
    doc_topic_alpha: float = 1.0
    popularity_skew: float = 4.5
    block_mass: float = 0.95
    block_zipf: float = 0.0  # >0: Zipf-lumpy word frequencies inside blocks
    seed: int = 0
    start_period: str = "2017-01"

    def validate(self) -> "SynthParams":
        if self.k_true < 2:
            raise ConfigError(f"k_true must be >= 2, got {self.k_true}")
        if self.block_size < 2:
            raise ConfigError(f"block_size must be >= 2, got {self.block_size}")
        if self.n_slices < 1:
            raise ConfigError(f"n_slices must be >= 1, got {self.n_slices}")
        if self.docs_per_slice < 1:
            raise ConfigError("docs_per_slice must be >= 1")
        if self.sparse_docs < 0:
            raise ConfigError("sparse_docs must be >= 0")
        if self.noise_docs < 0:
            raise ConfigError("noise_docs must be >= 0")
        if self.doc_length < 1:
            raise ConfigError("doc_length must be >= 1")
        if not 0 <= self.shift_magnitude <= 1:
            raise ConfigError("shift_magnitude must be in [0, 1]")
        if self.shift_magnitude > 0 and not 0 <= self.shift_slice < self.n_slices:
            raise ConfigError(f"shift_slice must be in [0, {self.n_slices - 1}]")
        if self.shift_topic >= self.k_true:
            raise ConfigError("shift_topic must be < k_true")
        if not 0 <= self.drift <= 1:
            raise ConfigError("drift must be in [0, 1]")
        if not 0 < self.block_mass <= 1:
            raise ConfigError("block_mass must be in (0, 1]")
        if self.popularity_skew < 1:
            raise ConfigError("popularity_skew must be >= 1")
        if self.block_growth < 1:
            raise ConfigError("block_growth must be >= 1")
        if self.block_zipf < 0:
            raise ConfigError("block_zipf must be >= 0")
        return self

    @property
    def popularity(self) -> "np.ndarray":
        """Fixed per-topic popularity profile, most popular first.
        Real streams have unequal topic sizes (harmonic profile here)."""
        weights = 1.0 / np.linspace(1.0, self.popularity_skew, self.k_true)
        return weights / weights.sum()

    @property
    def block_sizes(self) -> "np.ndarray":
        """Per-topic word-block widths, growing with popularity rank:
        popular topics get narrow blocks, thin topics wide ones. Topics
        then differ in both size and vocabulary breadth, which spreads
        per-topic divergence scales apart instead of stacking them."""
        sizes = np.round(self.block_size
                         * np.linspace(1.0, self.block_growth, self.k_true))
        return sizes.astype(int)

    @property
    def reserve_size(self) -> int:
        # the held-out block the shifted topic moves onto
        return int(self.block_sizes.mean())

    @property
    def vocab_size(self) -> int:
        return int(self.block_sizes.sum() + self.reserve_size)


def _vocab_words(v: int) -> list[str]:
    # forms chosen to pass preprocessing untouched (no plural/verb suffixes)
    return [f"w{i:03d}q" for i in range(v)]


def _block_bounds(params: SynthParams) -> list[tuple[int, int]]:
    """Word-id ranges: one block per topic, then the reserve block."""
    bounds = []
    start = 0
    for b in params.block_sizes:
        bounds.append((start, start + int(b)))
        start += int(b)
    bounds.append((start, start + params.reserve_size))
    return bounds


def _block_dist(params: SynthParams, bounds: tuple[int, int],
                proportions: np.ndarray | None = None) -> np.ndarray:
    """Topic over the vocabulary: block_mass on one word block, the rest
    spread over all other words. Default within-block frequencies are
    uniform, or Zipf-shaped when block_zipf > 0."""
    v = params.vocab_size
    lo, hi = bounds
    b = hi - lo
    dist = np.full(v, (1.0 - params.block_mass) / (v - b))
    if proportions is None:
        if params.block_zipf > 0:
            proportions = 1.0 / np.arange(1, b + 1, dtype=float) ** params.block_zipf
            proportions /= proportions.sum()
        else:
            proportions = np.full(b, 1.0 / b)
    dist[lo:hi] = params.block_mass * proportions
    return dist / dist.sum()


def true_topic_matrices(params: SynthParams,
                        rng: np.random.Generator) -> tuple[list[np.ndarray], int]:
    """Per-slice true topic-word matrices plus the resolved shift topic."""
    shift_topic = params.shift_topic
    if shift_topic < 0:
        shift_topic = int(rng.integers(0, params.k_true))

    bounds = _block_bounds(params)
    current = np.stack([_block_dist(params, bounds[k])
                        for k in range(params.k_true)])
    matrices = []
    for t in range(params.n_slices):
        if t > 0 and params.drift > 0:
            for k in range(params.k_true):
                home = _topic_block(params, k, t, shift_topic)
                lo, hi = bounds[home]
                fresh = _block_dist(params, bounds[home],
                                    rng.dirichlet(np.ones(hi - lo)))
                current[k] = (1 - params.drift) * current[k] + params.drift * fresh
                current[k] /= current[k].sum()
        if params.shift_magnitude > 0 and t == params.shift_slice:
            replacement = _block_dist(params, bounds[params.k_true])
            current[shift_topic] = ((1 - params.shift_magnitude) * current[shift_topic]
                                    + params.shift_magnitude * replacement)
            current[shift_topic] /= current[shift_topic].sum()
        matrices.append(current.copy())
    return matrices, shift_topic


def _topic_block(params: SynthParams, k: int, t: int, shift_topic: int) -> int:
    if (params.shift_magnitude > 0 and k == shift_topic
            and t >= params.shift_slice):
        return params.k_true  # drift continues inside the reserve block
    return k


def generate(params: SynthParams) -> tuple[list[Post], dict]:
    """Draw the corpus; returns the posts and the ground-truth record."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    matrices, shift_topic = true_topic_matrices(params, rng)
    words = _vocab_words(params.vocab_size)

    year, month = (int(x) for x in params.start_period.split("-"))
    doc_alpha = params.doc_topic_alpha * params.k_true * params.popularity
    posts: list[Post] = []
    for t in range(params.n_slices):
        m_index = (year * 12 + month - 1) + t
        slice_year, slice_month = divmod(m_index, 12)
        n_docs = params.docs_per_slice
        if params.sparse_docs and t % 2 == 1:
            n_docs = params.sparse_docs
        n_noise = params.noise_docs if t % 2 == 1 else 0
        for d in range(n_docs + n_noise):
            if d < n_docs:
                theta = rng.dirichlet(doc_alpha)
                topic_counts = rng.multinomial(params.doc_length, theta)
                token_ids: list[int] = []
                for k, count in enumerate(topic_counts):
                    if count:
                        token_ids.extend(rng.choice(params.vocab_size, size=count,
                                                    p=matrices[t][k]))
            else:
                # off-topic burst: words uniform over the whole vocabulary
                token_ids = rng.integers(0, params.vocab_size,
                                         size=params.doc_length).tolist()
            order = rng.permutation(len(token_ids))
            body = " ".join(words[token_ids[i]] for i in order)
            posts.append(Post(
                id=f"s{t:02d}d{d:04d}",
                created_at=datetime(slice_year, slice_month + 1, 1 + d % 28,
                                    d % 24, tzinfo=timezone.utc),
                title="",
                body=body,
                votes=int(rng.poisson(5)),
                views=int(rng.poisson(200)),
            ))

    truth = {
        "version": 1,
        "params": asdict(params),
        "shift_topic": shift_topic,
        "no_shift": params.shift_magnitude == 0,
        "vocab": words,
        "period_labels": [_period(year, month, t) for t in range(params.n_slices)],
        "true_phi": [m.tolist() for m in matrices],
    }
    return posts, truth


def _period(year: int, month: int, offset: int) -> str:
    idx = year * 12 + (month - 1) + offset
    return f"{idx // 12:04d}-{idx % 12 + 1:02d}"


def write_corpus(params: SynthParams, corpus_path: str | Path,
                 sidecar_path: str | Path | None = None) -> Path:
    """Write the synthetic JSONL corpus plus its ground-truth sidecar."""
    posts, truth = generate(params)
    corpus_path = Path(corpus_path)
    save_posts_jsonl(posts, corpus_path)
    if sidecar_path is None:
        sidecar_path = corpus_path.with_suffix(corpus_path.suffix + ".truth.json")
    Path(sidecar_path).write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return Path(sidecar_path)
