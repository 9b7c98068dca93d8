"""Topic interpretation: ranked phrase labels, quality-scored
representative posts, and PMI-based topic coherence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import Post
from .preprocess import CorpusStats, Vocabulary


@dataclass
class QualityParams:
    eta: float = 0.1


def quality_score(votes: int, views: int, length_tokens: int, eta: float) -> float:
    """Post quality in [0, 1]: exp(-1/(ln(v+1) ln(r+1)) - eta/ln(h+1)).

    Votes are clamped at 0 (net-negative posts score like zero-vote
    posts); any zero log produces the limit value 0, except that the
    length term vanishes entirely when eta == 0.
    """
    v = max(int(votes), 0)
    r = max(int(views), 0)
    h = max(int(length_tokens), 0)
    lv = math.log(v + 1)
    lr = math.log(r + 1)
    lh = math.log(h + 1)
    if lv == 0.0 or lr == 0.0:
        return 0.0
    if eta > 0.0 and lh == 0.0:
        return 0.0
    length_term = 0.0 if eta == 0.0 else eta / lh
    return math.exp(-1.0 / (lv * lr) - length_term)


def rank_phrases(phi_row: np.ndarray, vocab: Vocabulary,
                 top_n: int) -> list[tuple[str, float]]:
    """Top phrase-type vocabulary entries by topic-word weight, descending;
    ties break toward the lower vocabulary id. Returns fewer than top_n
    entries when fewer phrase types exist."""
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    phrase_ids = [i for i in range(vocab.size) if vocab.is_phrase[i]]
    phrase_ids.sort(key=lambda i: (-float(phi_row[i]), i))
    return [(vocab.id_to_token[i], float(phi_row[i])) for i in phrase_ids[:top_n]]


def representative_posts(topic: int, theta: np.ndarray, quality: np.ndarray,
                         post_ids: list[str], top_m: int) -> list[tuple[str, float]]:
    """Posts ranked by topic relevance times quality score, descending;
    ties break toward the lower post id. Zero-score posts are never
    representative and are excluded."""
    scores = theta[:, topic] * quality
    order = sorted((d for d in range(len(post_ids)) if scores[d] > 0),
                   key=lambda d: (-float(scores[d]), post_ids[d]))
    return [(post_ids[d], float(scores[d])) for d in order[:top_m]]


def topic_coherence(top_token_ids: list[int], stats: CorpusStats) -> float:
    """Sum of smoothed PMI over all pairs of the topic's top words.

    Probabilities come from document-level co-occurrence over the whole
    corpus: pair counts get add-one smoothing, denominators are the
    document count, and a word absent from the stats is treated as if it
    occurred in one document.
    """
    if len(top_token_ids) < 2:
        raise ValueError("topic coherence needs at least 2 top words")
    n_docs = max(stats.n_docs, 1)
    total = 0.0
    for j in range(1, len(top_token_ids)):
        for i in range(j):
            a, b = top_token_ids[i], top_token_ids[j]
            df_a = max(stats.doc_count(a), 1)
            df_b = max(stats.doc_count(b), 1)
            co = stats.pair_doc_count(a, b)
            total += math.log((co + 1) * n_docs / (df_a * df_b))
    return total


def top_words(phi_row: np.ndarray, n: int) -> list[int]:
    """Top-n vocabulary ids by weight; ties break toward the lower id.
    Phrase tokens count as single tokens."""
    order = sorted(range(phi_row.shape[0]), key=lambda i: (-float(phi_row[i]), i))
    return order[:n]


@dataclass
class TopicLabelBundle:
    """Everything shown for one topic in one slice."""

    topic: int
    phrases: list[tuple[str, float]]
    posts: list[tuple[str, float]]
    coherence: float
    short_phrases: bool  # fewer phrase types than requested exist


def label_topics(phi: np.ndarray, theta: np.ndarray, post_ids: list[str],
                 posts_by_id: dict[str, Post], doc_lengths: dict[str, int],
                 vocab: Vocabulary, stats: CorpusStats, *,
                 top_n: int = 10, top_m: int = 3, coherence_n: int = 10,
                 eta: float = 0.1) -> list[TopicLabelBundle]:
    """Build the label bundle for every topic of one slice."""
    quality = np.array([
        quality_score(posts_by_id[pid].votes, posts_by_id[pid].views,
                      doc_lengths.get(pid, 0), eta)
        for pid in post_ids
    ]) if post_ids else np.zeros(0)

    bundles = []
    for k in range(phi.shape[0]):
        phrases = rank_phrases(phi[k], vocab, top_n)
        posts = (representative_posts(k, theta, quality, list(post_ids), top_m)
                 if len(post_ids) else [])
        n_words = min(coherence_n, vocab.size)
        coherence = (topic_coherence(top_words(phi[k], n_words), stats)
                     if n_words >= 2 else 0.0)
        bundles.append(TopicLabelBundle(
            topic=k, phrases=phrases, posts=posts, coherence=coherence,
            short_phrases=len(phrases) < top_n,
        ))
    return bundles


@dataclass
class CoherenceSummary:
    mean: float
    standard_error: float
    values: list[float]


def summarize_values(values: list[float]) -> CoherenceSummary:
    """Mean with standard error (sample std over sqrt n) of topic-level values."""
    if not values:
        return CoherenceSummary(mean=0.0, standard_error=0.0, values=[])
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return CoherenceSummary(mean=mean, standard_error=se, values=list(values))


def coherence_report(results, vocab: Vocabulary, stats: CorpusStats,
                     n: int) -> CoherenceSummary:
    """Mean coherence over all topics of all trained slices, with the
    standard error over the topic-level values. Carried (empty) slices
    are skipped since their phi is a copy of the predecessor."""
    values: list[float] = []
    n_words = min(n, vocab.size)
    for result in results:
        if getattr(result, "carried", False):
            continue
        for k in range(result.phi.shape[0]):
            values.append(topic_coherence(top_words(result.phi[k], n_words), stats))
    return summarize_values(values)
