"""Text normalization, PMI phrase mining, filtering, and vocabulary indexing.

The corpus-wide pipeline is: normalize -> tokenize -> lemmatize ->
phrase extraction/substitution -> stopword and frequency filtering ->
dense-id indexing. The phrase pass runs once over the whole corpus so
the vocabulary (and hence topic-word distributions) is shared by every
time slice.
"""

from __future__ import annotations

import html
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .ingest import Post

_CODE_RE = re.compile(r"<(code|pre)[^>]*>.*?</\1>|```.*?```", re.DOTALL | re.IGNORECASE)
_TAG_RE = re.compile(r"<[^>]+>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_NUM_RE = re.compile(r"\b\d+(?:\.\d+)?\b")
_WS_RE = re.compile(r"\s+")
_TOKEN_RE = re.compile(r"<(?:url|code|num)>|[a-z0-9]+(?:['\-][a-z0-9]+)*")

_DOUBLED = ("bb", "dd", "gg", "mm", "nn", "pp", "rr", "tt")
_VOWELS = set("aeiouy")


def normalize(text: str) -> str:
    """Lowercase, strip markup, and replace code/URLs/numbers with
    <code>, <url>, <num> placeholder tokens."""
    if not text:
        return ""
    t = html.unescape(text)
    # sentinels survive the tag stripper; swapped for placeholders at the end
    t = _CODE_RE.sub(" \x00code\x00 ", t)
    t = _TAG_RE.sub(" ", t)
    t = _URL_RE.sub(" \x00url\x00 ", t)
    t = t.lower()
    t = _NUM_RE.sub("<num>", t)
    t = t.replace("\x00code\x00", "<code>").replace("\x00url\x00", "<url>")
    return _WS_RE.sub(" ", t).strip()


def tokenize(text: str) -> list[str]:
    """Split normalized text into word, placeholder, and hyphenated tokens.
    Underscores never appear in raw tokens; only the phrase pass joins
    tokens with "_"."""
    return _TOKEN_RE.findall(text)


def _load_irregular_table() -> dict[str, str]:
    table = {}
    text = resources.files("topicstream.data").joinpath("irregular_forms.tsv").read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        form, lemma = line.split("\t")
        table[form] = lemma
    return table


class Lemmatizer:
    """Rule-based suffix stripper with an irregular-form exception table.

    Deterministic and dependency-free; rules cover plural -s/-es/-ies,
    -ing, and -ed with consonant-doubling handling. Any callable
    str -> str can be used in its place throughout the pipeline.
    """

    def __init__(self, extra_irregulars: dict[str, str] | None = None):
        self.table = _load_irregular_table()
        if extra_irregulars:
            self.table.update(extra_irregulars)

    def __call__(self, token: str) -> str:
        if token.endswith("'s"):
            token = token[:-2]
        elif token.endswith("'"):
            token = token[:-1]
        if not token:
            return token
        hit = self.table.get(token)
        if hit is not None:
            return hit
        if token.endswith("ies") and len(token) > 4:
            return token[:-3] + "y"
        if token.endswith("es") and len(token) > 3:
            stem = token[:-2]
            if stem.endswith(("s", "x", "z", "ch", "sh")):
                return stem
        if token.endswith("s") and len(token) > 3 and not token.endswith(("ss", "us", "is")):
            return token[:-1]
        if token.endswith("ing") and len(token) >= 6:
            stem = token[:-3]
            if not any(c in _VOWELS for c in stem):
                return token
            if stem[-2:] in _DOUBLED:
                return stem[:-1]
            return stem
        if token.endswith("ed") and len(token) >= 5 and not token.endswith("eed"):
            stem = token[:-2]
            if not any(c in _VOWELS for c in stem):
                return token
            if stem[-2:] in _DOUBLED:
                return stem[:-1]
            if stem.endswith("i"):
                return stem[:-1] + "y"
            return stem
        return token


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword file (one token per line, "#" comments); None loads
    the bundled default English list."""
    if path is None:
        text = resources.files("topicstream.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def pmi(count_ij: int, count_i: int, count_j: int, total: int) -> float:
    """Pointwise mutual information ln(p_ij / (p_i * p_j)) with all
    probabilities estimated against the same total."""
    if min(count_ij, count_i, count_j, total) <= 0:
        raise ValueError("pmi requires strictly positive counts")
    p_ij = count_ij / total
    p_i = count_i / total
    p_j = count_j / total
    return math.log(p_ij / (p_i * p_j))


def pmi_from_probs(p_ij: float, p_i: float, p_j: float) -> float:
    if min(p_ij, p_i, p_j) <= 0.0:
        raise ValueError("pmi requires strictly positive probabilities")
    return math.log(p_ij / (p_i * p_j))


@dataclass
class PhraseTable:
    """Retained adjacent bigrams with their counts and PMI scores.

    Unigram probabilities are estimated against the total token count and
    pair probabilities against the total adjacent-pair count.
    """

    phrases: dict[tuple[str, str], tuple[int, float]]
    unigram_counts: dict[str, int]
    total_tokens: int
    total_pairs: int

    @staticmethod
    def join(pair: tuple[str, str]) -> str:
        return pair[0] + "_" + pair[1]

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self.phrases


def extract_phrases(docs: list[list[str]], pmi_threshold: float = 1.0,
                    min_count: int = 5) -> PhraseTable:
    """Mine adjacent bigrams with count >= min_count and PMI > threshold
    from tokenized documents."""
    unigrams: Counter[str] = Counter()
    pairs: Counter[tuple[str, str]] = Counter()
    total_pairs = 0
    for tokens in docs:
        unigrams.update(tokens)
        for a, b in zip(tokens, tokens[1:]):
            pairs[(a, b)] += 1
        total_pairs += max(len(tokens) - 1, 0)
    total_tokens = sum(unigrams.values())

    retained: dict[tuple[str, str], tuple[int, float]] = {}
    if total_pairs > 0 and total_tokens > 0:
        for (a, b), c_ab in pairs.items():
            if c_ab < min_count:
                continue
            score = pmi_from_probs(c_ab / total_pairs,
                                   unigrams[a] / total_tokens,
                                   unigrams[b] / total_tokens)
            if score > pmi_threshold:
                retained[(a, b)] = (c_ab, score)
    return PhraseTable(retained, dict(unigrams), total_tokens, total_pairs)


def apply_phrases(tokens: list[str], table: PhraseTable) -> list[str]:
    """Greedy left-to-right substitution: each retained bigram becomes one
    "w1_w2" token consuming both constituents."""
    out = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 1 < n and (tokens[i], tokens[i + 1]) in table.phrases:
            out.append(tokens[i] + "_" + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


@dataclass
class Vocabulary:
    """Dense token <-> id bijection; ids are assigned by first occurrence."""

    id_to_token: list[str]
    token_to_id: dict[str, int]
    is_phrase: list[bool]
    doc_freq: list[int]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def dump_tsv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("id\ttoken\tis_phrase\tdocument_frequency\n")
            for i, tok in enumerate(self.id_to_token):
                fh.write(f"{i}\t{tok}\t{int(self.is_phrase[i])}\t{self.doc_freq[i]}\n")

    @classmethod
    def load_tsv(cls, path: str | Path) -> "Vocabulary":
        id_to_token, is_phrase, doc_freq = [], [], []
        with Path(path).open(encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                _, tok, phr, df = line.rstrip("\n").split("\t")
                id_to_token.append(tok)
                is_phrase.append(bool(int(phr)))
                doc_freq.append(int(df))
        token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
        return cls(id_to_token, token_to_id, is_phrase, doc_freq)


@dataclass
class ProcessedDoc:
    """A document reduced to vocabulary ids, ready for the topic model."""

    post_id: str
    token_ids: list[int]

    @property
    def length(self) -> int:
        return len(self.token_ids)


def _phrase_is_stopword(token: str, stopwords: frozenset[str]) -> bool:
    # A fused bigram is dropped when either constituent is a stopword.
    a, b = token.split("_", 1)
    return a in stopwords or b in stopwords


def filter_and_index(docs: list[tuple[str, list[str]]],
                     stopwords: frozenset[str],
                     min_token_len: int = 2,
                     df_floor: int = 2) -> tuple[Vocabulary, list[ProcessedDoc]]:
    """Drop stopwords, short tokens, and low-document-frequency tokens,
    then assign dense vocabulary ids by first occurrence.

    Documents that end up empty are retained with length 0 so document
    order and count are preserved.
    """
    kept_docs: list[tuple[str, list[str]]] = []
    df: Counter[str] = Counter()
    for post_id, tokens in docs:
        kept = []
        for tok in tokens:
            if len(tok) < min_token_len:
                continue
            if "_" in tok:
                if _phrase_is_stopword(tok, stopwords):
                    continue
            elif tok in stopwords:
                continue
            kept.append(tok)
        kept_docs.append((post_id, kept))
        df.update(set(kept))

    token_to_id: dict[str, int] = {}
    id_to_token: list[str] = []
    processed: list[ProcessedDoc] = []
    for post_id, tokens in kept_docs:
        ids = []
        for tok in tokens:
            if df[tok] < df_floor:
                continue
            tid = token_to_id.get(tok)
            if tid is None:
                tid = len(id_to_token)
                token_to_id[tok] = tid
                id_to_token.append(tok)
            ids.append(tid)
        processed.append(ProcessedDoc(post_id, ids))

    if not id_to_token:
        raise ConfigError("vocabulary is empty after filtering; "
                          "relax df_floor/stopwords or check the input")
    vocab = Vocabulary(
        id_to_token=id_to_token,
        token_to_id=token_to_id,
        is_phrase=["_" in tok for tok in id_to_token],
        doc_freq=[df[tok] for tok in id_to_token],
    )
    return vocab, processed


@dataclass
class CorpusStats:
    """Document-level occurrence and co-occurrence counts over the whole
    corpus, used for topic coherence."""

    n_docs: int
    token_docs: list[frozenset[int]]

    def doc_count(self, token_id: int) -> int:
        if 0 <= token_id < len(self.token_docs):
            return len(self.token_docs[token_id])
        return 0

    def pair_doc_count(self, a: int, b: int) -> int:
        if not (0 <= a < len(self.token_docs) and 0 <= b < len(self.token_docs)):
            return 0
        return len(self.token_docs[a] & self.token_docs[b])


def build_corpus_stats(docs: list[ProcessedDoc], vocab_size: int) -> CorpusStats:
    sets: list[set[int]] = [set() for _ in range(vocab_size)]
    for d, doc in enumerate(docs):
        for tid in set(doc.token_ids):
            sets[tid].add(d)
    return CorpusStats(n_docs=len(docs), token_docs=[frozenset(s) for s in sets])


@dataclass
class PreparedCorpus:
    vocab: Vocabulary
    docs: list[ProcessedDoc]
    docs_by_id: dict[str, ProcessedDoc]
    phrase_table: PhraseTable
    stats: CorpusStats
    flagged_empty: list[str] = field(default_factory=list)


def prepare_corpus(posts: list[Post],
                   stopwords: frozenset[str] | None = None,
                   lemmatizer=None,
                   pmi_threshold: float = 1.0,
                   min_count: int = 5,
                   df_floor: int = 2) -> PreparedCorpus:
    """Run the full preprocessing pipeline over all posts (all slices at
    once, so ids and phi dimensions align across slices)."""
    if stopwords is None:
        stopwords = load_stopwords()
    if lemmatizer is None:
        lemmatizer = Lemmatizer()

    tokenized = []
    for post in posts:
        tokens = [lemmatizer(tok) for tok in tokenize(normalize(post.text))]
        tokenized.append((post.id, tokens))

    table = extract_phrases([toks for _, toks in tokenized],
                            pmi_threshold=pmi_threshold, min_count=min_count)
    substituted = [(pid, apply_phrases(toks, table)) for pid, toks in tokenized]
    vocab, docs = filter_and_index(substituted, stopwords, df_floor=df_floor)
    stats = build_corpus_stats(docs, vocab.size)
    return PreparedCorpus(
        vocab=vocab,
        docs=docs,
        docs_by_id={d.post_id: d for d in docs},
        phrase_table=table,
        stats=stats,
        flagged_empty=[d.post_id for d in docs if d.length == 0],
    )
