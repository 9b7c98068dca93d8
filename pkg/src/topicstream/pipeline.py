"""End-to-end pipeline: ingest -> preprocess -> stream modeling ->
labeling -> exports, with every output under a run directory named by
config hash + timestamp. Saved state is sufficient to re-emit exports or
re-score coherence without retraining.
"""

from __future__ import annotations

import hashlib
import json
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import export as export_mod
from . import labeling
from .config import RunConfig, load_config
from .errors import ConfigError
from .ingest import Post, TimeSlice, load_posts, save_posts_jsonl, slice_by_period
from .preprocess import (CorpusStats, PreparedCorpus, ProcessedDoc, Vocabulary,
                         build_corpus_stats, load_stopwords, prepare_corpus)
from .tracker import SliceResult, run_stream

STATE_VERSION = 1


@contextmanager
def stage(name: str):
    """Tag escaping exceptions with the pipeline stage that raised them."""
    try:
        yield
    except Exception as exc:
        if not hasattr(exc, "stage"):
            exc.stage = name
        raise


@dataclass
class RunPaths:
    run_dir: Path

    @property
    def config(self) -> Path:
        return self.run_dir / "config.toml"

    @property
    def posts(self) -> Path:
        return self.run_dir / "posts_norm.jsonl"

    @property
    def vocab(self) -> Path:
        return self.run_dir / "vocab.tsv"

    @property
    def evolution_log(self) -> Path:
        return self.run_dir / "evolution_log.json"

    @property
    def label_report(self) -> Path:
        return self.run_dir / "label_report.json"

    @property
    def river_json(self) -> Path:
        return self.run_dir / "river.json"

    @property
    def river_html(self) -> Path:
        return self.run_dir / "river.html"

    @property
    def features(self) -> Path:
        return self.run_dir / "features.csv"

    @property
    def state(self) -> Path:
        return self.run_dir / "state.npz"

    @property
    def state_meta(self) -> Path:
        return self.run_dir / "state_meta.json"

    @property
    def coherence(self) -> Path:
        return self.run_dir / "coherence.json"


def make_run_dir(cfg: RunConfig, out_root: str | Path | None = None) -> RunPaths:
    root = Path(out_root if out_root is not None else cfg.outdir)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    base = f"run_{cfg.hash()[:12]}_{stamp}"
    run_dir = root / base
    counter = 1
    while run_dir.exists():
        run_dir = root / f"{base}_{counter}"
        counter += 1
    run_dir.mkdir(parents=True)
    return RunPaths(run_dir)


def _checksum(matrix: np.ndarray) -> str:
    data = np.ascontiguousarray(matrix, dtype=np.float64)
    return hashlib.sha256(data.tobytes()).hexdigest()


def write_evolution_log(results: list[SliceResult], prior_row_sum: float,
                        path: Path) -> None:
    records = []
    for r in results:
        records.append({
            "t": r.t,
            "period_label": r.period_label,
            "divergences": [float(v) for v in r.divergences],
            "anomaly_topics": sorted(r.anomaly_topics),
            "carried": r.carried,
            "prior_checksum": _checksum(r.prior_used),
            "phi_checksum": _checksum(r.phi),
            "prior_row_sum": prior_row_sum,
        })
    path.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def write_label_report(results: list[SliceResult], path: Path) -> None:
    records = []
    for r in results:
        topics = []
        for bundle in (r.labels or []):
            topics.append({
                "k": bundle.topic,
                "phrases": [{"token": tok, "weight": w} for tok, w in bundle.phrases],
                "posts": [{"id": pid, "score": s} for pid, s in bundle.posts],
                "coherence": bundle.coherence,
                "short_phrases": bundle.short_phrases,
            })
        records.append({"t": r.t, "period_label": r.period_label, "topics": topics})
    path.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def save_run_state(paths: RunPaths, cfg: RunConfig, results: list[SliceResult],
                   corpus: PreparedCorpus, posts: list[Post]) -> None:
    doc_order = [d.post_id for d in corpus.docs]
    docs_flat = np.concatenate([np.asarray(d.token_ids, dtype=np.int32)
                                for d in corpus.docs]) if corpus.docs else np.zeros(0, np.int32)
    docs_offsets = np.cumsum([0] + [d.length for d in corpus.docs], dtype=np.int64)
    theta_offsets = np.cumsum([0] + [r.theta.shape[0] for r in results], dtype=np.int64)
    theta_flat = (np.concatenate([r.theta for r in results])
                  if theta_offsets[-1] else np.zeros((0, cfg.k)))

    np.savez(paths.state,
             version=STATE_VERSION,
             phi=np.stack([r.phi for r in results]),
             prior=np.stack([r.prior_used for r in results]),
             divergences=np.stack([r.divergences for r in results]),
             thresholds=np.array([r.threshold for r in results]),
             theta_flat=theta_flat,
             theta_offsets=theta_offsets,
             docs_flat=docs_flat,
             docs_offsets=docs_offsets)
    meta = {
        "version": STATE_VERSION,
        "config_hash": cfg.hash(),
        "period_labels": [r.period_label for r in results],
        "slice_post_ids": [list(r.post_ids) for r in results],
        "carried": [r.carried for r in results],
        "anomalies": [sorted(r.anomaly_topics) for r in results],
        "doc_order": doc_order,
    }
    paths.state_meta.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                                encoding="utf-8")
    save_posts_jsonl(posts, paths.posts)
    corpus.vocab.dump_tsv(paths.vocab)


def execute_run(cfg: RunConfig, out_root: str | Path | None = None,
                echo=print) -> RunPaths:
    """Run the whole pipeline and write every output file."""
    with stage("config"):
        cfg.validate()
        if not cfg.input:
            raise ConfigError("config key 'input' is required for a run")

    with stage("ingest"):
        loaded = load_posts(cfg.input, cfg.input_format)
        if loaded.errors:
            echo(f"ingest: {len(loaded.errors)} malformed record(s) skipped")
        if not loaded.posts:
            raise ConfigError("no valid posts in the input file")
        timeline = slice_by_period(loaded.posts, cfg.granularity,
                                   cfg.date_start or None, cfg.date_end or None)
        if not timeline.slices:
            raise ConfigError("date range selects no slices")
        in_range = {pid for s in timeline.slices for pid in s.post_ids}
        posts = [p for p in loaded.posts if p.id in in_range]
        if timeline.excluded_count:
            echo(f"ingest: {timeline.excluded_count} post(s) outside the date range")

    with stage("preprocess"):
        stopword_path = cfg.stopwords or None
        corpus = prepare_corpus(
            posts,
            stopwords=load_stopwords(stopword_path),
            pmi_threshold=cfg.pmi_threshold,
            min_count=cfg.min_count,
            df_floor=cfg.df_floor,
        )
        echo(f"preprocess: vocabulary size {corpus.vocab.size}, "
             f"{len(corpus.phrase_table.phrases)} phrase(s), "
             f"{len(corpus.flagged_empty)} empty doc(s)")

    with stage("model"):
        posts_by_id = {p.id: p for p in posts}
        results = run_stream(timeline.slices, corpus.docs_by_id, cfg,
                             posts=posts_by_id, vocab=corpus.vocab,
                             stats=corpus.stats)

    with stage("export"):
        paths = make_run_dir(cfg, out_root)
        paths.config.write_text(cfg.to_text(), encoding="utf-8")
        write_evolution_log(results, cfg.base_beta * corpus.vocab.size,
                            paths.evolution_log)
        write_label_report(results, paths.label_report)
        export_mod.export_river(results, corpus.docs_by_id, posts_by_id,
                                corpus.vocab, cfg.eta,
                                paths.river_json, paths.river_html)
        export_mod.export_features(results, paths.features)
        save_run_state(paths, cfg, results, corpus, posts)

    for r in results:
        coh = (float(np.mean([b.coherence for b in r.labels]))
               if r.labels else float("nan"))
        flags = sorted(r.anomaly_topics)
        mark = " carried" if r.carried else ""
        echo(f"slice {r.t:02d} {r.period_label}: posts={len(r.post_ids)} "
             f"anomalies={flags} coherence={coh:.3f}{mark}")
    echo(f"run written to {paths.run_dir}")
    return paths


@dataclass
class RunData:
    cfg: RunConfig
    results: list[SliceResult]
    posts_by_id: dict[str, Post]
    docs_by_id: dict[str, ProcessedDoc]
    vocab: Vocabulary
    stats: CorpusStats


def load_run(run_dir: str | Path) -> RunData:
    """Rebuild enough pipeline state from a saved run directory to
    re-emit exports or re-score coherence."""
    paths = RunPaths(Path(run_dir))
    if not paths.state.exists():
        raise FileNotFoundError(f"no saved state under {run_dir}")
    cfg = load_config(paths.config)
    vocab = Vocabulary.load_tsv(paths.vocab)
    posts = load_posts(paths.posts, "jsonl").posts
    posts_by_id = {p.id: p for p in posts}

    meta = json.loads(paths.state_meta.read_text("utf-8"))
    if meta["version"] != STATE_VERSION:
        raise ConfigError(f"unsupported run state version {meta['version']}")
    with np.load(paths.state) as data:
        phi = data["phi"]
        prior = data["prior"]
        divergences = data["divergences"]
        thresholds = data["thresholds"]
        theta_flat = data["theta_flat"]
        theta_offsets = data["theta_offsets"]
        docs_flat = data["docs_flat"]
        docs_offsets = data["docs_offsets"]

    docs_by_id = {}
    for i, pid in enumerate(meta["doc_order"]):
        ids = docs_flat[docs_offsets[i]:docs_offsets[i + 1]]
        docs_by_id[pid] = ProcessedDoc(pid, [int(x) for x in ids])
    stats = build_corpus_stats([docs_by_id[pid] for pid in meta["doc_order"]],
                               vocab.size)

    results = []
    for t, label in enumerate(meta["period_labels"]):
        post_ids = tuple(meta["slice_post_ids"][t])
        theta = theta_flat[theta_offsets[t]:theta_offsets[t + 1]]
        doc_lengths = {pid: docs_by_id[pid].length for pid in post_ids}
        bundles = labeling.label_topics(
            phi[t], theta, list(post_ids), posts_by_id, doc_lengths, vocab,
            stats, top_n=cfg.top_n, top_m=cfg.top_m,
            coherence_n=cfg.coherence_n, eta=cfg.eta)
        results.append(SliceResult(
            t=t, period_label=label, post_ids=post_ids,
            phi=phi[t], theta=theta, prior_used=prior[t],
            divergences=divergences[t], threshold=float(thresholds[t]),
            anomaly_topics=frozenset(meta["anomalies"][t]),
            labels=bundles, carried=meta["carried"][t],
        ))
    return RunData(cfg=cfg, results=results, posts_by_id=posts_by_id,
                   docs_by_id=docs_by_id, vocab=vocab, stats=stats)
