"""Stream-graph and feature exports.

The river JSON carries one series per topic (branch widths per slice plus
emerging flags copied verbatim from the anomaly results); the HTML page
embeds that data as an inline SVG stream chart with no external
resources. The feature CSV holds each post's topic mixture for use by
external classifiers.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import Post
from .labeling import quality_score
from .preprocess import ProcessedDoc, Vocabulary
from .tracker import SliceResult


def branch_width(labels: list[tuple[str, int, float]]) -> float:
    """Branch width for one topic in one slice: sum over phrase labels of
    ln(count) times the quality score of the label's best post. Counts
    must be >= 1; the sum is floored at 0."""
    total = 0.0
    for _, count, quality in labels:
        if count < 1:
            raise ValueError("branch_width requires counts >= 1")
        total += math.log(count) * quality
    return max(total, 0.0)


def compute_river(results: list[SliceResult], docs: dict[str, ProcessedDoc],
                  posts: dict[str, Post], vocab: Vocabulary,
                  eta: float) -> dict:
    """Build the river JSON object from slice results."""
    if not results:
        raise ConfigError("river export needs at least one slice result")
    n_topics = results[0].phi.shape[0]

    series = [{"k": k, "label": f"topic-{k}", "widths": [], "emerging": []}
              for k in range(n_topics)]

    for result in results:
        if result.labels is None:
            raise ConfigError("river export needs labeled slice results")
        token_counts: Counter[int] = Counter()
        docs_with: dict[int, list[int]] = {}
        for d, pid in enumerate(result.post_ids):
            ids = docs[pid].token_ids
            token_counts.update(ids)
            for tid in set(ids):
                docs_with.setdefault(tid, []).append(d)
        quality = [
            quality_score(posts[pid].votes, posts[pid].views,
                          docs[pid].length, eta)
            for pid in result.post_ids
        ]

        for k in range(n_topics):
            entries = []
            for token, _ in result.labels[k].phrases:
                tid = vocab.token_to_id.get(token)
                if tid is None:
                    continue
                count = token_counts.get(tid, 0)
                if count < 1:
                    continue
                holders = docs_with[tid]
                best = min(holders, key=lambda d: (-result.theta[d, k] * quality[d],
                                                   result.post_ids[d]))
                entries.append((token, count, quality[best]))
            series[k]["widths"].append(branch_width(entries))
            series[k]["emerging"].append(k in result.anomaly_topics)

    for k in range(n_topics):
        label = f"topic-{k}"
        for result in reversed(results):
            if result.labels and result.labels[k].phrases:
                label = result.labels[k].phrases[0][0]
                break
        series[k]["label"] = label

    return {"slices": [r.period_label for r in results], "topics": series}


def export_river(results: list[SliceResult], docs: dict[str, ProcessedDoc],
                 posts: dict[str, Post], vocab: Vocabulary, eta: float,
                 json_path: str | Path, html_path: str | Path | None = None) -> dict:
    """Write the river JSON and (optionally) the static HTML page;
    byte-deterministic for fixed inputs."""
    river = compute_river(results, docs, posts, vocab, eta)
    Path(json_path).write_text(
        json.dumps(river, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if html_path is not None:
        Path(html_path).write_text(render_river_html(river), encoding="utf-8")
    return river


def export_features(results: list[SliceResult], path: str | Path) -> None:
    """CSV of per-post topic mixtures: post_id, slice, theta_0..theta_{K-1}."""
    if not results:
        raise ConfigError("feature export needs at least one slice result")
    n_topics = results[0].phi.shape[0]
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["post_id", "slice"] + [f"theta_{k}" for k in range(n_topics)])
        for result in results:
            for d, pid in enumerate(result.post_ids):
                writer.writerow([pid, result.t] + [float(v) for v in result.theta[d]])


def _color(k: int, n: int) -> str:
    hue = (k * 360) // max(n, 1)
    return f"hsl({hue}, 62%, 52%)"


def render_river_html(river: dict) -> str:
    """Self-contained stream-graph page: inline SVG stacked around a
    symmetric center baseline, emerging topics marked per slice."""
    slices = river["slices"]
    topics = river["topics"]
    n_slices = max(len(slices), 1)
    n_topics = len(topics)

    width, height = 960, 480
    ml, mr, mt, mb = 60, 180, 30, 50
    plot_w = width - ml - mr
    plot_h = height - mt - mb

    totals = [sum(t["widths"][i] for t in topics) if topics else 0.0
              for i in range(n_slices)]
    max_total = max(totals) if totals else 0.0
    scale = plot_h / max_total if max_total > 0 else 1.0

    def x_at(i: int) -> float:
        if n_slices == 1:
            return ml + plot_w / 2
        return ml + plot_w * i / (n_slices - 1)

    def y_at(v: float) -> float:
        return mt + plot_h / 2 - v * scale

    base = [-totals[i] / 2 for i in range(n_slices)]
    cumulative = [list(base) for _ in range(n_topics + 1)]
    for k, topic in enumerate(topics):
        for i in range(n_slices):
            cumulative[k + 1][i] = cumulative[k][i] + topic["widths"][i]

    parts = []
    parts.append("<!DOCTYPE html>")
    parts.append("<html><head><meta charset=\"utf-8\"><title>Topic stream</title>")
    parts.append("<style>")
    parts.append("body{font-family:sans-serif;margin:20px;}")
    parts.append("path.branch{stroke:#fff;stroke-width:0.5;opacity:0.85;}")
    parts.append("path.branch:hover{opacity:1;}")
    parts.append("circle.emerging{fill:#ffd500;stroke:#b80;stroke-width:1.5;}")
    parts.append("text{font-size:11px;fill:#333;}")
    parts.append(".legend text{font-size:12px;}")
    parts.append("</style></head><body>")
    parts.append("<h2>Topic stream</h2>")
    parts.append(f"<svg width=\"{width}\" height=\"{height}\" "
                 f"viewBox=\"0 0 {width} {height}\">")

    for k, topic in enumerate(topics):
        top_pts = [f"{x_at(i):.2f},{y_at(cumulative[k + 1][i]):.2f}"
                   for i in range(n_slices)]
        bot_pts = [f"{x_at(i):.2f},{y_at(cumulative[k][i]):.2f}"
                   for i in reversed(range(n_slices))]
        path = "M" + " L".join(top_pts + bot_pts) + " Z"
        label = _escape(topic["label"])
        parts.append(f"<path class=\"branch\" d=\"{path}\" fill=\"{_color(k, n_topics)}\">"
                     f"<title>{label}</title></path>")

    for k, topic in enumerate(topics):
        for i in range(n_slices):
            if topic["emerging"][i]:
                mid = 0.5 * (cumulative[k][i] + cumulative[k + 1][i])
                label = _escape(f"emerging: {topic['label']} @ {slices[i]}")
                parts.append(f"<circle class=\"emerging\" cx=\"{x_at(i):.2f}\" "
                             f"cy=\"{y_at(mid):.2f}\" r=\"5\"><title>{label}</title></circle>")

    for i, name in enumerate(slices):
        parts.append(f"<text x=\"{x_at(i):.2f}\" y=\"{height - mb + 18}\" "
                     f"text-anchor=\"middle\">{_escape(name)}</text>")

    parts.append(f"<g class=\"legend\" transform=\"translate({width - mr + 16},{mt})\">")
    for k, topic in enumerate(topics):
        y = k * 18
        parts.append(f"<rect x=\"0\" y=\"{y}\" width=\"12\" height=\"12\" "
                     f"fill=\"{_color(k, n_topics)}\"></rect>")
        parts.append(f"<text x=\"18\" y=\"{y + 10}\">{_escape(topic['label'])}</text>")
    parts.append("</g>")

    parts.append("</svg>")
    parts.append("<script type=\"application/json\" id=\"river-data\">")
    parts.append(json.dumps(river, indent=2, sort_keys=True))
    parts.append("</script>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))
