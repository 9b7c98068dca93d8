"""Command-line driver.

Subcommands: ingest (load + normalize a corpus file), run (full
pipeline), synth (synthetic corpus with ground truth), coherence
(re-score a saved run with a different top-word count), export (re-emit
river/features from a saved run).

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, export
from .config import load_config, parse_override
from .errors import ConfigError, InvariantError
from .ingest import load_posts, save_posts_jsonl
from .labeling import coherence_report
from .pipeline import RunPaths, execute_run, load_run, stage
from .synth import SynthParams, write_corpus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicstream",
        description="Track topic evolution over time-sliced document streams.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    p_ingest = sub.add_parser("ingest", help="load a corpus file and write "
                              "normalized JSONL plus an error report")
    p_ingest.add_argument("--input", required=True)
    p_ingest.add_argument("--format", default="jsonl",
                          choices=("jsonl", "csv", "stackexchange_xml"))
    p_ingest.add_argument("--out", required=True, help="normalized JSONL output")
    p_ingest.add_argument("--report", help="optional JSON error-report path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_run = sub.add_parser("run", help="run the full pipeline from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable; overrides win)")
    p_run.add_argument("--outdir", help="override the output root directory")
    p_run.set_defaults(func=cmd_run)

    defaults = SynthParams()
    p_synth = sub.add_parser("synth", help="generate a synthetic corpus with "
                             "a ground-truth sidecar")
    p_synth.add_argument("--out", required=True, help="corpus JSONL path")
    p_synth.add_argument("--sidecar", help="sidecar path (default: <out>.truth.json)")
    p_synth.add_argument("--k-true", type=int, default=defaults.k_true)
    p_synth.add_argument("--block-size", type=int, default=defaults.block_size)
    p_synth.add_argument("--block-growth", type=float, default=defaults.block_growth)
    p_synth.add_argument("--block-zipf", type=float, default=defaults.block_zipf,
                         help=">0 gives Zipf-shaped word frequencies inside blocks")
    p_synth.add_argument("--slices", type=int, default=defaults.n_slices)
    p_synth.add_argument("--docs-per-slice", type=int, default=defaults.docs_per_slice)
    p_synth.add_argument("--sparse-docs", type=int, default=defaults.sparse_docs,
                         help=">0 shrinks odd slices to this many documents")
    p_synth.add_argument("--noise-docs", type=int, default=defaults.noise_docs,
                         help=">0 adds this many off-topic documents to odd slices")
    p_synth.add_argument("--doc-length", type=int, default=defaults.doc_length)
    p_synth.add_argument("--shift-slice", type=int, default=defaults.shift_slice)
    p_synth.add_argument("--shift-topic", type=int, default=defaults.shift_topic,
                         help="-1 draws one from the seeded generator")
    p_synth.add_argument("--shift-magnitude", type=float,
                         default=defaults.shift_magnitude,
                         help="0 disables the shift (null corpus)")
    p_synth.add_argument("--drift", type=float, default=defaults.drift)
    p_synth.add_argument("--doc-topic-alpha", type=float,
                         default=defaults.doc_topic_alpha)
    p_synth.add_argument("--popularity-skew", type=float,
                         default=defaults.popularity_skew)
    p_synth.add_argument("--seed", type=int, default=defaults.seed)
    p_synth.add_argument("--start-period", default=defaults.start_period)
    p_synth.set_defaults(func=cmd_synth)

    p_coh = sub.add_parser("coherence", help="re-score a saved run's "
                           "coherence with a different top-word count")
    p_coh.add_argument("--run-dir", required=True)
    p_coh.add_argument("--n", type=int, required=True, help="top words per topic")
    p_coh.set_defaults(func=cmd_coherence)

    p_exp = sub.add_parser("export", help="re-emit river and feature files "
                           "from a saved run directory")
    p_exp.add_argument("--run-dir", required=True)
    p_exp.add_argument("--outdir", help="write re-emitted files here instead "
                       "of the run directory")
    p_exp.set_defaults(func=cmd_export)

    return parser


def cmd_ingest(args) -> int:
    with stage("ingest"):
        result = load_posts(args.input, args.format)
        save_posts_jsonl(result.posts, args.out)
        print(f"loaded {len(result.posts)} post(s), "
              f"{len(result.errors)} malformed record(s)")
        if args.report:
            report = [{"where": e.where, "reason": e.reason} for e in result.errors]
            Path(args.report).write_text(
                json.dumps(report, indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
    return 0


def cmd_run(args) -> int:
    with stage("config"):
        overrides = dict(parse_override(item) for item in args.set)
        cfg = load_config(args.config, overrides)
    execute_run(cfg, out_root=args.outdir)
    return 0


def cmd_synth(args) -> int:
    with stage("synth"):
        params = SynthParams(
            k_true=args.k_true, block_size=args.block_size,
            block_growth=args.block_growth, block_zipf=args.block_zipf,
            n_slices=args.slices, docs_per_slice=args.docs_per_slice,
            sparse_docs=args.sparse_docs, noise_docs=args.noise_docs,
            doc_length=args.doc_length, shift_slice=args.shift_slice,
            shift_topic=args.shift_topic, shift_magnitude=args.shift_magnitude,
            drift=args.drift, doc_topic_alpha=args.doc_topic_alpha,
            popularity_skew=args.popularity_skew,
            seed=args.seed, start_period=args.start_period)
        sidecar = write_corpus(params, args.out, args.sidecar)
        print(f"synthetic corpus written to {args.out}")
        print(f"ground truth written to {sidecar}")
    return 0


def cmd_coherence(args) -> int:
    with stage("coherence"):
        data = load_run(args.run_dir)
        summary = coherence_report(data.results, data.vocab, data.stats, args.n)
        out = RunPaths(Path(args.run_dir)).coherence
        out.write_text(json.dumps({
            "N": args.n,
            "mean": summary.mean,
            "standard_error": summary.standard_error,
            "values": summary.values,
        }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"coherence (N={args.n}): mean={summary.mean:.4f} "
              f"se={summary.standard_error:.4f} over {len(summary.values)} topic-slices")
        print(f"written to {out}")
    return 0


def cmd_export(args) -> int:
    with stage("export"):
        data = load_run(args.run_dir)
        out_dir = Path(args.outdir) if args.outdir else Path(args.run_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = RunPaths(out_dir)
        export.export_river(data.results, data.docs_by_id, data.posts_by_id,
                            data.vocab, data.cfg.eta,
                            paths.river_json, paths.river_html)
        export.export_features(data.results, paths.features)
        print(f"river and features re-emitted under {out_dir}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_help()
        return 1
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc, 1)
    except InvariantError as exc:
        return _fail(exc, 3)
    except OSError as exc:
        return _fail(exc, 2)
    except Exception as exc:  # anything else is an internal failure
        return _fail(exc, 3)


def _fail(exc: Exception, code: int) -> int:
    where = getattr(exc, "stage", "cli")
    print(f"error [{where}]: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
