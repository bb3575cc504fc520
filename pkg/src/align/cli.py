"""Command-line interface: ingest, routines, annotate, measures, analyze, all.

Exit status is 0 on success and 2 on input validation failure. The ALIGN_SEED
environment variable is reserved for future use; every analysis here is
deterministic.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpus import (
    InputError,
    assemble_corpus,
    load_corpus,
    load_event_log,
    load_network,
    load_test_scores,
    load_transcript,
    save_corpus,
)
from .report import (
    HYPOTHESES,
    RUNNERS,
    Pipeline,
    emit,
    emit_annotated_corpus,
    emit_measures,
    emit_routine_table,
    run_h12,
    run_h21,
    run_h22,
    summary_lines,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="align",
        description="Verbal and behavioural alignment measures for situated task dialogues.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="load raw files and write a corpus directory")
    ingest.add_argument("--transcripts", required=True)
    ingest.add_argument("--events", required=True)
    ingest.add_argument("--network", required=True)
    ingest.add_argument("--tests", required=True)
    ingest.add_argument("--out", required=True)
    ingest.add_argument("--first-visual", choices=["A", "B"], default="B",
                        help="interlocutor in the visual view during turn 1")

    routines = sub.add_parser("routines", help="mine routine expressions")
    routines.add_argument("--corpus", required=True)
    routines.add_argument("--task-only", action="store_true",
                          help="keep only routines containing a node name")
    routines.add_argument("--out")

    annotate = sub.add_parser("annotate", help="write the instruction-annotated corpus")
    annotate.add_argument("--corpus", required=True)
    annotate.add_argument("--clear-on-verdict", action="store_true",
                          help="empty the pending cache after any match or mismatch")
    annotate.add_argument("--out")

    measures = sub.add_parser("measures", help="write task-level success measures")
    measures.add_argument("--corpus", required=True)
    measures.add_argument("--out")

    analyze = sub.add_parser("analyze", help="run one hypothesis analysis")
    analyze.add_argument("--hypothesis", required=True, choices=HYPOTHESES)
    analyze.add_argument("--corpus", required=True)
    analyze.add_argument("--format", choices=["csv", "json"], default="csv")
    analyze.add_argument("--out")
    analyze.add_argument("--window", type=float,
                         help="common analysis window in seconds (default: quickest team)")
    analyze.add_argument("--markers", default="uh,um",
                         help="comma-separated marker tokens for h1.2")
    analyze.add_argument("--grouped", action="store_true",
                         help="h2.1: one event per instructing utterance instead of per action")
    analyze.add_argument("--oh-events", choices=["token", "utterance"], default="token",
                         help="h2.2: one oh event per occurrence or per utterance")
    analyze.add_argument("--mm-events", choices=["action", "utterance"], default="action",
                         help="h2.2: pool per-action or per-utterance (mis)match times")
    analyze.add_argument("--clear-on-verdict", action="store_true")

    run_all = sub.add_parser("all", help="run every stage and all four analyses")
    run_all.add_argument("--corpus", required=True)
    run_all.add_argument("--format", choices=["csv", "json"], default="csv")
    run_all.add_argument("--out")
    run_all.add_argument("--clear-on-verdict", action="store_true")

    return parser


def _out_dir(args) -> Path:
    return Path(args.out) if args.out else Path(args.corpus)


def _run_analysis(pipeline: Pipeline, hypothesis: str, args) -> "HypothesisReport":
    if hypothesis == "h1.1":
        return RUNNERS[hypothesis](pipeline, window=args.window)
    if hypothesis == "h1.2":
        markers = frozenset(m.strip() for m in args.markers.split(",") if m.strip())
        return run_h12(pipeline, markers=markers)
    if hypothesis == "h2.1":
        return run_h21(pipeline, window=args.window, grouped=args.grouped)
    return run_h22(pipeline, oh_events=args.oh_events, mm_events=args.mm_events)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            network = load_network(args.network)
            corpus = assemble_corpus(
                network=network,
                utterances=load_transcript(args.transcripts),
                event_log=load_event_log(args.events, network),
                scores=load_test_scores(args.tests),
                first_visual=args.first_visual,
            )
            path = save_corpus(corpus, args.out)
            print(f"wrote {path} ({len(corpus.teams)} teams)")
            return 0

        corpus = load_corpus(args.corpus)
        if args.command == "routines":
            pipeline = Pipeline(corpus)
            path = emit_routine_table(pipeline, _out_dir(args) / "routines.csv",
                                      task_only=args.task_only)
            print(f"wrote {path}")
        elif args.command == "annotate":
            pipeline = Pipeline(corpus, clear_on_verdict=args.clear_on_verdict)
            path = emit_annotated_corpus(pipeline, _out_dir(args) / "annotated_corpus.csv")
            print(f"wrote {path}")
        elif args.command == "measures":
            pipeline = Pipeline(corpus)
            path = emit_measures(pipeline, _out_dir(args) / "task_features.csv")
            print(f"wrote {path}")
        elif args.command == "analyze":
            pipeline = Pipeline(corpus, clear_on_verdict=args.clear_on_verdict)
            report = _run_analysis(pipeline, args.hypothesis, args)
            for path in emit(report, args.format, _out_dir(args)):
                print(f"wrote {path}")
            print("\n".join(summary_lines(report)))
        elif args.command == "all":
            pipeline = Pipeline(corpus, clear_on_verdict=args.clear_on_verdict)
            out = _out_dir(args)
            emit_routine_table(pipeline, out / "routines.csv")
            emit_annotated_corpus(pipeline, out / "annotated_corpus.csv")
            emit_measures(pipeline, out / "task_features.csv")
            for hypothesis in HYPOTHESES:
                report = RUNNERS[hypothesis](pipeline)
                emit(report, args.format, out)
                print("\n".join(summary_lines(report)))
            print(f"wrote outputs to {out}")
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
