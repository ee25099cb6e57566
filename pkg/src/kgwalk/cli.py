"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 backend failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from .errors import BackendError, ConfigError, KgwalkError
from .kgstore import KnowledgeGraph
from .runner import load_config, rescore, run_experiment
from .verbalizer import export_labels, export_sentences

REFERENCE_SENTENCE_COUNT = 3_423_004


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kgwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an assertions dump and report counts")
    p.add_argument("--dump", required=True, help="assertions dump (.tsv or .tsv.gz)")
    p.add_argument("--language", default="en", help="2-letter language filter")
    p.add_argument("--report-out", help="also write the report as JSON")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("export-texts",
                       help="verbalize every triple to an index\\tsentence file")
    p.add_argument("--dump", required=True)
    p.add_argument("--language", default="en")
    p.add_argument("--out", required=True, help="output text file")
    p.add_argument("--labels-out",
                   help="also write unique node labels as a label\\tlabel file")
    p.add_argument("--expected-count", type=int, default=REFERENCE_SENTENCE_COUNT,
                   help="reference corpus size to compare against")
    p.set_defaults(func=cmd_export_texts)

    p = sub.add_parser("run", help="execute one experiment config")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out-dir", required=True, help="run output directory")
    p.add_argument("--parallelism", type=int, default=None,
                   help="override the config's generation parallelism")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="re-score an existing journal")
    p.add_argument("--journal", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="write the summary JSON here too")
    p.add_argument("--results", help="write per-item verdicts here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="tabulate summaries from run directories")
    p.add_argument("runs", nargs="+", help="run output directories")
    p.add_argument("--out", help="write the TSV here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def cmd_ingest(args) -> None:
    graph = KnowledgeGraph()
    report = graph.ingest_conceptnet(args.dump, args.language).as_dict()
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.report_out:
        with open(args.report_out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")


def cmd_export_texts(args) -> None:
    graph = KnowledgeGraph()
    report = graph.ingest_conceptnet(args.dump, args.language)
    count = export_sentences(graph, args.out)
    print(
        f"exported {count} sentences to {args.out} "
        f"(reference count {args.expected_count}, delta {count - args.expected_count}, "
        f"filter=/c/{args.language}/ on both endpoints, "
        f"skipped {report.skipped}, filtered {report.filtered})"
    )
    if args.labels_out:
        labels = export_labels(graph, args.labels_out)
        print(f"exported {labels} node labels to {args.labels_out}")


def cmd_run(args) -> None:
    config = load_config(args.config)
    summary = run_experiment(config, args.out_dir, parallelism=args.parallelism)
    print(json.dumps(summary, indent=2, sort_keys=True))


def cmd_score(args) -> None:
    summary, verdicts = rescore(args.journal, args.dataset)
    print(json.dumps(summary, indent=2, sort_keys=True))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.results:
        with open(args.results, "w", encoding="utf-8") as fh:
            for v in verdicts:
                fh.write(json.dumps(
                    {"item_id": v.item_id, "correct": v.correct, "reason": v.reason}
                ) + "\n")


_REPORT_COLUMNS = ("run", "regime", "k", "shape", "order", "relevance", "seed",
                   "n", "accuracy", "errors", "config_digest")


def cmd_report(args) -> None:
    rows = []
    for run_dir in args.runs:
        summary_path = os.path.join(run_dir, "summary.json")
        config_path = os.path.join(run_dir, "config.json")
        try:
            with open(summary_path, "r", encoding="utf-8") as fh:
                summary = json.load(fh)
            with open(config_path, "r", encoding="utf-8") as fh:
                config = json.load(fh)
        except OSError as exc:
            raise KgwalkError(f"{run_dir} is not a completed run: {exc}") from exc
        rows.append({
            "run": os.path.basename(os.path.normpath(run_dir)),
            "regime": config.get("regime", ""),
            "k": config.get("k", ""),
            "shape": config.get("shape", ""),
            "order": config.get("order", ""),
            "relevance": config.get("relevance", ""),
            "seed": config.get("seed", ""),
            "n": summary.get("n", ""),
            "accuracy": summary.get("accuracy", ""),
            "errors": summary.get("errors", ""),
            "config_digest": summary.get("config_digest", "")[:12],
        })
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out \
        else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=_REPORT_COLUMNS, delimiter="\t",
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except KgwalkError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
