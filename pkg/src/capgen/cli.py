"""Command line interface for the capability generation harness."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import DEFAULT_CORPUS, CorpusError, load_corpus
from .gateway import LIVE, REPLAY
from .pipeline import (
    TECHNIQUE_SHORT,
    ExperimentRecord,
    RepairError,
    StudyConfig,
    evaluate_graph,
    repair,
    run_study,
)
from .prompts import build_matrix
from .report import emit_report
from .scoring import ErrorCounts, relative_scores

EXIT_OK = 0
EXIT_FAILED_EXPERIMENT = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capgen",
        description="Generate capability ontologies with LLMs and score the results.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-prompts", help="render the full prompt matrix")
    p.add_argument("--corpus", type=Path, default=DEFAULT_CORPUS)
    p.add_argument("--out", type=Path, default=Path("out/prompts"))

    for name, help_text in (("run", "execute the study against live providers"),
                            ("replay", "execute the study from stored fixtures")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=True)
        p.add_argument("--out", type=Path, default=None,
                       help="override the output directory from the config")
        p.add_argument("--providers", type=str, default=None,
                       help="comma separated provider names to run")
        p.add_argument("--techniques", type=str, default=None)
        p.add_argument("--capabilities", type=str, default=None)
        p.add_argument("--parallelism", type=int, default=None)
        p.add_argument("--format", dest="formats", type=str, default="md,csv,json")

    p = sub.add_parser("validate", help="run one ontology file through the validation stack")
    p.add_argument("file", type=Path)
    p.add_argument("capability_id", type=str)
    p.add_argument("--corpus", type=Path, default=DEFAULT_CORPUS)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("score", help="turn an error-count file into relative scores")
    p.add_argument("counts", type=Path)

    p = sub.add_parser("report", help="rebuild reports from a finished run directory")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--out", type=Path, default=None)
    return parser


def _apply_overrides(config: StudyConfig, args: argparse.Namespace) -> StudyConfig:
    if args.out:
        config.out_dir = args.out
    if args.providers:
        wanted = {x.strip() for x in args.providers.split(",")}
        config.providers = [p for p in config.providers if p.name in wanted]
    if args.techniques:
        config.techniques = [x.strip() for x in args.techniques.split(",")]
    if args.capabilities:
        config.capability_ids = [x.strip() for x in args.capabilities.split(",")]
    if args.parallelism:
        config.parallelism = args.parallelism
    return config


def _cmd_gen_prompts(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    templates = [corpus.templates[t] for t in TECHNIQUE_SHORT if t in corpus.templates]
    caps = [c for c in corpus.ordered_capabilities() if c.is_study_target]
    matrix = build_matrix(caps, templates, corpus.tbox_text, corpus.examples)
    args.out.mkdir(parents=True, exist_ok=True)
    for inst in matrix:
        short = TECHNIQUE_SHORT[inst.technique]
        path = args.out / f"{inst.capability_id}-{short}.txt"
        path.write_text(inst.rendered_text, encoding="utf-8")
        print(f"wrote {path} ({inst.token_estimate} tokens)")
    print(f"{len(matrix)} prompts")
    return EXIT_OK


def _cmd_study(args: argparse.Namespace, mode: str) -> int:
    try:
        config = StudyConfig.from_file(args.config)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config.mode = mode
    config = _apply_overrides(config, args)
    if not config.providers:
        print("error: no providers configured", file=sys.stderr)
        return EXIT_CONFIG
    if mode == LIVE:
        for profile in config.providers:
            if not os.environ.get(profile.auth_env_var, ""):
                print(
                    f"error: provider {profile.name} needs the environment "
                    f"variable {profile.auth_env_var}", file=sys.stderr)
                return EXIT_CONFIG
    try:
        corpus = load_corpus(config.corpus_root)
    except (CorpusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    records = run_study(config, corpus)
    report_dir = config.out_dir / "report"
    formats = [x.strip() for x in args.formats.split(",")]
    written = emit_report(
        records, report_dir, formats=formats,
        mode=mode.lower(), corpus_digest=corpus.digest())
    for r in records:
        status = "ok" if r.ok else f"FAILED ({r.failure})"
        print(f"{r.key}: {status}")
    for fmt, path in written.items():
        print(f"report[{fmt}]: {path}")
    failed = [r for r in records if not r.ok]
    if failed:
        print(f"{len(failed)} of {len(records)} experiments failed", file=sys.stderr)
        return EXIT_FAILED_EXPERIMENT
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        corpus = load_corpus(args.corpus)
        cap = corpus.capability(args.capability_id)
    except (CorpusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = args.file.read_text(encoding="utf-8")
    try:
        outcome = repair(text, corpus.tbox_iri)
    except RepairError as exc:
        print(f"error: unrecoverable syntax issues in {args.file}:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue.category} at {issue.line}:{issue.column}: {issue.message}",
                  file=sys.stderr)
        return EXIT_FAILED_EXPERIMENT
    gold = corpus.gold_graph(cap.id)
    counts, violations, contradictions, missing = evaluate_graph(
        outcome.graph, gold, corpus, outcome.log)
    scores = relative_scores(counts)
    if args.as_json:
        print(json.dumps({
            "counts": counts.to_dict(),
            "scores": scores.to_dict(),
            "violations": [v.to_dict() for v in violations],
            "contradictions": [c.to_dict() for c in contradictions],
        }, indent=2, sort_keys=True))
    else:
        c = counts
        print(f"S={c.syntax} C={c.contradictions} H={c.hallucinated} "
              f"I={c.incomplete} triples={c.triples}")
        print(f"relative: S={scores.to_dict()['display']['S_rel']} "
              f"C={scores.to_dict()['display']['C_rel']} "
              f"H={scores.to_dict()['display']['H_rel']} "
              f"I={scores.to_dict()['display']['I_rel']} "
              f"sum={scores.to_dict()['display']['sum']}")
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    try:
        data = json.loads(args.counts.read_text(encoding="utf-8"))
        counts = ErrorCounts.from_dict(data.get("counts", data))
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read counts: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    scores = relative_scores(counts)
    print(json.dumps(scores.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    run_dir = args.run_dir
    if not run_dir.is_dir():
        print(f"error: {run_dir} is not a directory", file=sys.stderr)
        return EXIT_CONFIG
    records: list[ExperimentRecord] = []
    short_to_technique = {v: k for k, v in TECHNIQUE_SHORT.items()}
    for counts_path in sorted(run_dir.rglob("counts.json")):
        data = json.loads(counts_path.read_text(encoding="utf-8"))
        cap_tech = counts_path.parent.name  # e.g. C1-zero
        provider = counts_path.parent.parent.name
        cap_id, _, short = cap_tech.partition("-")
        record = ExperimentRecord(
            capability_id=cap_id,
            technique=short_to_technique.get(short, short),
            provider=provider)
        record.counts = ErrorCounts.from_dict(data["counts"])
        record.scores = relative_scores(record.counts)
        record.run_dir = counts_path.parent
        records.append(record)
    if not records:
        print(f"error: no counts.json files under {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or (run_dir / "report")
    written = emit_report(records, out, mode="report")
    for fmt, path in written.items():
        print(f"report[{fmt}]: {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if args.command == "gen-prompts":
        return _cmd_gen_prompts(args)
    if args.command == "run":
        return _cmd_study(args, LIVE)
    if args.command == "replay":
        return _cmd_study(args, REPLAY)
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "score":
        return _cmd_score(args)
    if args.command == "report":
        return _cmd_report(args)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
