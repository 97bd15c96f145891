"""Study report emission: per-provider result tables, completeness series,
cost summaries. Markdown and CSV are byte-deterministic for identical record
sets; volatile metadata (timestamps) lives only in the JSON report."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .gateway import cost_report
from .pipeline import TECHNIQUE_SHORT, ExperimentRecord
from .scoring import completeness, mean_error, round2

TECHNIQUES_ORDERED = tuple(TECHNIQUE_SHORT)  # zero-shot, one-shot, few-shot


@dataclass
class StudyReport:
    records: list[ExperimentRecord]
    mode: str = ""
    corpus_digest: str = ""

    def providers(self) -> list[str]:
        return sorted({r.provider for r in self.records})

    def capabilities(self) -> list[str]:
        return sorted({r.capability_id for r in self.records})

    def record_for(self, provider: str, cap: str, technique: str) -> Optional[ExperimentRecord]:
        for r in self.records:
            if (r.provider, r.capability_id, r.technique) == (provider, cap, technique):
                return r
        return None

    def technique_sums(self, provider: str, technique: str) -> list[Fraction]:
        sums = []
        for cap in self.capabilities():
            r = self.record_for(provider, cap, technique)
            if r is not None and r.ok and r.scores is not None:
                sums.append(r.scores.total)
        return sums

    def mean_errors(self, provider: str) -> dict[str, Optional[Fraction]]:
        out: dict[str, Optional[Fraction]] = {}
        for technique in TECHNIQUES_ORDERED:
            sums = self.technique_sums(provider, technique)
            out[technique] = mean_error(sums) if sums else None
        return out


def _fmt(value: Optional[Fraction]) -> str:
    if value is None:
        return "failed"
    return str(round2(value))


def render_markdown(report: StudyReport) -> str:
    lines: list[str] = ["# Capability generation study report", ""]
    if report.mode:
        lines.append(f"Mode: {report.mode}  ")
    if report.corpus_digest:
        lines.append(f"Corpus digest: `{report.corpus_digest}`  ")
    lines.append("")

    for provider in report.providers():
        lines.append(f"## Results: {provider}")
        lines.append("")
        header = ["Capability", "# Triples"]
        for technique in TECHNIQUES_ORDERED:
            short = TECHNIQUE_SHORT[technique]
            header += [f"{short} S", f"{short} C", f"{short} H", f"{short} I", f"{short} Σ"]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "---|" * len(header))
        for cap in report.capabilities():
            row = [cap]
            triples = ""
            cells: list[str] = []
            for technique in TECHNIQUES_ORDERED:
                r = report.record_for(provider, cap, technique)
                if r is None or not r.ok or r.scores is None or r.counts is None:
                    cells += ["failed"] * 5
                    continue
                triples = str(r.counts.triples)
                s = r.scores
                cells += [
                    str(round2(s.syntax_rel)), str(round2(s.contradictions_rel)),
                    str(round2(s.hallucinated_rel)), str(round2(s.incomplete_rel)),
                    str(round2(s.total)),
                ]
            row.append(triples)
            row += cells
            lines.append("| " + " | ".join(row) + " |")
        means = report.mean_errors(provider)
        mean_row = ["Mean error score", ""]
        for technique in TECHNIQUES_ORDERED:
            mean_row += ["", "", "", "", _fmt(means[technique])]
        lines.append("| " + " | ".join(mean_row) + " |")
        lines.append("")

        lines.append(f"### Completeness: {provider}")
        lines.append("")
        lines.append("| Capability | " + " | ".join(TECHNIQUE_SHORT[t] for t in TECHNIQUES_ORDERED) + " |")
        lines.append("|" + "---|" * (1 + len(TECHNIQUES_ORDERED)))
        for cap in report.capabilities():
            cells = [cap]
            for technique in TECHNIQUES_ORDERED:
                r = report.record_for(provider, cap, technique)
                if r is None or not r.ok or r.scores is None:
                    cells.append("failed")
                else:
                    cells.append(str(round2(completeness(r.scores.incomplete_rel))))
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")

        results = [r.completion for r in report.records
                   if r.provider == provider and r.completion is not None]
        summary = cost_report(results)
        lines.append(
            f"Cost ({provider}): total {summary.total:.2f} USD, "
            f"mean per prompt {summary.mean_per_prompt:.2f} USD")
        lines.append("")

    if len(report.providers()) > 1:
        lines.append("## Mean error comparison")
        lines.append("")
        lines.append("| Provider | " + " | ".join(TECHNIQUE_SHORT[t] for t in TECHNIQUES_ORDERED) + " |")
        lines.append("|" + "---|" * (1 + len(TECHNIQUES_ORDERED)))
        for provider in report.providers():
            means = report.mean_errors(provider)
            lines.append("| " + " | ".join(
                [provider] + [_fmt(means[t]) for t in TECHNIQUES_ORDERED]) + " |")
        lines.append("")
    return "\n".join(lines)


def render_csv(report: StudyReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "provider", "capability", "technique", "status",
        "S", "C", "H", "I", "triples",
        "S_rel", "C_rel", "H_rel", "I_rel", "sum", "completeness",
        "run_dir",
    ])
    for r in sorted(report.records, key=lambda r: (r.provider, r.capability_id, r.technique)):
        if r.ok and r.counts is not None and r.scores is not None:
            s = r.scores
            writer.writerow([
                r.provider, r.capability_id, r.technique, "ok",
                r.counts.syntax, r.counts.contradictions,
                r.counts.hallucinated, r.counts.incomplete, r.counts.triples,
                float(s.syntax_rel), float(s.contradictions_rel),
                float(s.hallucinated_rel), float(s.incomplete_rel),
                float(s.total), float(completeness(s.incomplete_rel)),
                str(r.run_dir or ""),
            ])
        else:
            writer.writerow([
                r.provider, r.capability_id, r.technique, "failed",
                "", "", "", "", "", "", "", "", "", "", "",
                str(r.run_dir or ""),
            ])
    return buf.getvalue()


def report_json_payload(report: StudyReport, include_timestamps: bool = True) -> dict:
    cells = []
    for r in sorted(report.records, key=lambda r: (r.provider, r.capability_id, r.technique)):
        cell: dict = {
            "provider": r.provider,
            "capability": r.capability_id,
            "technique": r.technique,
            "status": "ok" if r.ok else "failed",
            "run_dir": str(r.run_dir or ""),
        }
        if not r.ok:
            cell["failure"] = r.failure
        if r.counts is not None:
            cell["counts"] = r.counts.to_dict()
        if r.scores is not None:
            cell["scores"] = r.scores.to_dict()
            cell["completeness"] = float(completeness(r.scores.incomplete_rel))
        if r.completion is not None:
            cell["usage"] = {
                "input_tokens": r.completion.input_tokens,
                "output_tokens": r.completion.output_tokens,
                "cost": r.completion.cost,
                "mode": r.completion.mode,
            }
        cells.append(cell)
    payload = {
        "meta": {
            "mode": report.mode,
            "corpus_digest": report.corpus_digest,
        },
        "mean_errors": {
            provider: {t: (float(v) if v is not None else None)
                       for t, v in report.mean_errors(provider).items()}
            for provider in report.providers()
        },
        "cells": cells,
    }
    if include_timestamps:
        payload["meta"]["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return payload


def emit_report(
    records: Sequence[ExperimentRecord],
    out_dir: Path,
    formats: Sequence[str] = ("md", "csv", "json"),
    mode: str = "",
    corpus_digest: str = "",
) -> dict[str, Path]:
    if not records:
        raise ValueError("cannot report on an empty record set")
    report = StudyReport(records=list(records), mode=mode, corpus_digest=corpus_digest)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if "md" in formats:
        path = out_dir / "report.md"
        path.write_text(render_markdown(report), encoding="utf-8")
        written["md"] = path
    if "csv" in formats:
        path = out_dir / "report.csv"
        path.write_text(render_csv(report), encoding="utf-8")
        written["csv"] = path
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(
            json.dumps(report_json_payload(report), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        written["json"] = path
    return written
