"""Relative error scores: absolute counts normalized by the gold triple count.

All arithmetic is exact (fractions); rounding to two decimals happens only
when a value is displayed. Sums and means therefore reconcile regardless of
how the individual cells round.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Sequence


class ScoringError(Exception):
    pass


@dataclass(frozen=True)
class ErrorCounts:
    syntax: int
    contradictions: int
    hallucinated: int
    incomplete: int
    triples: int

    def __post_init__(self) -> None:
        for name in ("syntax", "contradictions", "hallucinated", "incomplete"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} count must be non-negative")
        if self.triples <= 0:
            raise ValueError("gold triple count must be positive")

    def to_dict(self) -> dict:
        return {
            "S": self.syntax,
            "C": self.contradictions,
            "H": self.hallucinated,
            "I": self.incomplete,
            "triples": self.triples,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ErrorCounts":
        return cls(
            syntax=data["S"], contradictions=data["C"],
            hallucinated=data["H"], incomplete=data["I"],
            triples=data["triples"])


@dataclass(frozen=True)
class ErrorScores:
    syntax_rel: Fraction
    contradictions_rel: Fraction
    hallucinated_rel: Fraction
    incomplete_rel: Fraction

    @property
    def total(self) -> Fraction:
        return (self.syntax_rel + self.contradictions_rel
                + self.hallucinated_rel + self.incomplete_rel)

    def components(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.syntax_rel, self.contradictions_rel,
                self.hallucinated_rel, self.incomplete_rel)

    def to_dict(self) -> dict:
        return {
            "S_rel": float(self.syntax_rel),
            "C_rel": float(self.contradictions_rel),
            "H_rel": float(self.hallucinated_rel),
            "I_rel": float(self.incomplete_rel),
            "sum": float(self.total),
            "display": {
                "S_rel": str(round2(self.syntax_rel)),
                "C_rel": str(round2(self.contradictions_rel)),
                "H_rel": str(round2(self.hallucinated_rel)),
                "I_rel": str(round2(self.incomplete_rel)),
                "sum": str(round2(self.total)),
            },
        }


def round2(value: Fraction | float | int) -> Decimal:
    """Display rounding: two decimals, half up."""
    if isinstance(value, Fraction):
        dec = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        dec = Decimal(str(value))
    return dec.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def relative_scores(counts: ErrorCounts) -> ErrorScores:
    if counts.triples <= 0:
        raise ScoringError("cannot normalize by a zero triple count")
    n = counts.triples
    scores = ErrorScores(
        syntax_rel=Fraction(counts.syntax, n),
        contradictions_rel=Fraction(counts.contradictions, n),
        hallucinated_rel=Fraction(counts.hallucinated, n),
        incomplete_rel=Fraction(counts.incomplete, n),
    )
    if scores.incomplete_rel > 1:
        raise ScoringError(
            f"incompleteness {counts.incomplete} exceeds gold triple count {n}")
    return scores


def sum_score(scores: ErrorScores) -> Fraction:
    return scores.total


def mean_error(sums: Sequence[Fraction | int]) -> Fraction:
    if not sums:
        raise ScoringError("mean of an empty list")
    total = sum((Fraction(s) for s in sums), Fraction(0))
    return total / len(sums)


def completeness(incomplete_rel: Fraction | float) -> Fraction:
    value = Fraction(incomplete_rel) if not isinstance(incomplete_rel, Fraction) else incomplete_rel
    if value < 0 or value > 1:
        raise ScoringError("relative incompleteness must lie in [0, 1]")
    return 1 - value
