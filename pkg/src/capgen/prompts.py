"""Prompt rendering: fill templates with the vocabulary, worked examples and tasks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

TECHNIQUES = ("zero-shot", "one-shot", "few-shot")
_EXPECTED_EXAMPLE_COUNTS = {"zero-shot": 0, "one-shot": 1, "few-shot": 3}

EXAMPLE_BEGIN = "=== Example: task description ==="
EXAMPLE_SOLUTION = "=== Example: solution ontology ==="
EXAMPLE_END = "=== End example ==="


class TemplateError(Exception):
    pass


@dataclass(frozen=True)
class CapabilitySpec:
    id: str
    name: str
    description: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    constraints: tuple[str, ...]
    gold_path: Path
    description_path: Path

    @property
    def is_study_target(self) -> bool:
        return self.id.startswith("C")


@dataclass(frozen=True)
class PromptTemplate:
    technique: str
    instruction: str
    example_ids: tuple[str, ...]
    body: str

    def __post_init__(self) -> None:
        expected = _EXPECTED_EXAMPLE_COUNTS.get(self.technique)
        if expected is None:
            raise TemplateError(f"unknown technique {self.technique!r}")
        if len(self.example_ids) != expected:
            raise TemplateError(
                f"{self.technique} template must list {expected} example id(s), "
                f"got {len(self.example_ids)}")
        for marker in ("{CONTEXT}", "{TASK}"):
            if marker not in self.body:
                raise TemplateError(f"template body lacks {marker} marker")


@dataclass(frozen=True)
class PromptInstance:
    capability_id: str
    technique: str
    rendered_text: str
    token_estimate: int


def load_template(path: Path) -> PromptTemplate:
    """Parse a template file: header lines (technique, examples), '---', body."""
    text = Path(path).read_text(encoding="utf-8")
    if "\n---\n" not in text:
        raise TemplateError(f"{path}: missing '---' header separator")
    header, body = text.split("\n---\n", 1)
    technique = ""
    example_ids: tuple[str, ...] = ()
    for line in header.splitlines():
        line = line.strip()
        if line.startswith("technique:"):
            technique = line.split(":", 1)[1].strip()
        elif line.startswith("examples:"):
            raw = line.split(":", 1)[1].strip()
            example_ids = tuple(x.strip() for x in raw.split(",") if x.strip())
    instruction = body.split("\n\n", 1)[0].strip()
    return PromptTemplate(
        technique=technique, instruction=instruction,
        example_ids=example_ids, body=body)


def estimate_tokens(text: str) -> int:
    """Deterministic vendor-neutral heuristic: one token per four characters."""
    return math.ceil(len(text) / 4)


def render_example_block(description: str, solution_turtle: str) -> str:
    return (
        f"{EXAMPLE_BEGIN}\n\n{description.strip()}\n\n"
        f"{EXAMPLE_SOLUTION}\n\n{solution_turtle.strip()}\n\n"
        f"{EXAMPLE_END}\n\n"
    )


def render_prompt(
    template: PromptTemplate,
    tbox_text: str,
    examples: Sequence[tuple[str, str]],
    task: str,
    capability_id: str = "",
) -> PromptInstance:
    """Literal placeholder substitution; examples appear in template order."""
    expected = _EXPECTED_EXAMPLE_COUNTS[template.technique]
    if len(examples) != expected:
        raise TemplateError(
            f"{template.technique} prompt needs {expected} example(s), "
            f"got {len(examples)}")
    example_text = "".join(
        render_example_block(desc, ttl) for desc, ttl in examples)
    rendered = (
        template.body
        .replace("{CONTEXT}", tbox_text)
        .replace("{EXAMPLES}", example_text)
        .replace("{TASK}", task)
    )
    return PromptInstance(
        capability_id=capability_id,
        technique=template.technique,
        rendered_text=rendered,
        token_estimate=estimate_tokens(rendered),
    )


def build_matrix(
    capabilities: Sequence[CapabilitySpec],
    templates: Sequence[PromptTemplate],
    tbox_text: str,
    examples_by_id: dict[str, tuple[str, str]],
) -> list[PromptInstance]:
    """The full capability x technique matrix, capability-major order."""
    instances: list[PromptInstance] = []
    for cap in capabilities:
        for template in templates:
            example_pairs = [examples_by_id[eid] for eid in template.example_ids]
            instances.append(render_prompt(
                template, tbox_text, example_pairs, cap.description,
                capability_id=cap.id))
    return instances


def count_example_blocks(rendered_text: str) -> int:
    return rendered_text.count(EXAMPLE_BEGIN)
