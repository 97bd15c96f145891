"""End-to-end experiment pipeline.

One experiment: render prompt -> complete -> extract the ontology from the
response -> repair trivial omissions (prefixes, vocabulary import) ->
inference -> contradiction check -> shape validation -> gold comparison ->
error counts and relative scores. Every intermediate lands in the run
directory so any count can be recomputed offline.
"""
from __future__ import annotations

import json
import re
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from difflib import SequenceMatcher
from pathlib import Path
from typing import Optional, Sequence

from .consistency import Contradiction, check_consistency, infer_types
from .corpus import WELL_KNOWN_PREFIXES, Corpus, load_corpus
from .gateway import (
    REPLAY,
    CompletionRequest,
    CompletionResult,
    GatewayError,
    ProviderProfile,
    DEFAULT_PROFILES,
    complete,
    guard_context,
)
from .prompts import CapabilitySpec, PromptInstance, render_prompt
from .rdf.terms import MISSING_PREFIX, OWL_NS, RDF_TYPE, Graph, SyntaxIssue, Term, Triple, iri
from .rdf.turtle import serialize_turtle, try_parse_turtle
from .scoring import ErrorCounts, ErrorScores, relative_scores
from .shacl import Violation, classify, validate

_OWL_IMPORTS = OWL_NS + "imports"
_OWL_ONTOLOGY = OWL_NS + "Ontology"

TECHNIQUE_SHORT = {"zero-shot": "zero", "one-shot": "one", "few-shot": "few"}


class ExtractionError(Exception):
    """The response contains no region that parses as an ontology."""


class RepairError(Exception):
    def __init__(self, issues: list[SyntaxIssue], log: "RepairLog"):
        self.issues = issues
        self.log = log
        super().__init__(
            f"{len(issues)} syntax issue(s) remain after prefix repair")


@dataclass
class ExtractionResult:
    ontology_text: str
    leading_prose: str
    trailing_prose: str
    extra_documents: list[str]
    segments: list[tuple[str, str]] = field(default_factory=list)  # (kind, text) in response order

    def reconstruct(self) -> str:
        if self.segments:
            return "\n".join(text for _, text in self.segments)
        parts = [self.leading_prose, self.ontology_text, self.trailing_prose]
        parts.extend(self.extra_documents)
        return "\n".join(p for p in parts if p)


@dataclass
class RepairLog:
    added_prefixes: list[str] = field(default_factory=list)
    added_imports: list[str] = field(default_factory=list)
    other_edits: list[str] = field(default_factory=list)

    @property
    def syntax_count(self) -> int:
        return len(self.added_prefixes)

    @property
    def incompleteness_count(self) -> int:
        return len(self.added_imports)

    def to_dict(self) -> dict:
        return {
            "added_prefixes": self.added_prefixes,
            "added_imports": self.added_imports,
            "other_edits": self.other_edits,
        }


@dataclass
class RepairOutcome:
    graph: Graph
    log: RepairLog


@dataclass
class ExperimentRecord:
    capability_id: str
    technique: str
    provider: str
    prompt: Optional[PromptInstance] = None
    completion: Optional[CompletionResult] = None
    extraction: Optional[ExtractionResult] = None
    repair_log: Optional[RepairLog] = None
    violations: list[Violation] = field(default_factory=list)
    contradictions: list[Contradiction] = field(default_factory=list)
    counts: Optional[ErrorCounts] = None
    scores: Optional[ErrorScores] = None
    artifacts: dict[str, str] = field(default_factory=dict)
    failure: Optional[str] = None
    run_dir: Optional[Path] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def key(self) -> str:
        return f"{self.capability_id}-{TECHNIQUE_SHORT[self.technique]}-{self.provider}"


# ---------------------------------------------------------------------------
# Response-to-ontology extraction
# ---------------------------------------------------------------------------

_FENCE_RE = re.compile(r"^```[^\n]*\n(.*?)^```[ \t]*$", re.MULTILINE | re.DOTALL)


def _qualifies(text: str) -> bool:
    """A region qualifies as an ontology if it parses cleanly with at least
    one triple, or parses with nothing worse than missing prefix labels."""
    if not text.strip():
        return False
    graph, issues = try_parse_turtle(text)
    if graph is not None:
        return len(graph) > 0
    return all(i.category == MISSING_PREFIX for i in issues)


def extract_ontology(response: str) -> ExtractionResult:
    """Select the first maximal region of the response that parses as Turtle.

    Fenced code blocks are preferred when present. Later parseable documents
    are preserved in extra_documents and excluded from scoring; surrounding
    prose is kept for audit.
    """
    segments: list[tuple[str, str]] = []

    fenced = list(_FENCE_RE.finditer(response))
    candidates: list[tuple[int, int, str]] = []  # (start, end, body)
    if fenced:
        candidates = [(m.start(), m.end(), m.group(1)) for m in fenced]
    elif _qualifies(response):
        segments.append(("ontology", response))
        return ExtractionResult(
            ontology_text=response, leading_prose="", trailing_prose="",
            extra_documents=[], segments=segments)
    else:
        candidates = _paragraph_runs(response)

    primary: Optional[tuple[int, int, str]] = None
    extras: list[tuple[int, int, str]] = []
    for start, end, body in candidates:
        if not _qualifies(body):
            continue
        if primary is None:
            primary = (start, end, body)
        else:
            extras.append((start, end, body))
    if primary is None:
        raise ExtractionError("no region of the response parses as Turtle")

    cursor = 0
    marks = sorted([(primary[0], primary[1], "ontology", primary[2])]
                   + [(s, e, "extra", b) for s, e, b in extras])
    for start, end, kind, body in marks:
        prose = response[cursor:start]
        if prose.strip():
            segments.append(("prose", prose.strip("\n")))
        segments.append((kind, body))
        cursor = end
    tail = response[cursor:]
    if tail.strip():
        segments.append(("prose", tail.strip("\n")))

    # derive the flat view from the ordered segments
    leading_parts: list[str] = []
    trailing_parts: list[str] = []
    extra_docs: list[str] = []
    seen_primary = False
    for kind, text in segments:
        if kind == "ontology":
            seen_primary = True
        elif kind == "extra":
            extra_docs.append(text)
        elif kind == "prose":
            (trailing_parts if seen_primary else leading_parts).append(text)
    return ExtractionResult(
        ontology_text=primary[2],
        leading_prose="\n".join(leading_parts),
        trailing_prose="\n".join(trailing_parts),
        extra_documents=extra_docs,
        segments=segments)


def _paragraph_runs(response: str) -> list[tuple[int, int, str]]:
    """Maximal qualifying runs of blank-line-separated paragraphs."""
    spans: list[tuple[int, int]] = []
    offset = 0
    for para in re.split(r"\n[ \t]*\n", response):
        if para.strip():
            start = response.index(para, offset)
            spans.append((start, start + len(para)))
            offset = start + len(para)
    runs: list[tuple[int, int, str]] = []
    i = 0
    used_until = -1
    while i < len(spans):
        if not _qualifies(response[spans[i][0]:spans[i][1]]):
            i += 1
            continue
        j = i
        while j + 1 < len(spans) and _qualifies(response[spans[i][0]:spans[j + 1][1]]):
            j += 1
        # a leading prefix-declaration paragraph carries no triples on its
        # own; pull it in when the combined span still parses
        k = i
        while k - 1 > used_until and _qualifies(response[spans[k - 1][0]:spans[j][1]]):
            k -= 1
        start, end = spans[k][0], spans[j][1]
        runs.append((start, end, response[start:end]))
        used_until = j
        i = j + 1
    return runs


# ---------------------------------------------------------------------------
# Repair
# ---------------------------------------------------------------------------

def repair(ontology_text: str, tbox_iri: str) -> RepairOutcome:
    """Insert missing prefix declarations and the vocabulary import.

    Each inserted prefix counts toward the syntax tally; the inserted import
    counts toward incompleteness. Any other syntax issue is a repair failure.
    """
    log = RepairLog()
    graph, issues = try_parse_turtle(ontology_text)
    if graph is None:
        missing = [i for i in issues if i.category == MISSING_PREFIX]
        others = [i for i in issues if i.category != MISSING_PREFIX]
        if others or not missing:
            raise RepairError(others or issues, log)
        decls = []
        for issue in missing:
            label = issue.token
            namespace = WELL_KNOWN_PREFIXES.get(label, f"urn:x-generated:{label}#")
            decls.append(f"@prefix {label}: <{namespace}> .")
            log.added_prefixes.append(f"{label}: <{namespace}>")
        graph, issues = try_parse_turtle("\n".join(decls) + "\n" + ontology_text)
        if graph is None:
            raise RepairError(issues, log)

    imports_pred = iri(_OWL_IMPORTS)
    has_import = any(
        t.predicate == imports_pred and t.object == iri(tbox_iri) for t in graph)
    if not has_import:
        subject = _ontology_node(graph)
        graph = graph.with_triples([Triple(subject, imports_pred, iri(tbox_iri))])
        log.added_imports.append(tbox_iri)
    return RepairOutcome(graph=graph, log=log)


def _ontology_node(graph: Graph) -> Term:
    rdf_type = iri(RDF_TYPE)
    declared = sorted(
        (t.subject for t in graph.by_predicate(rdf_type)
         if t.object == iri(_OWL_ONTOLOGY) and t.subject.is_iri),
        key=lambda n: n.value)
    if declared:
        return declared[0]
    if graph.base:
        return iri(graph.base)
    return iri("urn:x-repaired:ontology")


# ---------------------------------------------------------------------------
# Gold comparison
# ---------------------------------------------------------------------------

_VOCAB_NAMESPACES = tuple(WELL_KNOWN_PREFIXES.values())


def _is_local(term: Term) -> bool:
    if term.is_blank:
        return True
    if not term.is_iri:
        return False
    return not term.value.startswith(_VOCAB_NAMESPACES)


def _local_name(term: Term) -> str:
    if term.is_blank:
        return term.value
    value = term.value
    for sep in ("#", "/", ":"):
        idx = value.rfind(sep)
        if idx != -1:
            return value[idx + 1:]
    return value


def align_nodes(generated: Graph, gold: Graph) -> dict[Term, Term]:
    """Deterministic greedy alignment of generated individuals to gold
    individuals by exact IRI, import/ontology role, type overlap and
    local-name similarity."""
    gen_nodes = sorted((n for n in generated.nodes() if _is_local(n)), key=repr)
    gold_nodes = sorted((n for n in gold.nodes() if _is_local(n)), key=repr)
    gold_set = set(gold_nodes)
    mapping: dict[Term, Term] = {}
    taken: set[Term] = set()

    # exact IRI matches first
    for node in gen_nodes:
        if node in gold_set:
            mapping[node] = node
            taken.add(node)

    # the ontology header nodes play one fixed role
    imports_pred = iri(_OWL_IMPORTS)
    gold_onto = sorted(
        (t.subject for t in gold.by_predicate(imports_pred)), key=repr)
    if gold_onto:
        gen_onto = sorted(
            (t.subject for t in generated.by_predicate(imports_pred)), key=repr)
        for node in gen_onto:
            if node not in mapping and gold_onto[0] not in taken:
                mapping[node] = gold_onto[0]
                taken.add(gold_onto[0])

    def score(a: Term, b: Term) -> float:
        types_a = generated.types_of(a)
        types_b = gold.types_of(b)
        union = types_a | types_b
        jaccard = len(types_a & types_b) / len(union) if union else 0.0
        name_sim = SequenceMatcher(
            None, _local_name(a).lower(), _local_name(b).lower()).ratio()
        return jaccard + name_sim

    remaining_gen = [n for n in gen_nodes if n not in mapping]
    remaining_gold = [n for n in gold_nodes if n not in taken]
    pairs = sorted(
        ((score(a, b), repr(a), repr(b), a, b)
         for a in remaining_gen for b in remaining_gold),
        key=lambda x: (-x[0], x[1], x[2]))
    for s, _, _, a, b in pairs:
        if s < 0.35:
            break
        if a in mapping or b in taken:
            continue
        mapping[a] = b
        taken.add(b)
    return mapping


def missing_gold_triples(generated: Graph, gold: Graph) -> list[Triple]:
    """Gold triples absent from the generated graph under node alignment."""
    mapping = align_nodes(generated, gold)

    def sub(term: Term) -> Term:
        return mapping.get(term, term)

    mapped = {Triple(sub(t.subject), t.predicate, sub(t.object)) for t in generated}
    return sorted((t for t in gold if t not in mapped), key=repr)


# ---------------------------------------------------------------------------
# Experiment execution
# ---------------------------------------------------------------------------

@dataclass
class StudyConfig:
    corpus_root: Path
    fixtures_dir: Path
    out_dir: Path
    mode: str = REPLAY
    providers: list[ProviderProfile] = field(default_factory=list)
    techniques: list[str] = field(default_factory=lambda: list(TECHNIQUE_SHORT))
    capability_ids: list[str] = field(default_factory=list)
    parallelism: int = 4
    run_id: Optional[str] = None
    max_output_tokens: int = 4096

    @classmethod
    def from_file(cls, path: Path | str) -> "StudyConfig":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent
        providers = []
        for entry in data.get("providers", []):
            if isinstance(entry, str):
                providers.append(DEFAULT_PROFILES[entry])
            else:
                providers.append(ProviderProfile.from_dict(entry))
        return cls(
            corpus_root=base / data.get("corpus", "corpus"),
            fixtures_dir=base / data.get("fixtures", "fixtures"),
            out_dir=base / data.get("out", "out"),
            mode=data.get("mode", "replay").upper(),
            providers=providers,
            techniques=data.get("techniques", list(TECHNIQUE_SHORT)),
            capability_ids=data.get("capabilities", []),
            parallelism=int(data.get("parallelism", 4)),
            run_id=data.get("run_id"),
            max_output_tokens=int(data.get("max_output_tokens", 4096)),
        )


def _write(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return str(path)


def evaluate_graph(graph: Graph, gold: Graph, corpus: Corpus,
                   repair_log: Optional[RepairLog] = None):
    """Shared validation stack: inference, contradictions, shapes, gold diff."""
    log = repair_log or RepairLog()
    inferred = infer_types(graph, corpus.tbox_index)
    contradictions = check_consistency(graph, corpus.tbox_index)
    violations = validate(inferred, corpus.shapes)
    tally = classify(violations)
    missing = missing_gold_triples(graph, gold)
    counts = ErrorCounts(
        syntax=log.syntax_count,
        contradictions=len(contradictions),
        hallucinated=tally.hallucinated,
        incomplete=max(tally.incomplete, len(missing)) + log.incompleteness_count,
        triples=len(gold),
    )
    return counts, violations, contradictions, missing


def run_experiment(
    cap: CapabilitySpec,
    technique: str,
    provider: ProviderProfile,
    corpus: Corpus,
    mode: str = REPLAY,
    fixtures_dir: Optional[Path] = None,
    run_dir: Optional[Path] = None,
    max_output_tokens: int = 4096,
) -> ExperimentRecord:
    record = ExperimentRecord(
        capability_id=cap.id, technique=technique, provider=provider.name)
    template = corpus.templates[technique]
    examples = [corpus.examples[eid] for eid in template.example_ids]
    prompt = render_prompt(
        template, corpus.tbox_text, examples, cap.description, capability_id=cap.id)
    record.prompt = prompt
    if run_dir:
        record.run_dir = run_dir
        record.artifacts["prompt"] = _write(run_dir / "prompt.txt", prompt.rendered_text)

    request = CompletionRequest(
        provider=provider, prompt=prompt.rendered_text, temperature=0.0,
        max_output_tokens=max_output_tokens, experiment_key=record.key)
    decision = guard_context(request)
    if not decision.accepted:
        record.failure = f"context guard: {decision.reason}"
        return record

    try:
        result = complete(request, mode=mode, fixtures_dir=fixtures_dir)
    except GatewayError as exc:
        record.failure = f"completion: {exc}"
        return record
    record.completion = result
    if run_dir:
        record.artifacts["response"] = _write(run_dir / "response.txt", result.text)

    try:
        extraction = extract_ontology(result.text)
    except ExtractionError as exc:
        record.failure = f"extraction: {exc}"
        return record
    record.extraction = extraction
    if run_dir:
        record.artifacts["extracted"] = _write(
            run_dir / "extracted.ttl", extraction.ontology_text)

    try:
        outcome = repair(extraction.ontology_text, corpus.tbox_iri)
    except RepairError as exc:
        record.repair_log = exc.log
        issues = "; ".join(f"{i.category}@{i.line}:{i.column}" for i in exc.issues[:5])
        record.failure = f"repair: unrecoverable syntax issues ({issues})"
        return record
    record.repair_log = outcome.log

    gold = corpus.gold_graph(cap.id)
    counts, violations, contradictions, missing = evaluate_graph(
        outcome.graph, gold, corpus, outcome.log)
    record.violations = violations
    record.contradictions = contradictions
    record.counts = counts
    record.scores = relative_scores(counts)

    if run_dir:
        record.artifacts["repaired"] = _write(
            run_dir / "repaired.ttl", serialize_turtle(outcome.graph))
        record.artifacts["violations"] = _write(
            run_dir / "violations.json",
            json.dumps([v.to_dict() for v in violations], indent=2) + "\n")
        record.artifacts["contradictions"] = _write(
            run_dir / "contradictions.json",
            json.dumps([c.to_dict() for c in contradictions], indent=2) + "\n")
        record.artifacts["counts"] = _write(
            run_dir / "counts.json", json.dumps({
                "experiment": record.key,
                "counts": counts.to_dict(),
                "scores": record.scores.to_dict(),
                "repair": outcome.log.to_dict(),
                "missing_gold_triples": [repr(t) for t in missing],
            }, indent=2, sort_keys=True) + "\n")
    return record


def run_study(config: StudyConfig, corpus: Optional[Corpus] = None) -> list[ExperimentRecord]:
    """The full providers x capabilities x techniques cross product.

    Experiments run on a bounded worker pool; individual failures produce
    failed records without aborting the study. Output order is deterministic:
    provider-major, then capability, then technique."""
    corpus = corpus or load_corpus(config.corpus_root)
    cap_ids = config.capability_ids or sorted(
        cid for cid in corpus.capabilities if corpus.capabilities[cid].is_study_target)
    run_id = config.run_id or time.strftime("%Y%m%dT%H%M%S")
    jobs = []
    for provider in config.providers:
        for cap_id in cap_ids:
            for technique in config.techniques:
                cap = corpus.capability(cap_id)
                run_dir = (config.out_dir / "runs" / run_id / provider.name
                           / f"{cap_id}-{TECHNIQUE_SHORT[technique]}")
                jobs.append((provider, cap, technique, run_dir))

    def execute(job) -> ExperimentRecord:
        provider, cap, technique, run_dir = job
        try:
            return run_experiment(
                cap, technique, provider, corpus, mode=config.mode,
                fixtures_dir=config.fixtures_dir, run_dir=run_dir,
                max_output_tokens=config.max_output_tokens)
        except Exception:
            record = ExperimentRecord(
                capability_id=cap.id, technique=technique, provider=provider.name)
            record.failure = f"internal: {traceback.format_exc(limit=3)}"
            return record

    with ThreadPoolExecutor(max_workers=max(1, config.parallelism)) as pool:
        records = list(pool.map(execute, jobs))

    order = {t: i for i, t in enumerate(TECHNIQUE_SHORT)}
    records.sort(key=lambda r: (r.provider, r.capability_id, order.get(r.technique, 99)))
    return records
