"""Closed-shape validation over the SHACL subset used by the corpus shapes.

Supported constructs: sh:NodeShape with sh:targetClass, sh:closed,
sh:ignoredProperties, and property shapes carrying sh:path (single
predicate), sh:minCount, sh:maxCount, sh:class, sh:datatype, sh:nodeKind.
Anything else in a shapes graph is collected as a warning, never silently
dropped. Validation assumes the data graph already contains inferred
rdf:type assertions (see the consistency module).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .rdf.terms import (
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    SH_NS,
    XSD_STRING,
    Graph,
    Term,
    iri,
)

SH = SH_NS
_SH_NODE_SHAPE = SH + "NodeShape"
_SH_TARGET_CLASS = SH + "targetClass"
_SH_CLOSED = SH + "closed"
_SH_IGNORED = SH + "ignoredProperties"
_SH_PROPERTY = SH + "property"
_SH_PATH = SH + "path"
_SH_MIN_COUNT = SH + "minCount"
_SH_MAX_COUNT = SH + "maxCount"
_SH_CLASS = SH + "class"
_SH_DATATYPE = SH + "datatype"
_SH_NODE_KIND = SH + "nodeKind"

_NODE_KINDS = {SH + "IRI": "IRI", SH + "BlankNode": "BlankNode", SH + "Literal": "Literal"}

_KNOWN_SHAPE_PREDICATES = {
    RDF_TYPE, _SH_TARGET_CLASS, _SH_CLOSED, _SH_IGNORED, _SH_PROPERTY,
}
_KNOWN_PROPERTY_PREDICATES = {
    _SH_PATH, _SH_MIN_COUNT, _SH_MAX_COUNT, _SH_CLASS, _SH_DATATYPE, _SH_NODE_KIND,
}

# violation kinds
CLOSED = "CLOSED"
MIN_COUNT = "MIN_COUNT"
MAX_COUNT = "MAX_COUNT"
CLASS = "CLASS"
DATATYPE = "DATATYPE"
NODE_KIND = "NODE_KIND"

HALLUCINATION_KINDS = frozenset({CLOSED, MAX_COUNT, CLASS, DATATYPE, NODE_KIND})
INCOMPLETENESS_KINDS = frozenset({MIN_COUNT})


class ShapeLoadError(Exception):
    """A shapes graph contains a malformed shape (e.g. a property shape without sh:path)."""


@dataclass(frozen=True)
class PropertyConstraint:
    path: str
    min_count: Optional[int] = None
    max_count: Optional[int] = None
    class_constraint: Optional[str] = None
    datatype_constraint: Optional[str] = None
    node_kind: Optional[str] = None

    def __post_init__(self) -> None:
        if (
            self.min_count is not None
            and self.max_count is not None
            and self.min_count > self.max_count
        ):
            raise ValueError(f"minCount {self.min_count} > maxCount {self.max_count}")


@dataclass(frozen=True)
class NodeShape:
    id: str
    target_classes: frozenset[str]
    closed: bool
    ignored_properties: frozenset[str]
    constraints: tuple[PropertyConstraint, ...]

    @property
    def allowed_predicates(self) -> frozenset[str]:
        return (
            frozenset(c.path for c in self.constraints)
            | self.ignored_properties
            | {RDF_TYPE}
        )


@dataclass
class ShapeSet:
    shapes: list[NodeShape]
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [s.id for s in self.shapes]
        if len(ids) != len(set(ids)):
            raise ShapeLoadError("duplicate shape ids in shape set")

    def __len__(self) -> int:
        return len(self.shapes)


@dataclass(frozen=True)
class Violation:
    focus_node: Term
    shape_id: str
    kind: str
    path: Optional[str]
    value: Optional[Term]
    message: str

    def to_dict(self) -> dict:
        return {
            "focus_node": repr(self.focus_node),
            "shape_id": self.shape_id,
            "kind": self.kind,
            "path": self.path,
            "value": repr(self.value) if self.value is not None else None,
            "message": self.message,
        }


@dataclass(frozen=True)
class ViolationTally:
    hallucinated: int
    incomplete: int


def _read_list(g: Graph, head: Term) -> list[Term]:
    items: list[Term] = []
    first = iri(RDF_FIRST)
    rest = iri(RDF_REST)
    node = head
    seen = set()
    while node.value != RDF_NIL and node not in seen:
        seen.add(node)
        items.extend(g.objects(node, first))
        nxt = g.objects(node, rest)
        if not nxt:
            break
        node = nxt[0]
    return items


def _int_value(term: Term) -> int:
    return int(term.value)


def load_shapes(g: Graph) -> ShapeSet:
    """Build a ShapeSet from a parsed shapes graph.

    Node shapes without a sh:targetClass are skipped with a warning;
    unsupported SHACL constructs are reported as warnings.
    """
    warnings: list[str] = []
    shapes: list[NodeShape] = []
    rdf_type = iri(RDF_TYPE)
    shape_nodes = sorted(
        (t.subject for t in g.by_predicate(rdf_type) if t.object == iri(_SH_NODE_SHAPE)),
        key=lambda n: n.value,
    )
    for node in shape_nodes:
        targets = frozenset(o.value for o in g.objects(node, iri(_SH_TARGET_CLASS)) if o.is_iri)
        if not targets:
            warnings.append(f"shape {node.value} has no sh:targetClass; skipped")
            continue
        closed_vals = g.objects(node, iri(_SH_CLOSED))
        closed = any(v.is_literal and v.value == "true" for v in closed_vals)
        ignored: set[str] = set()
        for head in g.objects(node, iri(_SH_IGNORED)):
            ignored.update(t.value for t in _read_list(g, head) if t.is_iri)
        constraints: list[PropertyConstraint] = []
        for pshape in g.objects(node, iri(_SH_PROPERTY)):
            paths = g.objects(pshape, iri(_SH_PATH))
            if not paths:
                raise ShapeLoadError(f"property shape of {node.value} has no sh:path")
            path = paths[0]
            if not path.is_iri:
                raise ShapeLoadError(
                    f"property shape of {node.value} uses a non-predicate path; "
                    "only single-predicate paths are supported")
            min_counts = g.objects(pshape, iri(_SH_MIN_COUNT))
            max_counts = g.objects(pshape, iri(_SH_MAX_COUNT))
            classes = g.objects(pshape, iri(_SH_CLASS))
            datatypes = g.objects(pshape, iri(_SH_DATATYPE))
            node_kinds = g.objects(pshape, iri(_SH_NODE_KIND))
            kind = None
            if node_kinds:
                kind = _NODE_KINDS.get(node_kinds[0].value)
                if kind is None:
                    warnings.append(
                        f"shape {node.value}: unsupported sh:nodeKind {node_kinds[0].value}")
            constraints.append(PropertyConstraint(
                path=path.value,
                min_count=_int_value(min_counts[0]) if min_counts else None,
                max_count=_int_value(max_counts[0]) if max_counts else None,
                class_constraint=classes[0].value if classes else None,
                datatype_constraint=datatypes[0].value if datatypes else None,
                node_kind=kind,
            ))
            for t in g.triples_for_subject(pshape):
                if t.predicate.value not in _KNOWN_PROPERTY_PREDICATES:
                    warnings.append(
                        f"shape {node.value}: unsupported construct {t.predicate.value} ignored")
        for t in g.triples_for_subject(node):
            if t.predicate.value not in _KNOWN_SHAPE_PREDICATES:
                warnings.append(
                    f"shape {node.value}: unsupported construct {t.predicate.value} ignored")
        shapes.append(NodeShape(
            id=node.value,
            target_classes=targets,
            closed=closed,
            ignored_properties=frozenset(ignored),
            constraints=tuple(constraints),
        ))
    return ShapeSet(shapes=shapes, warnings=warnings)


def _effective_datatype(term: Term) -> str:
    if term.language:
        return "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString"
    return term.datatype or XSD_STRING


def _term_sort_key(term: Optional[Term]) -> tuple:
    if term is None:
        return ("", "", "")
    return (term.kind, term.value, term.datatype or term.language or "")


def validate(data: Graph, shapes: ShapeSet) -> list[Violation]:
    """Validate a data graph, returning a deterministic violation list."""
    violations: list[Violation] = []
    rdf_type = iri(RDF_TYPE)
    by_type: dict[str, list[Term]] = {}
    for t in data.by_predicate(rdf_type):
        if t.object.is_iri:
            by_type.setdefault(t.object.value, []).append(t.subject)

    for shape in shapes.shapes:
        focus_nodes = {n for c in shape.target_classes for n in by_type.get(c, ())}
        for focus in focus_nodes:
            statements = data.triples_for_subject(focus)
            for con in shape.constraints:
                values = [t.object for t in statements if t.predicate.value == con.path]
                if con.min_count is not None and len(values) < con.min_count:
                    violations.append(Violation(
                        focus, shape.id, MIN_COUNT, con.path, None,
                        f"expected at least {con.min_count} value(s) for {con.path}, "
                        f"found {len(values)}"))
                if con.max_count is not None and len(values) > con.max_count:
                    violations.append(Violation(
                        focus, shape.id, MAX_COUNT, con.path, None,
                        f"expected at most {con.max_count} value(s) for {con.path}, "
                        f"found {len(values)}"))
                for value in values:
                    if con.class_constraint is not None:
                        if value.is_literal or con.class_constraint not in data.types_of(value):
                            violations.append(Violation(
                                focus, shape.id, CLASS, con.path, value,
                                f"value is not an instance of {con.class_constraint}"))
                    if con.datatype_constraint is not None:
                        if not value.is_literal or _effective_datatype(value) != con.datatype_constraint:
                            violations.append(Violation(
                                focus, shape.id, DATATYPE, con.path, value,
                                f"value does not have datatype {con.datatype_constraint}"))
                    if con.node_kind is not None:
                        actual = ("Literal" if value.is_literal
                                  else "BlankNode" if value.is_blank else "IRI")
                        if actual != con.node_kind:
                            violations.append(Violation(
                                focus, shape.id, NODE_KIND, con.path, value,
                                f"value is a {actual}, expected {con.node_kind}"))
            if shape.closed:
                allowed = shape.allowed_predicates
                for t in statements:
                    if t.predicate.value not in allowed:
                        violations.append(Violation(
                            focus, shape.id, CLOSED, t.predicate.value, t.object,
                            f"predicate {t.predicate.value} is not allowed on a closed shape"))

    violations.sort(key=lambda v: (
        _term_sort_key(v.focus_node), v.shape_id, v.kind, v.path or "",
        _term_sort_key(v.value)))
    return violations


def classify(violations: list[Violation]) -> ViolationTally:
    """Split violations into hallucination evidence and incompleteness evidence."""
    hallucinated = sum(1 for v in violations if v.kind in HALLUCINATION_KINDS)
    incomplete = sum(1 for v in violations if v.kind in INCOMPLETENESS_KINDS)
    return ViolationTally(hallucinated=hallucinated, incomplete=incomplete)
