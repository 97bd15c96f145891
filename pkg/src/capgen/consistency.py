"""Lightweight contradiction detection for generated facts against the vocabulary.

Deliberately not a full OWL reasoner: it covers class disjointness (through
the subclass hierarchy), domain/range typing, datatype ranges and functional
properties. Those constructs account for the contradictions this harness
needs to count; everything else in a TBox is indexed as ignored and reported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .rdf.terms import (
    OWL_NS,
    RDF_TYPE,
    RDFS_NS,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_NS,
    Graph,
    Term,
    Triple,
    iri,
)

_RDFS_SUBCLASS = RDFS_NS + "subClassOf"
_RDFS_DOMAIN = RDFS_NS + "domain"
_RDFS_RANGE = RDFS_NS + "range"
_OWL_DISJOINT = OWL_NS + "disjointWith"
_OWL_FUNCTIONAL = OWL_NS + "FunctionalProperty"

# TBox predicates the index consumes; everything else is reported as ignored
_INDEXED_PREDICATES = {
    RDF_TYPE, _RDFS_SUBCLASS, _RDFS_DOMAIN, _RDFS_RANGE, _OWL_DISJOINT,
    RDFS_NS + "label", RDFS_NS + "comment", RDFS_NS + "seeAlso",
    OWL_NS + "versionInfo", OWL_NS + "imports",
}

DISJOINT_TYPES = "DISJOINT_TYPES"
RANGE_CLASH = "RANGE_CLASH"
DATATYPE_CLASH = "DATATYPE_CLASH"
FUNCTIONAL_CLASH = "FUNCTIONAL_CLASH"


@dataclass
class TBoxIndex:
    subclass_closure: dict[str, set[str]]
    disjoint_pairs: set[frozenset[str]]
    domain: dict[str, set[str]]
    range: dict[str, set[str]]
    functional_properties: set[str]
    ignored: list[str] = field(default_factory=list)

    def superclasses(self, cls: str) -> set[str]:
        return self.subclass_closure.get(cls, {cls})

    def are_disjoint(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.disjoint_pairs


@dataclass(frozen=True)
class Contradiction:
    kind: str
    witness_triples: tuple[Triple, ...]
    explanation: str

    def key(self) -> tuple:
        return (self.kind, tuple(sorted(repr(t) for t in self.witness_triples)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "witness_triples": [repr(t) for t in self.witness_triples],
            "explanation": self.explanation,
        }


def index_tbox(tbox: Graph) -> TBoxIndex:
    """Compute the reflexive-transitive subclass closure, the downward-closed
    disjointness relation, domain/range maps and the functional property set."""
    direct_supers: dict[str, set[str]] = {}
    classes: set[str] = set()
    disjoint_direct: set[tuple[str, str]] = set()
    domain: dict[str, set[str]] = {}
    range_: dict[str, set[str]] = {}
    functional: set[str] = set()
    ignored: list[str] = []

    for t in tbox:
        p = t.predicate.value
        if p == _RDFS_SUBCLASS and t.subject.is_iri and t.object.is_iri:
            direct_supers.setdefault(t.subject.value, set()).add(t.object.value)
            classes.update((t.subject.value, t.object.value))
        elif p == _OWL_DISJOINT and t.subject.is_iri and t.object.is_iri:
            disjoint_direct.add((t.subject.value, t.object.value))
            classes.update((t.subject.value, t.object.value))
        elif p == _RDFS_DOMAIN and t.object.is_iri:
            domain.setdefault(t.subject.value, set()).add(t.object.value)
            classes.add(t.object.value)
        elif p == _RDFS_RANGE and t.object.is_iri:
            range_.setdefault(t.subject.value, set()).add(t.object.value)
            if not t.object.value.startswith(XSD_NS):
                classes.add(t.object.value)
        elif p == RDF_TYPE and t.object.value == _OWL_FUNCTIONAL:
            functional.add(t.subject.value)
        elif p == RDF_TYPE and t.object.value.startswith(OWL_NS):
            continue  # class/property declarations carry no inference weight here
        elif p not in _INDEXED_PREDICATES:
            ignored.append(p)

    # reflexive-transitive closure; cycles are tolerated and simply merge
    closure: dict[str, set[str]] = {c: {c} for c in classes}
    for c in direct_supers:
        closure.setdefault(c, {c})
    changed = True
    while changed:
        changed = False
        for cls, supers in closure.items():
            additions: set[str] = set()
            for s in list(supers):
                additions.update(direct_supers.get(s, ()))
            if not additions.issubset(supers):
                supers.update(additions)
                changed = True

    # disjointness: symmetric, then closed downward over subclasses
    subclasses: dict[str, set[str]] = {}
    for cls, supers in closure.items():
        for s in supers:
            subclasses.setdefault(s, set()).add(cls)
    disjoint: set[frozenset[str]] = set()
    for a, b in disjoint_direct:
        for sa in subclasses.get(a, {a}):
            for sb in subclasses.get(b, {b}):
                if sa != sb:
                    disjoint.add(frozenset((sa, sb)))

    return TBoxIndex(
        subclass_closure=closure,
        disjoint_pairs=disjoint,
        domain=domain,
        range=range_,
        functional_properties=functional,
        ignored=sorted(set(ignored)),
    )


def _type_provenance(abox: Graph, idx: TBoxIndex) -> dict[Term, dict[str, Triple]]:
    """Fixpoint typing: node -> {class: one asserted triple justifying it}."""
    prov: dict[Term, dict[str, Triple]] = {}

    def add(node: Term, cls: str, witness: Triple) -> None:
        node_types = prov.setdefault(node, {})
        for sup in idx.superclasses(cls):
            node_types.setdefault(sup, witness)

    rdf_type = RDF_TYPE
    for t in sorted(abox, key=repr):
        if t.predicate.value == rdf_type and t.object.is_iri:
            add(t.subject, t.object.value, t)
        else:
            for cls in idx.domain.get(t.predicate.value, ()):
                add(t.subject, cls, t)
            if not t.object.is_literal:
                for cls in idx.range.get(t.predicate.value, ()):
                    if not cls.startswith(XSD_NS):
                        add(t.object, cls, t)
    return prov


def infer_types(abox: Graph, idx: TBoxIndex) -> Graph:
    """Return abox plus rdf:type triples derived from domain/range declarations
    and the subclass closure. Adds nothing else; idempotent."""
    prov = _type_provenance(abox, idx)
    rdf_type = iri(RDF_TYPE)
    extra = [
        Triple(node, rdf_type, iri(cls))
        for node, types in prov.items()
        for cls in types
    ]
    return abox.with_triples(extra)


_NUMERIC = {XSD_INTEGER, XSD_DECIMAL, XSD_DOUBLE, XSD_NS + "float"}


def _canonical_literal(term: Term) -> tuple:
    """Datatype-aware normalization so '1' vs '01' vs '1.0' do not clash."""
    dt = term.datatype or ""
    if dt in _NUMERIC:
        try:
            return ("num", Fraction(term.value))
        except (ValueError, ZeroDivisionError):
            return ("lex", dt, term.value)
    if dt == XSD_BOOLEAN:
        return ("bool", term.value in ("true", "1"))
    return ("lex", dt, term.language or "", term.value)


def _distinguishable(a: Term, b: Term) -> bool:
    if a == b:
        return False
    if a.is_literal and b.is_literal:
        return _canonical_literal(a) != _canonical_literal(b)
    if a.is_blank or b.is_blank:
        return False  # blank nodes are never provably distinct
    return a != b


def check_consistency(abox: Graph, idx: TBoxIndex) -> list[Contradiction]:
    """One contradiction per minimal witness set, deduplicated and ordered."""
    prov = _type_provenance(abox, idx)
    found: dict[tuple, Contradiction] = {}

    def record(c: Contradiction) -> None:
        found.setdefault(c.key(), c)

    # disjoint types (covers asserted, domain-inferred and range-inferred types)
    for node, types in prov.items():
        type_list = sorted(types)
        for i, a in enumerate(type_list):
            for b in type_list[i + 1:]:
                if not idx.are_disjoint(a, b):
                    continue
                wa, wb = types[a], types[b]
                if wa == wb:
                    continue  # a single assertion cannot witness a clash
                witnesses = tuple(sorted({wa, wb}, key=repr))
                kinds = {RANGE_CLASH if w.predicate.value != RDF_TYPE and w.object == node
                         else DISJOINT_TYPES for w in witnesses}
                kind = RANGE_CLASH if RANGE_CLASH in kinds else DISJOINT_TYPES
                record(Contradiction(
                    kind=kind,
                    witness_triples=witnesses,
                    explanation=f"node {node!r} is typed with disjoint classes {a} and {b}",
                ))

    for t in sorted(abox, key=repr):
        p = t.predicate.value
        # datatype ranges
        datatype_ranges = {r for r in idx.range.get(p, ()) if r.startswith(XSD_NS)}
        if datatype_ranges and t.object.is_literal:
            expected = sorted(datatype_ranges)[0]
            actual = t.object.datatype or XSD_NS + "string"
            if actual != expected and not (
                expected in _NUMERIC and actual in _NUMERIC
            ):
                record(Contradiction(
                    kind=DATATYPE_CLASH,
                    witness_triples=(t,),
                    explanation=(
                        f"literal {t.object!r} has datatype {actual}, "
                        f"but {p} ranges over {expected}"),
                ))

    # functional properties
    by_subject_pred: dict[tuple[Term, str], list[Triple]] = {}
    for t in abox:
        if t.predicate.value in idx.functional_properties:
            by_subject_pred.setdefault((t.subject, t.predicate.value), []).append(t)
    for (subject, p), triples in by_subject_pred.items():
        triples = sorted(triples, key=repr)
        for i, t1 in enumerate(triples):
            for t2 in triples[i + 1:]:
                if _distinguishable(t1.object, t2.object):
                    record(Contradiction(
                        kind=FUNCTIONAL_CLASH,
                        witness_triples=(t1, t2),
                        explanation=(
                            f"functional property {p} maps {subject!r} to two "
                            f"distinguishable values"),
                    ))

    return sorted(found.values(), key=lambda c: c.key())
