"""Core RDF data model: terms, triples, graphs, syntax issues."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional

# Term kinds
IRI = "iri"
BLANK = "blank"
LITERAL = "literal"

# Well-known namespaces
RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
SH_NS = "http://www.w3.org/ns/shacl#"

RDF_TYPE = RDF_NS + "type"
RDF_FIRST = RDF_NS + "first"
RDF_REST = RDF_NS + "rest"
RDF_NIL = RDF_NS + "nil"

XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_DECIMAL = XSD_NS + "decimal"
XSD_DOUBLE = XSD_NS + "double"
XSD_BOOLEAN = XSD_NS + "boolean"


@dataclass(frozen=True, order=True)
class Term:
    """An RDF term. `value` is the absolute IRI, blank node label, or lexical form.

    A literal carries at most one of datatype / language; plain literals
    keep datatype None (treated as xsd:string where a datatype is needed).
    """

    kind: str
    value: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in (IRI, BLANK, LITERAL):
            raise ValueError(f"unknown term kind: {self.kind!r}")
        if self.kind != LITERAL and (self.datatype or self.language):
            raise ValueError("datatype/language only allowed on literals")
        if self.datatype and self.language:
            raise ValueError("a literal has at most one of datatype, language")

    @property
    def is_iri(self) -> bool:
        return self.kind == IRI

    @property
    def is_blank(self) -> bool:
        return self.kind == BLANK

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL

    def __repr__(self) -> str:  # compact, for test failure output
        if self.kind == IRI:
            return f"<{self.value}>"
        if self.kind == BLANK:
            return f"_:{self.value}"
        suffix = ""
        if self.datatype:
            suffix = f"^^<{self.datatype}>"
        elif self.language:
            suffix = f"@{self.language}"
        return f'"{self.value}"{suffix}'


def iri(value: str) -> Term:
    return Term(IRI, value)


def bnode(label: str) -> Term:
    return Term(BLANK, label)


def literal(lexical: str, datatype: Optional[str] = None, language: Optional[str] = None) -> Term:
    return Term(LITERAL, lexical, datatype=datatype, language=language)


@dataclass(frozen=True, order=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self) -> None:
        if self.subject.is_literal:
            raise ValueError("triple subject must be an IRI or blank node")
        if not self.predicate.is_iri:
            raise ValueError("triple predicate must be an IRI")

    def __repr__(self) -> str:
        return f"({self.subject!r} {self.predicate!r} {self.object!r})"


class Graph:
    """An immutable set of triples with a prefix map and optional base IRI."""

    __slots__ = ("_triples", "_prefixes", "_base", "_spo")

    def __init__(
        self,
        triples: Iterable[Triple] = (),
        prefixes: Optional[Mapping[str, str]] = None,
        base: Optional[str] = None,
    ) -> None:
        self._triples = frozenset(triples)
        self._prefixes = dict(prefixes or {})
        self._base = base
        index: dict[Term, list[Triple]] = {}
        for t in self._triples:
            index.setdefault(t.subject, []).append(t)
        self._spo = index

    @property
    def prefixes(self) -> dict[str, str]:
        return dict(self._prefixes)

    @property
    def base(self) -> Optional[str]:
        return self._base

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self._triples == other._triples

    def __hash__(self) -> int:
        return hash(self._triples)

    def subjects(self) -> set[Term]:
        return {t.subject for t in self._triples}

    def nodes(self) -> set[Term]:
        out: set[Term] = set()
        for t in self._triples:
            out.add(t.subject)
            if not t.object.is_literal:
                out.add(t.object)
        return out

    def triples_for_subject(self, subject: Term) -> list[Triple]:
        return list(self._spo.get(subject, ()))

    def objects(self, subject: Term, predicate: Term) -> list[Term]:
        return [t.object for t in self._spo.get(subject, ()) if t.predicate == predicate]

    def by_predicate(self, predicate: Term) -> list[Triple]:
        return [t for t in self._triples if t.predicate == predicate]

    def types_of(self, node: Term) -> set[str]:
        rdf_type = Term(IRI, RDF_TYPE)
        return {o.value for o in self.objects(node, rdf_type) if o.is_iri}

    def with_triples(self, extra: Iterable[Triple]) -> "Graph":
        return Graph(self._triples | set(extra), self._prefixes, self._base)

    def with_prefixes(self, prefixes: Mapping[str, str]) -> "Graph":
        merged = dict(self._prefixes)
        merged.update(prefixes)
        return Graph(self._triples, merged, self._base)

    def blank_nodes(self) -> set[Term]:
        return {n for n in self.nodes() if n.is_blank}

    def __repr__(self) -> str:
        return f"Graph({len(self._triples)} triples, {len(self._prefixes)} prefixes)"


def count_triples(g: Graph) -> int:
    """Triple-set cardinality; the denominator of every relative error score."""
    return len(g)


# Syntax issue categories
MISSING_PREFIX = "MISSING_PREFIX"
MALFORMED_STATEMENT = "MALFORMED_STATEMENT"
BAD_LITERAL = "BAD_LITERAL"
BAD_IRI = "BAD_IRI"
OTHER = "OTHER"

ISSUE_CATEGORIES = (MISSING_PREFIX, MALFORMED_STATEMENT, BAD_LITERAL, BAD_IRI, OTHER)


@dataclass(frozen=True)
class SyntaxIssue:
    """One localized syntax problem; each issue counts once toward the S tally."""

    category: str
    line: int
    column: int
    message: str
    token: str = ""

    def __post_init__(self) -> None:
        if self.category not in ISSUE_CATEGORIES:
            raise ValueError(f"unknown issue category: {self.category!r}")
        if self.line < 1 or self.column < 1:
            raise ValueError("line and column are 1-based")

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "line": self.line,
            "column": self.column,
            "message": self.message,
            "token": self.token,
        }
