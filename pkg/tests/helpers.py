"""Shared test utilities: random graph generation and a naive isomorphism oracle."""
from __future__ import annotations

import itertools
import random

from capgen.rdf import (
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_INTEGER,
    Graph,
    Term,
    Triple,
    bnode,
    iri,
    literal,
)

_NS = "http://example.org/t#"


def random_graph(rng: random.Random, max_triples: int = 50, max_blanks: int = 5) -> Graph:
    """A small random graph mixing IRIs, blank nodes, and literal flavors."""
    n_blanks = rng.randint(0, max_blanks)
    blanks = [bnode(f"n{i}") for i in range(n_blanks)]
    iris = [iri(_NS + name) for name in ("a", "b", "c", "d", "e", "f")]
    preds = [iri(_NS + name) for name in ("p", "q", "r", "s")]

    def subject() -> Term:
        pool = iris + blanks
        return rng.choice(pool)

    def obj() -> Term:
        roll = rng.random()
        if roll < 0.4:
            return rng.choice(iris + blanks)
        if roll < 0.55:
            return literal(f"text {rng.randint(0, 99)}")
        if roll < 0.7:
            return literal(str(rng.randint(-50, 50)), datatype=XSD_INTEGER)
        if roll < 0.8:
            return literal(f"{rng.randint(0, 9)}.{rng.randint(0, 99):02d}", datatype=XSD_DECIMAL)
        if roll < 0.9:
            return literal(rng.choice(["true", "false"]), datatype=XSD_BOOLEAN)
        return literal("hallo", language="de")

    triples = {
        Triple(subject(), rng.choice(preds), obj())
        for _ in range(rng.randint(0, max_triples))
    }
    # make sure every declared blank actually occurs, so counts are meaningful
    for b in blanks:
        triples.add(Triple(b, preds[0], rng.choice(iris)))
    return Graph(triples, {"t": _NS})


def naive_isomorphic(a: Graph, b: Graph) -> bool:
    """Brute force over every blank-node bijection; only viable for few blanks."""
    if len(a) != len(b):
        return False
    blanks_a = sorted(a.blank_nodes(), key=lambda t: t.value)
    blanks_b = sorted(b.blank_nodes(), key=lambda t: t.value)
    if len(blanks_a) != len(blanks_b):
        return False
    triples_b = set(b.triples)
    for perm in itertools.permutations(blanks_b):
        mapping = dict(zip(blanks_a, perm))

        def sub(term: Term) -> Term:
            return mapping.get(term, term)

        mapped = {Triple(sub(t.subject), t.predicate, sub(t.object)) for t in a}
        if mapped == triples_b:
            return True
    return False


def rename_blanks(g: Graph, mapping: dict[str, str]) -> Graph:
    def sub(term: Term) -> Term:
        if term.is_blank and term.value in mapping:
            return bnode(mapping[term.value])
        return term

    return Graph(
        (Triple(sub(t.subject), t.predicate, sub(t.object)) for t in g),
        g.prefixes,
        g.base,
    )
