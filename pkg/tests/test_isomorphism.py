import random

import pytest

from capgen.rdf import (
    Graph,
    IsomorphismBudgetError,
    Triple,
    bnode,
    graph_isomorphic,
    iri,
)

from .helpers import naive_isomorphic, random_graph, rename_blanks

EX = "http://example.org/t#"


def test_identity():
    g = random_graph(random.Random(1))
    assert graph_isomorphic(g, g)


def test_one_triple_removed_not_isomorphic():
    rng = random.Random(2)
    g = random_graph(rng, max_triples=20)
    assert len(g) > 0
    smaller = Graph(list(g)[1:], g.prefixes)
    assert not graph_isomorphic(g, smaller)


def test_single_blank_rename():
    # oracle: brute-force over all blank-node bijections
    g = Graph([
        Triple(bnode("x"), iri(EX + "p"), iri(EX + "a")),
        Triple(iri(EX + "b"), iri(EX + "q"), bnode("x")),
    ])
    h = rename_blanks(g, {"x": "y"})
    assert naive_isomorphic(g, h)
    assert graph_isomorphic(g, h)


def test_blank_structure_mismatch():
    g = Graph([
        Triple(bnode("x"), iri(EX + "p"), iri(EX + "a")),
        Triple(bnode("y"), iri(EX + "q"), iri(EX + "a")),
    ])
    h = Graph([
        Triple(bnode("x"), iri(EX + "p"), iri(EX + "a")),
        Triple(bnode("x"), iri(EX + "q"), iri(EX + "a")),
    ])
    assert not naive_isomorphic(g, h)
    assert not graph_isomorphic(g, h)


def test_matches_naive_oracle_on_random_pairs():
    rng = random.Random(99)
    for trial in range(80):
        g = random_graph(rng, max_triples=14, max_blanks=4)
        if trial % 2 == 0:
            blanks = sorted(b.value for b in g.blank_nodes())
            shuffled = list(blanks)
            rng.shuffle(shuffled)
            h = rename_blanks(g, dict(zip(blanks, shuffled)))
        else:
            h = random_graph(rng, max_triples=14, max_blanks=4)
        assert graph_isomorphic(g, h) == naive_isomorphic(g, h)


def test_budget_exceeded_raises():
    # 9 interchangeable blanks need at least 9 assignments; budget 5 must trip
    triples = []
    n = 9
    for i in range(n):
        for j in range(n):
            if i != j:
                triples.append(Triple(bnode(f"a{i}"), iri(EX + "p"), bnode(f"a{j}")))
    g = Graph(triples)
    h = rename_blanks(g, {f"a{i}": f"b{(i + 1) % n}" for i in range(n)})
    with pytest.raises(IsomorphismBudgetError):
        graph_isomorphic(g, h, budget=5)
