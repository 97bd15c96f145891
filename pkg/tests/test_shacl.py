import pytest

from capgen.consistency import infer_types
from capgen.rdf import Graph, Triple, iri, parse_turtle
from capgen.shacl import (
    CLOSED,
    MIN_COUNT,
    ShapeLoadError,
    Violation,
    classify,
    load_shapes,
    validate,
)

CASK = "https://w3id.org/cask/ontology#"
SH_DOC = """
@prefix sh: <http://www.w3.org/ns/shacl#> .
@prefix ex: <http://example.org/shapes#> .
@prefix cask: <https://w3id.org/cask/ontology#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .

ex:CapShape a sh:NodeShape ;
    sh:targetClass cask:Capability ;
    sh:closed true ;
    sh:ignoredProperties ( rdf:type ) ;
    sh:property [ sh:path cask:hasInput ; sh:minCount 1 ] ;
    sh:property [ sh:path cask:hasOutput ; sh:minCount 1 ] .
"""


def test_load_empty_graph():
    assert len(load_shapes(Graph())) == 0


def test_load_closed_shape_with_two_constraints():
    shapes = load_shapes(parse_turtle(SH_DOC))
    assert len(shapes) == 1
    shape = shapes.shapes[0]
    assert shape.closed
    assert len(shape.constraints) == 2
    assert CASK + "hasInput" in shape.allowed_predicates
    assert "http://www.w3.org/1999/02/22-rdf-syntax-ns#type" in shape.allowed_predicates


def test_corpus_shapes_count(corpus):
    assert len(corpus.shapes) == 6


def test_property_shape_without_path_rejected():
    doc = """
    @prefix sh: <http://www.w3.org/ns/shacl#> .
    @prefix ex: <http://example.org/s#> .
    ex:Bad a sh:NodeShape ; sh:targetClass ex:T ; sh:property [ sh:minCount 1 ] .
    """
    with pytest.raises(ShapeLoadError):
        load_shapes(parse_turtle(doc))


def test_unsupported_constructs_warned_not_dropped():
    doc = """
    @prefix sh: <http://www.w3.org/ns/shacl#> .
    @prefix ex: <http://example.org/s#> .
    ex:S a sh:NodeShape ; sh:targetClass ex:T ; sh:sparql ex:Q ;
        sh:property [ sh:path ex:p ; sh:pattern "x.*" ] .
    """
    shapes = load_shapes(parse_turtle(doc))
    assert len(shapes) == 1
    assert any("sh:sparql" in w or "sparql" in w for w in shapes.warnings)
    assert any("pattern" in w for w in shapes.warnings)


def _validated_gold(corpus, cap_id):
    gold = corpus.gold_graph(cap_id)
    return validate(infer_types(gold, corpus.tbox_index), corpus.shapes)


def test_gold_conforms(corpus):
    assert _validated_gold(corpus, "C1") == []


def test_injected_closed_property_yields_one_violation(corpus):
    gold = corpus.gold_graph("C1")
    cap = iri("https://w3id.org/cask/examples/parity#ParityCheck")
    extra = Triple(cap, iri(CASK + "providedBy"), iri("http://example.org/x"))
    data = infer_types(gold.with_triples([extra]), corpus.tbox_index)
    violations = validate(data, corpus.shapes)
    assert [v.kind for v in violations] == [CLOSED]
    assert violations[0].path == CASK + "providedBy"


def test_deleted_output_yields_min_count(corpus):
    gold = corpus.gold_graph("C1")
    kept = [t for t in gold if t.predicate.value != CASK + "hasOutput"]
    data = infer_types(Graph(kept, gold.prefixes), corpus.tbox_index)
    violations = validate(data, corpus.shapes)
    assert any(v.kind == MIN_COUNT and v.path == CASK + "hasOutput" for v in violations)


def test_closed_monotonicity(corpus):
    # each extra out-of-shape triple adds exactly one CLOSED violation
    gold = corpus.gold_graph("C2")
    cap = iri("https://w3id.org/cask/examples/addition#Addition")
    base = validate(infer_types(gold, corpus.tbox_index), corpus.shapes)
    graph = gold
    for i in range(3):
        graph = graph.with_triples(
            [Triple(cap, iri(CASK + "providedBy"), iri(f"http://example.org/r{i}"))])
        violations = validate(infer_types(graph, corpus.tbox_index), corpus.shapes)
        closed = [v for v in violations if v.kind == CLOSED]
        assert len(closed) == len(base) + i + 1


def test_validation_idempotent_and_ordered(corpus):
    gold = corpus.gold_graph("C3")
    cap = iri("https://w3id.org/cask/examples/division#Division")
    graph = gold.with_triples([
        Triple(cap, iri(CASK + "providedBy"), iri("http://example.org/b")),
        Triple(cap, iri(CASK + "isRealizedBy"), iri("http://example.org/a")),
    ])
    data = infer_types(graph, corpus.tbox_index)
    first = validate(data, corpus.shapes)
    second = validate(data, corpus.shapes)
    assert first == second
    keys = [(repr(v.focus_node), v.shape_id, v.kind, v.path or "") for v in first]
    assert keys == sorted(keys)


def test_classify_definitions():
    assert classify([]) == classify([])
    assert classify([]).hallucinated == 0 and classify([]).incomplete == 0
    v_closed = Violation(iri("http://e/x"), "s", CLOSED, None, None, "m")
    v_min = Violation(iri("http://e/x"), "s", MIN_COUNT, None, None, "m")
    tally = classify([v_closed])
    assert (tally.hallucinated, tally.incomplete) == (1, 0)
    tally = classify([v_closed, v_min, v_min])
    assert (tally.hallucinated, tally.incomplete) == (1, 2)
