from .terms import (
    BAD_IRI,
    BAD_LITERAL,
    BLANK,
    IRI,
    LITERAL,
    MALFORMED_STATEMENT,
    MISSING_PREFIX,
    OTHER,
    OWL_NS,
    RDF_NS,
    RDF_TYPE,
    RDFS_NS,
    SH_NS,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_NS,
    XSD_STRING,
    Graph,
    SyntaxIssue,
    Term,
    Triple,
    bnode,
    count_triples,
    iri,
    literal,
)
from .turtle import TurtleSyntaxError, parse_turtle, serialize_turtle, try_parse_turtle
from .isomorphism import IsomorphismBudgetError, graph_isomorphic

__all__ = [
    "BAD_IRI", "BAD_LITERAL", "BLANK", "IRI", "LITERAL",
    "MALFORMED_STATEMENT", "MISSING_PREFIX", "OTHER",
    "OWL_NS", "RDF_NS", "RDF_TYPE", "RDFS_NS", "SH_NS",
    "XSD_BOOLEAN", "XSD_DECIMAL", "XSD_DOUBLE", "XSD_INTEGER", "XSD_NS", "XSD_STRING",
    "Graph", "SyntaxIssue", "Term", "Triple",
    "bnode", "count_triples", "iri", "literal",
    "TurtleSyntaxError", "parse_turtle", "serialize_turtle", "try_parse_turtle",
    "IsomorphismBudgetError", "graph_isomorphic",
]
