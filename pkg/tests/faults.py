"""Seeded fault injection over gold ontologies, with known expected counts.

Produces a perturbed response text from a gold graph:
  k1 removed prefix declarations  -> expected S = k1
  k2 disjoint-type injections     -> expected C = k2
  k3 closed-shape property breaches -> expected H = k3
  k4 deleted mandatory triples    -> expected I in [k4, k4 + alignment slack]
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from capgen.corpus import WELL_KNOWN_PREFIXES
from capgen.rdf.terms import RDF_TYPE, Graph, Triple, iri
from capgen.rdf.turtle import serialize_turtle

CASK = WELL_KNOWN_PREFIXES["cask"]
VDI = WELL_KNOWN_PREFIXES["vdi3682"]
OWL_IMPORTS = WELL_KNOWN_PREFIXES["owl"] + "imports"

# (asserted class -> injected class): exactly one disjoint pair per node,
# never a class that the validation shapes target
DISJOINT_INJECTIONS = [
    (CASK + "Capability", CASK + "Skill"),
    (VDI + "Product", VDI + "Information"),
    (VDI + "Information", VDI + "Product"),
    (CASK + "InstanceDescription", CASK + "UnboundParameter"),
    (CASK + "DataElement", CASK + "TypeDescription"),
    (CASK + "TypeDescription", CASK + "ValueStatement"),
    (CASK + "UnboundParameter", CASK + "TypeDescription"),
    (CASK + "Resource", CASK + "Skill"),
]
HALLUCINATION_PREDICATES = [CASK + "providedBy", CASK + "isRealizedBy"]

# predicates whose triples are safe deletion targets: each deletion removes
# exactly one gold triple without disturbing typing or shape targeting
MANDATORY_PREDICATES = {
    CASK + "hasInput", CASK + "hasOutput", CASK + "hasDataElement",
    CASK + "typeDescription", CASK + "instanceDescription",
    CASK + "expressionGoal", CASK + "shortName", CASK + "definition",
}


@dataclass
class FaultPlan:
    removed_prefixes: list[str]
    disjoint_nodes: list[str]
    extraneous: int
    deleted: list[Triple]

    @property
    def expected(self) -> tuple[int, int, int, int]:
        return (len(self.removed_prefixes), len(self.disjoint_nodes),
                self.extraneous, len(self.deleted))


def inject_faults(
    gold: Graph, rng: random.Random,
    k1: int, k2: int, k3: int, k4: int,
) -> tuple[str, FaultPlan]:
    """Apply the four fault families; k values are capped to what the gold
    can host (the plan reports what was actually injected)."""
    triples = set(gold.triples)

    pool = sorted(
        (t for t in triples if t.predicate.value in MANDATORY_PREDICATES),
        key=repr)
    deleted = rng.sample(pool, min(k4, len(pool)))
    triples.difference_update(deleted)

    graph = Graph(triples, gold.prefixes, gold.base)
    rdf_type = iri(RDF_TYPE)
    disjoint_nodes: list[str] = []
    used = set()
    candidates = []
    for existing, new_type in DISJOINT_INJECTIONS:
        for t in graph.by_predicate(rdf_type):
            if t.object.value == existing:
                candidates.append((t.subject, new_type))
    candidates.sort(key=lambda x: (repr(x[0]), x[1]))
    rng.shuffle(candidates)
    for node, new_type in candidates:
        if len(disjoint_nodes) >= k2:
            break
        if node in used:
            continue
        triples.add(Triple(node, rdf_type, iri(new_type)))
        used.add(node)
        disjoint_nodes.append(repr(node))

    caps = sorted(
        (t.subject for t in graph.by_predicate(rdf_type)
         if t.object.value == CASK + "Capability"), key=repr)
    local = gold.prefixes.get("", "urn:x-injected#")
    for idx in range(k3):
        pred = HALLUCINATION_PREDICATES[idx % len(HALLUCINATION_PREDICATES)]
        triples.add(Triple(caps[0], iri(pred), iri(f"{local}Injected_{idx}")))

    text = serialize_turtle(Graph(triples, gold.prefixes, gold.base))

    declared = [
        label for label in WELL_KNOWN_PREFIXES
        if f"@prefix {label}: <{WELL_KNOWN_PREFIXES[label]}> ." in text
    ]
    removed = rng.sample(declared, min(k1, len(declared)))
    for label in removed:
        text = text.replace(
            f"@prefix {label}: <{WELL_KNOWN_PREFIXES[label]}> .\n", "", 1)

    plan = FaultPlan(
        removed_prefixes=removed,
        disjoint_nodes=disjoint_nodes,
        extraneous=k3,
        deleted=sorted(deleted, key=repr),
    )
    return text, plan
