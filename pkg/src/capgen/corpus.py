"""Corpus loading: manifest, vocabulary, shapes, capabilities and examples."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .consistency import TBoxIndex, index_tbox
from .prompts import CapabilitySpec, PromptTemplate, load_template
from .rdf.terms import Graph
from .rdf.turtle import parse_turtle
from .shacl import ShapeSet, load_shapes

DEFAULT_CORPUS = Path(__file__).resolve().parents[2] / "corpus"

# Prefixes the repair stage may re-declare, with their corpus namespaces.
WELL_KNOWN_PREFIXES = {
    "cask": "https://w3id.org/cask/ontology#",
    "vdi3682": "https://w3id.org/vdi3682#",
    "om": "http://openmath.org/vocab/math#",
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "sh": "http://www.w3.org/ns/shacl#",
}


class CorpusError(Exception):
    pass


@dataclass
class Corpus:
    root: Path
    tbox_iri: str
    tbox_text: str
    tbox: Graph
    tbox_index: TBoxIndex
    shapes: ShapeSet
    templates: dict[str, PromptTemplate]
    capabilities: dict[str, CapabilitySpec]
    example_order: tuple[str, ...]
    examples: dict[str, tuple[str, str]]  # id -> (description, solution turtle)

    def capability(self, cap_id: str) -> CapabilitySpec:
        try:
            return self.capabilities[cap_id]
        except KeyError:
            raise CorpusError(f"unknown capability {cap_id!r}") from None

    def gold_graph(self, cap_id: str) -> Graph:
        cap = self.capability(cap_id)
        return parse_turtle(cap.gold_path.read_text(encoding="utf-8"))

    def ordered_capabilities(self) -> list[CapabilitySpec]:
        return [self.capabilities[k] for k in sorted(self.capabilities)]

    def digest(self) -> str:
        """Stable hash over every corpus file, for report metadata."""
        h = hashlib.sha256()
        for path in sorted(self.root.rglob("*")):
            if path.is_file():
                h.update(path.relative_to(self.root).as_posix().encode())
                h.update(path.read_bytes())
        return h.hexdigest()[:16]


def load_corpus(root: Path | str = DEFAULT_CORPUS) -> Corpus:
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise CorpusError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    tbox_text = (root / manifest["tbox"]).read_text(encoding="utf-8")
    tbox = parse_turtle(tbox_text)
    shapes_graph = parse_turtle((root / manifest["shapes"]).read_text(encoding="utf-8"))

    templates = {
        technique: load_template(root / rel)
        for technique, rel in manifest["templates"].items()
    }

    capabilities: dict[str, CapabilitySpec] = {}
    for entry in manifest["capabilities"]:
        desc_path = root / entry["description"]
        capabilities[entry["id"]] = CapabilitySpec(
            id=entry["id"],
            name=entry["name"],
            description=desc_path.read_text(encoding="utf-8"),
            inputs=tuple(entry.get("inputs", ())),
            outputs=tuple(entry.get("outputs", ())),
            constraints=tuple(entry.get("constraints", ())),
            gold_path=root / entry["gold"],
            description_path=desc_path,
        )

    examples = {
        ex_id: (
            (root / spec["description"]).read_text(encoding="utf-8"),
            (root / spec["solution"]).read_text(encoding="utf-8"),
        )
        for ex_id, spec in manifest["examples"].items()
    }

    return Corpus(
        root=root,
        tbox_iri=manifest["tbox_iri"],
        tbox_text=tbox_text,
        tbox=tbox,
        tbox_index=index_tbox(tbox),
        shapes=load_shapes(shapes_graph),
        templates=templates,
        capabilities=capabilities,
        example_order=tuple(manifest.get("example_order", ())),
        examples=examples,
    )
