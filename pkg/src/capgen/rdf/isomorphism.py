"""Blank-node-aware graph isomorphism with a bounded backtracking search."""
from __future__ import annotations

import hashlib

from .terms import Graph, Term, Triple


class IsomorphismBudgetError(Exception):
    """Raised when the bijection search exceeds its candidate budget."""


DEFAULT_BUDGET = 1_000_000


def _ground(t: Triple) -> bool:
    return not (t.subject.is_blank or t.object.is_blank)


def _signature_round(g: Graph, colors: dict[Term, str]) -> dict[Term, str]:
    # colors must be comparable across graphs, so they are derived from the
    # signature content itself, never from per-graph numbering
    sigs: dict[Term, list] = {b: [] for b in colors}
    for t in g:
        s_blank = t.subject.is_blank
        o_blank = t.object.is_blank
        if not (s_blank or o_blank):
            continue
        if s_blank:
            other = ("c", colors[t.object]) if o_blank else ("t", repr(t.object))
            sigs[t.subject].append(("out", t.predicate.value, other))
        if o_blank:
            other = ("c", colors[t.subject]) if s_blank else ("t", repr(t.subject))
            sigs[t.object].append(("in", t.predicate.value, other))
    out: dict[Term, str] = {}
    for node, sig in sigs.items():
        material = repr((colors[node], sorted(sig)))
        out[node] = hashlib.sha256(material.encode()).hexdigest()[:16]
    return out


def _refine(g: Graph) -> dict[Term, str]:
    colors = {b: "" for b in g.blank_nodes()}
    for _ in range(len(colors) + 1):
        new = _signature_round(g, colors)
        if new == colors:
            break
        colors = new
    return colors


def graph_isomorphic(a: Graph, b: Graph, budget: int = DEFAULT_BUDGET) -> bool:
    """True iff some blank-node bijection maps graph a exactly onto graph b.

    Raises IsomorphismBudgetError if more than `budget` candidate
    assignments are attempted before a verdict is reached.
    """
    if len(a) != len(b):
        return False
    ground_a = {t for t in a if _ground(t)}
    ground_b = {t for t in b if _ground(t)}
    if ground_a != ground_b:
        return False
    blanks_a = sorted(a.blank_nodes(), key=lambda t: t.value)
    blanks_b = sorted(b.blank_nodes(), key=lambda t: t.value)
    if len(blanks_a) != len(blanks_b):
        return False
    if not blanks_a:
        return True

    colors_a = _refine(a)
    colors_b = _refine(b)
    # color class sizes must agree (necessary condition, prunes hard cases)
    from collections import Counter

    if Counter(colors_a.values()) != Counter(colors_b.values()):
        return False

    non_ground_a = [t for t in a if not _ground(t)]
    triples_b = b.triples
    by_color_b: dict[str, list[Term]] = {}
    for node, c in colors_b.items():
        by_color_b.setdefault(c, []).append(node)
    for nodes in by_color_b.values():
        nodes.sort(key=lambda t: t.value)

    # order: smallest candidate sets first
    order = sorted(blanks_a, key=lambda n: (len(by_color_b.get(colors_a[n], ())), n.value))
    attempts = 0

    def substitute(t: Triple, mapping: dict[Term, Term]) -> Triple:
        s = mapping.get(t.subject, t.subject)
        o = mapping.get(t.object, t.object)
        return Triple(s, t.predicate, o)

    def consistent(mapping: dict[Term, Term]) -> bool:
        # every fully-mapped non-ground triple of a must exist in b
        for t in non_ground_a:
            s_ok = not t.subject.is_blank or t.subject in mapping
            o_ok = not t.object.is_blank or t.object in mapping
            if s_ok and o_ok and substitute(t, mapping) not in triples_b:
                return False
        return True

    def backtrack(idx: int, mapping: dict[Term, Term], used: set[Term]) -> bool:
        nonlocal attempts
        if idx == len(order):
            return consistent(mapping)
        node = order[idx]
        for candidate in by_color_b.get(colors_a[node], ()):
            if candidate in used:
                continue
            attempts += 1
            if attempts > budget:
                raise IsomorphismBudgetError(
                    f"isomorphism search exceeded {budget} candidate assignments")
            mapping[node] = candidate
            used.add(candidate)
            if consistent(mapping) and backtrack(idx + 1, mapping, used):
                return True
            del mapping[node]
            used.discard(candidate)
        return False

    return backtrack(0, {}, set())
