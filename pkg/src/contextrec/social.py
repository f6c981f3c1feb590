"""FOAF-shaped person graph and the graph substrate shared by community code.

A :class:`SocialGraph` holds who knows whom (undirected), each person's
interests and exactly one current location.  Two derived graphs drive
community discovery: the location graph links people with the same location
and the interest graph links people sharing at least one interest.
"""

from __future__ import annotations

import logging
import re
from collections import defaultdict, deque
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Iterator, Mapping

from .concepts import FOAF_BASED_NEAR, FOAF_INTEREST, FOAF_KNOWS, Iri, Triple
from .errors import DomainError, MissingLocation, ParseError

log = logging.getLogger(__name__)

Node = Hashable


def node_key(node: Node) -> tuple:
    """Natural sort key, so that U2 sorts before U10."""
    return _text_key(str(node))


@lru_cache(maxsize=1 << 16)
def _text_key(text: str) -> tuple:
    parts = tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in re.split(r"(\d+)", text) if p)
    return (parts, text)


def _edge(u: Node, v: Node) -> tuple[Node, Node]:
    return (u, v) if node_key(u) <= node_key(v) else (v, u)


class SimpleGraph:
    """Undirected graph without self-loops or parallel edges.

    Edges are given as ``(u, v)`` or ``(u, v, weight)``; weights default to 1.
    """

    def __init__(self, nodes: Iterable[Node] = (), edges: Iterable[tuple] = ()):
        self._adj: dict[Node, dict[Node, float]] = {}
        for n in nodes:
            self._adj.setdefault(n, {})
        for e in edges:
            if len(e) == 2:
                u, v, w = e[0], e[1], 1
            elif len(e) == 3:
                u, v, w = e
            else:
                raise ValueError(f"edge must have 2 or 3 fields: {e!r}")
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            if w <= 0:
                raise ValueError(f"edge weight must be positive: {e!r}")
            if v in self._adj.get(u, {}):
                raise ValueError(f"parallel edge {u!r}-{v!r}")
            self._adj.setdefault(u, {})[v] = w
            self._adj.setdefault(v, {})[u] = w
        self._nodes = tuple(sorted(self._adj, key=node_key))

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self._nodes

    def edges(self) -> list[tuple[Node, Node]]:
        out = [_edge(u, v) for u in self._nodes for v in self._adj[u] if node_key(u) < node_key(v)]
        return sorted(out, key=lambda e: (node_key(e[0]), node_key(e[1])))

    def weighted_edges(self) -> list[tuple[Node, Node, float]]:
        return [(u, v, self._adj[u][v]) for u, v in self.edges()]

    def neighbors(self, node: Node) -> list[Node]:
        return sorted(self._adj[node], key=node_key)

    def weight(self, u: Node, v: Node) -> float:
        return self._adj[u].get(v, 0)

    def has_edge(self, u: Node, v: Node) -> bool:
        return v in self._adj.get(u, {})

    def degree(self, node: Node) -> float:
        return sum(self._adj[node].values())

    def number_of_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._adj.values()) // 2

    def total_weight(self) -> float:
        return sum(sum(nbrs.values()) for nbrs in self._adj.values()) / 2

    def subgraph(self, nodes: Iterable[Node]) -> "SimpleGraph":
        keep = set(nodes)
        missing = keep - set(self._adj)
        if missing:
            raise ValueError(f"unknown nodes: {sorted(missing, key=node_key)}")
        return SimpleGraph(keep, ((u, v, w) for u, v, w in self.weighted_edges() if u in keep and v in keep))

    def without_edge(self, u: Node, v: Node) -> "SimpleGraph":
        if not self.has_edge(u, v):
            raise ValueError(f"no edge {u!r}-{v!r}")
        drop = _edge(u, v)
        return SimpleGraph(self._nodes, (e for e in self.weighted_edges() if (e[0], e[1]) != drop))

    def __contains__(self, node: object) -> bool:
        return node in self._adj

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SimpleGraph) and self._adj == other._adj

    def __repr__(self) -> str:
        return f"SimpleGraph(nodes={len(self)}, edges={self.number_of_edges()})"


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks covering a node set, ordered by smallest member."""

    blocks: tuple[frozenset, ...]

    def __post_init__(self) -> None:
        blocks = [frozenset(b) for b in self.blocks]
        if any(not b for b in blocks):
            raise ValueError("empty block")
        seen: set = set()
        for b in blocks:
            if seen & b:
                raise ValueError("blocks overlap")
            seen |= b
        blocks.sort(key=lambda b: node_key(min(b, key=node_key)))
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def of(cls, blocks: Iterable[Iterable[Node]]) -> "Partition":
        return cls(tuple(frozenset(b) for b in blocks))

    def nodes(self) -> frozenset:
        return frozenset().union(*self.blocks)

    def block_of(self, node: Node) -> int:
        for i, b in enumerate(self.blocks):
            if node in b:
                return i
        raise KeyError(node)

    def sorted_blocks(self) -> list[list[Node]]:
        return [sorted(b, key=node_key) for b in self.blocks]

    def __iter__(self) -> Iterator[frozenset]:
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


def connected_components(g: SimpleGraph) -> Partition:
    seen: set = set()
    blocks = []
    for start in g.nodes:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            for nbr in g.neighbors(queue.popleft()):
                if nbr not in comp:
                    comp.add(nbr)
                    queue.append(nbr)
        seen |= comp
        blocks.append(frozenset(comp))
    return Partition(tuple(blocks))


@dataclass(frozen=True, eq=True)
class SocialGraph:
    persons: frozenset
    knows: frozenset  # of frozenset pairs
    interests: Mapping[str, frozenset] = field(hash=False)
    location: Mapping[str, str] = field(hash=False)

    def __post_init__(self) -> None:
        persons = frozenset(self.persons)
        knows = frozenset(frozenset(pair) for pair in self.knows)
        for pair in knows:
            if len(pair) != 2:
                raise DomainError(f"knows pair must join two people: {sorted(pair)}")
            if not pair <= persons:
                raise DomainError(f"knows endpoint outside person set: {sorted(pair)}")
        interests = {p: frozenset(self.interests.get(p, ())) for p in persons}
        extra = set(self.interests) - persons
        if extra:
            raise DomainError(f"interests given for unknown people: {sorted(extra, key=node_key)}")
        missing = sorted((p for p in persons if p not in self.location), key=node_key)
        if missing:
            raise MissingLocation(f"missing location for: {', '.join(missing)}")
        object.__setattr__(self, "persons", persons)
        object.__setattr__(self, "knows", knows)
        object.__setattr__(self, "interests", interests)
        object.__setattr__(self, "location", {p: self.location[p] for p in persons})

    def sorted_persons(self) -> list[str]:
        return sorted(self.persons, key=node_key)

    def knows_each_other(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.knows

    def friends(self, person: str) -> list[str]:
        return sorted((next(iter(pair - {person})) for pair in self.knows if person in pair), key=node_key)

    def degree(self, person: str) -> int:
        return sum(1 for pair in self.knows if person in pair)

    def knows_graph(self) -> SimpleGraph:
        return SimpleGraph(self.persons, (tuple(pair) for pair in self.knows))


def build_social_graph(
    knows: Iterable[tuple[str, str]],
    interests: Iterable[tuple[str, str]],
    based_near: Iterable[tuple[str, str]],
    strict: bool = True,
) -> SocialGraph:
    """Assemble a graph from raw statements.

    Duplicate statements collapse; ``knows`` is symmetrized and self-knows is
    dropped.  A person with several locations is an error in strict mode and
    keeps the lexicographically first one otherwise.
    """
    persons: set[str] = set()
    pairs = set()
    for a, b in knows:
        persons.update((a, b))
        if a == b:
            log.warning("ignoring self-knows statement for %s", a)
            continue
        pairs.add(frozenset((a, b)))
    interest_map: dict[str, set[str]] = defaultdict(set)
    for person, interest in interests:
        persons.add(person)
        interest_map[person].add(interest)
    places: dict[str, set[str]] = defaultdict(set)
    for person, place in based_near:
        persons.add(person)
        places[person].add(place)
    missing = sorted((p for p in persons if p not in places), key=node_key)
    if missing:
        raise MissingLocation(f"missing location for: {', '.join(missing)}")
    location = {}
    for person, found in places.items():
        if len(found) > 1:
            if strict:
                raise DomainError(f"{person} has {len(found)} locations: {', '.join(sorted(found))}")
            log.warning("%s has several locations, keeping %s", person, min(found))
        location[person] = min(found)
    return SocialGraph(frozenset(persons), frozenset(pairs), dict(interest_map), location)


def load_foaf(triples: Iterable[Triple], strict: bool = True) -> SocialGraph:
    """Social graph from FOAF triples; other predicates are ignored."""
    by_pred: dict[str, list[tuple[str, str]]] = defaultdict(list)
    wanted = {FOAF_KNOWS, FOAF_INTEREST, FOAF_BASED_NEAR}
    for t in triples:
        if t.predicate.value not in wanted:
            continue
        if not isinstance(t.object, Iri):
            raise DomainError(f"{t.predicate.value} expects an IRI object, got literal {t.object.value!r}")
        by_pred[t.predicate.value].append((t.subject.value, t.object.value))
    return build_social_graph(by_pred[FOAF_KNOWS], by_pred[FOAF_INTEREST], by_pred[FOAF_BASED_NEAR], strict)


_PREDICATES = ("knows", "interest", "based_near")


def load_social_tsv(path: str | Path, strict: bool = True) -> SocialGraph:
    """Compact loader: one ``person  knows|interest|based_near  target`` per line."""
    path = Path(path)
    rows: dict[str, list[tuple[str, str]]] = {p: [] for p in _PREDICATES}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split()
        if len(cells) != 3:
            raise ParseError(f"expected 3 columns, got {len(cells)}", lineno, str(path))
        person, pred, target = cells
        if pred not in rows:
            raise ParseError(f"unknown predicate {pred!r}", lineno, str(path))
        rows[pred].append((person, target))
    return build_social_graph(rows["knows"], rows["interest"], rows["based_near"], strict)


def load_social(path: str | Path, strict: bool = True) -> SocialGraph:
    """Dispatch on extension: ``.nt`` is N-Triples, anything else compact TSV."""
    from .concepts import parse_ntriples

    path = Path(path)
    if path.suffix == ".nt":
        try:
            triples = parse_ntriples(path.read_text(encoding="utf-8"))
        except ParseError as exc:
            raise ParseError(exc.message, exc.line, str(path)) from None
        return load_foaf(triples, strict)
    return load_social_tsv(path, strict)


def location_graph(sg: SocialGraph) -> SimpleGraph:
    groups: dict[str, list[str]] = defaultdict(list)
    for p in sg.sorted_persons():
        groups[sg.location[p]].append(p)
    edges = [(a, b) for members in groups.values() for i, a in enumerate(members) for b in members[i + 1:]]
    return SimpleGraph(sg.persons, edges)


def interest_graph(sg: SocialGraph, members: Iterable[str]) -> SimpleGraph:
    members = sorted(set(members), key=node_key)
    unknown = [m for m in members if m not in sg.persons]
    if unknown:
        raise DomainError(f"unknown people: {', '.join(unknown)}")
    edges = [
        (a, b)
        for i, a in enumerate(members)
        for b in members[i + 1:]
        if sg.interests[a] & sg.interests[b]
    ]
    return SimpleGraph(members, edges)
