"""Friend recommendation from two-pass community discovery.

Pass one groups people by location; pass two splits each location community
by shared interests.  A target is offered the members of its interest
communities whose label matches one of its own interests and whom it does
not already know.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .community import best_partition, walktrap
from .errors import DomainError
from .social import SocialGraph, connected_components, interest_graph, location_graph, node_key


class Level(str, Enum):
    LOCATION = "location"
    INTEREST = "interest"


@dataclass(frozen=True)
class LabeledCommunity:
    level: Level
    location_label: str
    interest_label: str | None
    members: frozenset

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("community must have members")

    def sorted_members(self) -> list[str]:
        return sorted(self.members, key=node_key)

    def label_key(self) -> tuple:
        return (node_key(self.location_label), node_key(self.interest_label or ""))


@dataclass(frozen=True)
class Recommendation:
    target: str
    candidates: tuple[tuple[str, LabeledCommunity], ...]

    @property
    def persons(self) -> list[str]:
        return [p for p, _ in self.candidates]


def _walktrap_blocks(g, t: int) -> list[frozenset]:
    blocks = []
    for comp in connected_components(g):
        if len(comp) == 1:
            blocks.append(comp)
        else:
            blocks.extend(best_partition(walktrap(g.subgraph(comp), t)).blocks)
    return sorted(blocks, key=lambda b: node_key(min(b, key=node_key)))


def interest_label(sg: SocialGraph, members: Iterable[str]) -> str | None:
    """Most common interest held by at least two members; ties go to the smallest."""
    counts = Counter(i for m in members for i in sg.interests[m])
    shared = [(n, i) for i, n in counts.items() if n >= 2]
    if not shared:
        return None
    return min(shared, key=lambda x: (-x[0], node_key(x[1])))[1]


def discover_communities(sg: SocialGraph, t: int = 4) -> list[LabeledCommunity]:
    """Location communities first, then the interest communities inside each."""
    location_level = []
    for block in _walktrap_blocks(location_graph(sg), t):
        places = {sg.location[p] for p in block}
        if len(places) != 1:
            raise DomainError(f"location community mixes locations: {sorted(places)}")
        location_level.append(LabeledCommunity(Level.LOCATION, places.pop(), None, block))
    if len(location_level) != len(set(sg.location.values())):
        raise DomainError("a location class was split across communities")
    interest_level = []
    for outer in location_level:
        for block in _walktrap_blocks(interest_graph(sg, outer.members), t):
            label = interest_label(sg, block) if len(block) > 1 else None
            interest_level.append(LabeledCommunity(Level.INTEREST, outer.location_label, label, block))
    return location_level + interest_level


def recommend_friends(sg: SocialGraph, communities: Sequence[LabeledCommunity], target: str) -> Recommendation:
    if target not in sg.persons:
        raise DomainError(f"unknown person {target!r}")
    chosen = [
        c
        for c in communities
        if c.level is Level.INTEREST
        and target in c.members
        and c.location_label == sg.location[target]
        and c.interest_label in sg.interests[target]
    ]
    seen = set()
    candidates = []
    for c in sorted(chosen, key=LabeledCommunity.label_key):
        for m in c.sorted_members():
            if m == target or m in seen or sg.knows_each_other(target, m):
                continue
            seen.add(m)
            candidates.append((m, c))
    return Recommendation(target, tuple(candidates))


def apply_recommendations(sg: SocialGraph, rec: Recommendation, accepted: Iterable[str]) -> SocialGraph:
    accepted = list(dict.fromkeys(accepted))
    offered = set(rec.persons)
    stray = [p for p in accepted if p not in offered]
    if stray:
        raise DomainError(f"not among the candidates: {', '.join(stray)}")
    new_pairs = set()
    for p in accepted:
        pair = frozenset((rec.target, p))
        if pair in sg.knows:
            raise DomainError(f"{rec.target} already knows {p}; recommendation is stale")
        new_pairs.add(pair)
    return SocialGraph(sg.persons, sg.knows | new_pairs, sg.interests, sg.location)


def interest_update(sg: SocialGraph, person: str, new_interest: str) -> SocialGraph:
    if person not in sg.persons:
        raise DomainError(f"unknown person {person!r}")
    interests = dict(sg.interests)
    interests[person] = interests[person] | {new_interest}
    return SocialGraph(sg.persons, sg.knows, interests, sg.location)


def format_recommendation(rec: Recommendation) -> str:
    return "".join(
        f"{rec.target}\t{p}\t{c.location_label}\t{c.interest_label}\n" for p, c in rec.candidates
    )


def format_communities(communities: Sequence[LabeledCommunity]) -> str:
    lines = []
    for c in communities:
        label = c.location_label if c.level is Level.LOCATION else f"{c.location_label}/{c.interest_label or '-'}"
        lines.append(f"{c.level.value}\t{label}\t{','.join(c.sorted_members())}")
    return "".join(line + "\n" for line in lines)
