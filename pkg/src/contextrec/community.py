"""Community detection: Walktrap with modularity cut, and Girvan-Newman.

Walktrap starts from singletons and repeatedly merges the adjacent pair of
communities whose merge least increases the mean squared random-walk distance
to community centres::

    dsigma(C1, C2) = (1/n) * |C1||C2| / (|C1| + |C2|) * r(C1, C2)**2

where ``r`` compares the community-averaged rows of ``P**t`` weighted by the
inverse degree.  The hierarchy level of maximum modularity is the result.

Girvan-Newman removes the edge of highest shortest-path betweenness until no
edge is left and keeps the component structure of maximum modularity.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DomainError, ParseError
from .social import Node, Partition, SimpleGraph, connected_components, node_key

ROW_TOL = 1e-12
TIE_TOL = 1e-12


@dataclass(frozen=True)
class TransitionModel:
    nodes: tuple
    P: np.ndarray
    degrees: np.ndarray
    t: int

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError("walk length t must be >= 1")

    def index(self, node: Node) -> int:
        return self.nodes.index(node)

    def power(self) -> np.ndarray:
        return np.linalg.matrix_power(self.P, self.t)


def transition_matrix(g: SimpleGraph, t: int = 4) -> TransitionModel:
    nodes = g.nodes
    pos = {v: i for i, v in enumerate(nodes)}
    A = np.zeros((len(nodes), len(nodes)))
    for u, v, w in g.weighted_edges():
        A[pos[u], pos[v]] = A[pos[v], pos[u]] = w
    d = A.sum(axis=1)
    isolated = [nodes[i] for i in np.flatnonzero(d == 0)]
    if isolated:
        raise DomainError(f"isolated nodes have no transition row: {isolated}")
    return TransitionModel(nodes, A / d[:, None], d, t)


def _distance_sq(a: np.ndarray, b: np.ndarray, d: np.ndarray) -> float:
    diff = a - b
    return float(np.sum(diff * diff / d))


def walk_distance(tm: TransitionModel, i: Node, j: Node) -> float:
    Pt = tm.power()
    a, b = tm.index(i), tm.index(j)
    if a == b:
        return 0.0
    return math.sqrt(_distance_sq(Pt[a], Pt[b], tm.degrees))


@dataclass(frozen=True)
class Merge:
    a: frozenset
    b: frozenset
    delta_sigma: float


@dataclass(frozen=True)
class Dendrogram:
    """Merge history; ``modularity[k]`` is Q after ``k`` merges."""

    nodes: tuple
    merges: tuple[Merge, ...]
    modularity: tuple[float, ...]
    max_row_drift: float = 0.0

    def partition(self, level: int) -> Partition:
        if not 0 <= level <= len(self.merges):
            raise IndexError(level)
        blocks = {frozenset([v]) for v in self.nodes}
        for m in self.merges[:level]:
            blocks -= {m.a, m.b}
            blocks.add(m.a | m.b)
        return Partition(tuple(blocks))

    def levels(self) -> Iterable[Partition]:
        for k in range(len(self.merges) + 1):
            yield self.partition(k)


def _require_connected(g: SimpleGraph) -> None:
    if len(connected_components(g)) > 1:
        raise DomainError("walktrap expects a connected graph; run it per component")


def walktrap(g: SimpleGraph, t: int = 4) -> Dendrogram:
    if t < 1:
        raise ValueError("walk length t must be >= 1")
    if len(g) == 0:
        return Dendrogram((), (), (0.0,))
    _require_connected(g)
    if len(g) == 1:
        return Dendrogram(g.nodes, (), (0.0,))

    tm = transition_matrix(g, t)
    Pt = tm.power()
    d = tm.degrees
    n = len(g.nodes)
    total = g.total_weight()
    pos = {v: i for i, v in enumerate(g.nodes)}

    members: dict[int, frozenset] = {i: frozenset([v]) for i, v in enumerate(g.nodes)}
    rows: dict[int, np.ndarray] = {i: Pt[i].copy() for i in range(n)}
    first: dict[int, tuple] = {i: node_key(v) for i, v in enumerate(g.nodes)}
    links: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    for u, v, w in g.weighted_edges():
        links[pos[u]][pos[v]] = w
        links[pos[v]][pos[u]] = w
    internal = {i: 0.0 for i in range(n)}
    strength = {i: float(d[i]) for i in range(n)}
    drift = max(abs(float(r.sum()) - 1.0) for r in rows.values())

    def q_value() -> float:
        return sum(internal[c] / total - (strength[c] / (2 * total)) ** 2 for c in members)

    def dsigma(a: int, b: int) -> float:
        sa, sb = len(members[a]), len(members[b])
        return (sa * sb / (sa + sb)) * _distance_sq(rows[a], rows[b], d) / n

    def entry(a: int, b: int) -> tuple:
        if first[b] < first[a]:
            a, b = b, a
        return (dsigma(a, b), first[a], first[b], a, b)

    heap = [entry(a, b) for a in links for b in links[a] if a < b]
    heapq.heapify(heap)
    merges = []
    qs = [q_value()]
    next_id = n
    while len(members) > 1:
        # pop everything tied with the minimum, then choose by smallest members
        tied = []
        while heap:
            item = heap[0]
            if item[3] not in members or item[4] not in members:
                heapq.heappop(heap)
                continue
            if tied and item[0] > tied[0][0] + TIE_TOL * max(1.0, abs(tied[0][0])):
                break
            tied.append(heapq.heappop(heap))
        if not tied:
            raise DomainError("no adjacent communities left to merge")
        best = min(tied, key=lambda e: (e[1], e[2]))
        for other in tied:
            if other is not best:
                heapq.heappush(heap, other)
        ds, _, _, a, b = best

        c = next_id
        next_id += 1
        sa, sb = len(members[a]), len(members[b])
        members[c] = members[a] | members[b]
        rows[c] = (sa * rows[a] + sb * rows[b]) / (sa + sb)
        drift = max(drift, abs(float(rows[c].sum()) - 1.0))
        first[c] = min(first[a], first[b])
        internal[c] = internal[a] + internal[b] + links[a].get(b, 0.0)
        strength[c] = strength[a] + strength[b]
        merged_links: dict[int, float] = {}
        for old in (a, b):
            for nbr, w in links[old].items():
                if nbr in (a, b):
                    continue
                merged_links[nbr] = merged_links.get(nbr, 0.0) + w
                del links[nbr][old]
        links[c] = merged_links
        for nbr, w in merged_links.items():
            links[nbr][c] = w
            heapq.heappush(heap, entry(c, nbr))
        merges.append(Merge(members[a], members[b], ds))
        for old in (a, b):
            del members[old], rows[old], links[old], internal[old], strength[old]
        qs.append(q_value())
    return Dendrogram(g.nodes, tuple(merges), tuple(qs), drift)


def best_level(d: Dendrogram) -> int:
    """Level of maximum Q; near-equal values go to the coarser level."""
    top = max(d.modularity)
    tol = TIE_TOL * max(1.0, abs(top))
    return max(k for k, q in enumerate(d.modularity) if q >= top - tol)


def best_partition(d: Dendrogram) -> Partition:
    return d.partition(best_level(d))


def modularity(g: SimpleGraph, p: Partition) -> float:
    covered = p.nodes()
    if covered != frozenset(g.nodes):
        raise ValueError("partition does not cover the graph's nodes")
    total = g.total_weight()
    if total == 0:
        return 0.0
    where = {v: i for i, b in enumerate(p.blocks) for v in b}
    inside = [0.0] * len(p)
    ends = [0.0] * len(p)
    for u, v, w in g.weighted_edges():
        if where[u] == where[v]:
            inside[where[u]] += w
    for v in g.nodes:
        ends[where[v]] += g.degree(v)
    return sum(e / total - (a / (2 * total)) ** 2 for e, a in zip(inside, ends))


# -- betweenness ---------------------------------------------------------------


def edge_betweenness(g: SimpleGraph) -> dict[tuple[Node, Node], Fraction]:
    """Exact shortest-path edge betweenness over unordered node pairs.

    Brandes accumulation in rational arithmetic; edge weights are ignored.
    """
    score = {e: Fraction(0) for e in g.edges()}
    for s in g.nodes:
        order = []
        preds: dict[Node, list[Node]] = {v: [] for v in g.nodes}
        sigma = {v: 0 for v in g.nodes}
        dist = {s: 0}
        sigma[s] = 1
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in g.neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = {v: Fraction(0) for v in g.nodes}
        for w in reversed(order):
            for v in preds[w]:
                share = Fraction(sigma[v], sigma[w]) * (1 + delta[w])
                key = (v, w) if (v, w) in score else (w, v)
                score[key] += share
                delta[v] += share
    # each unordered pair was counted from both ends
    return {e: val / 2 for e, val in score.items()}


def _fast_betweenness(nodes: list, edges: list[tuple[Node, Node]]) -> dict[tuple[Node, Node], float]:
    """Float edge betweenness of one component, all sources at once.

    Breadth-first layers are advanced for every source simultaneously with
    dense matrix products, then dependencies are accumulated layer by layer.
    """
    k = len(nodes)
    if not edges:
        return {}
    pos = {v: i for i, v in enumerate(nodes)}
    A = np.zeros((k, k))
    for u, v in edges:
        A[pos[u], pos[v]] = A[pos[v], pos[u]] = 1.0
    sigma = np.eye(k)
    visited = np.eye(k, dtype=bool)
    layers = [np.eye(k, dtype=bool)]
    while True:
        reach = (sigma * layers[-1]) @ A
        new = (reach > 0) & ~visited
        if not new.any():
            break
        sigma[new] = reach[new]
        visited |= new
        layers.append(new)
    delta = np.zeros((k, k))
    flow = np.zeros((k, k))
    for level in range(len(layers) - 1, 0, -1):
        inner, outer = layers[level - 1], layers[level]
        coef = np.where(outer, (1.0 + delta) / np.where(outer, sigma, 1.0), 0.0)
        delta += np.where(inner, sigma * (coef @ A), 0.0)
        flow += (sigma * inner).T @ coef
    both = (flow + flow.T) * A / 2.0
    return {(u, v): float(both[pos[u], pos[v]]) for u, v in edges}


def _argmax_edge(scores: dict[tuple[Node, Node], float]) -> tuple[Node, Node]:
    top = max(scores.values())
    tol = 1e-9 * max(1.0, abs(top))
    tied = [e for e, s in scores.items() if s >= top - tol]
    return min(tied, key=lambda e: (node_key(e[0]), node_key(e[1])))


def girvan_newman(g: SimpleGraph) -> Partition:
    comps = connected_components(g)
    best_q = modularity(g, comps)
    best = comps
    adj: dict[Node, set] = {v: set(g.neighbors(v)) for v in g.nodes}
    blocks = {min(b, key=node_key): set(b) for b in comps}
    cache: dict = {}

    def comp_edges(block: set) -> list[tuple[Node, Node]]:
        return sorted(
            ((u, v) for u in block for v in adj[u] if node_key(u) < node_key(v)),
            key=lambda e: (node_key(e[0]), node_key(e[1])),
        )

    def refresh(root: Node) -> None:
        block = blocks[root]
        edges = comp_edges(block)
        if edges:
            cache[root] = _fast_betweenness(sorted(block, key=node_key), edges)
        else:
            cache.pop(root, None)

    for root in blocks:
        refresh(root)
    while cache:
        roots_max = {root: max(s.values()) for root, s in cache.items()}
        top = max(roots_max.values())
        tol = 1e-9 * max(1.0, abs(top))
        candidates = {}
        for root, s in cache.items():
            if roots_max[root] >= top - tol:
                candidates.update((e, v) for e, v in s.items() if v >= top - tol)
        u, v = _argmax_edge(candidates)
        adj[u].discard(v)
        adj[v].discard(u)
        root = next(r for r, b in blocks.items() if u in b)
        block = blocks.pop(root)
        cache.pop(root, None)
        parts = connected_components(SimpleGraph(block, ((a, b) for a in block for b in adj[a] if node_key(a) < node_key(b))))
        for part in parts:
            r = min(part, key=node_key)
            blocks[r] = set(part)
            refresh(r)
        if len(parts) > 1:
            current = Partition(tuple(frozenset(b) for b in blocks.values()))
            q = modularity(g, current)
            if q > best_q + TIE_TOL * max(1.0, abs(best_q)):
                best_q, best = q, current
    return best


def detect_communities(g: SimpleGraph, t: int = 4, method: str = "walktrap") -> Partition:
    """Partition ``g``; Walktrap runs per connected component."""
    if method == "gn":
        return girvan_newman(g)
    if method != "walktrap":
        raise ValueError(f"unknown method {method!r}")
    blocks = []
    for comp in connected_components(g):
        if len(comp) == 1:
            blocks.append(comp)
            continue
        blocks.extend(best_partition(walktrap(g.subgraph(comp), t)).blocks)
    return Partition(tuple(blocks))


# -- file formats ---------------------------------------------------------------


def load_edge_list(path: str | Path) -> SimpleGraph:
    """Edge-list TSV ``u  v  [weight]``; a lone ``u`` declares an isolated node."""
    path = Path(path)
    nodes, edges = [], []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split()
        try:
            if len(cells) == 1:
                nodes.append(cells[0])
            elif len(cells) == 2:
                edges.append((cells[0], cells[1]))
            elif len(cells) == 3:
                edges.append((cells[0], cells[1], float(cells[2])))
            else:
                raise ValueError(f"expected 1 to 3 columns, got {len(cells)}")
        except ValueError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    try:
        return SimpleGraph(nodes, edges)
    except ValueError as exc:
        raise ParseError(str(exc), None, str(path)) from None


def format_partition(p: Partition) -> str:
    return "".join(f"{v}\t{i}\n" for i, block in enumerate(p.sorted_blocks()) for v in block)
