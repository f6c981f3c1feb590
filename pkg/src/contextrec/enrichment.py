"""Query enrichment from the user's situation.

A classification rule whose premise shares at least two dimensions with the
current situation supplies the interest; otherwise the interest is extracted
from the local knowledge base and the (situation, interest) pair is recorded
in the learning base.  A case-based-reasoning selector is provided as the
baseline predictor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .concepts import CATEGORY_PREFIX, Iri, TripleStore, concept_by_label, concept_token, extract_interest, most_frequent
from .errors import NoInterestFound, ParseError
from .itemsets import AssociationRule, Dimension, FormalContext, Item, RuleKind, load_rule_base
from .situation import Situation, overlap

MIN_OVERLAP = 2


@dataclass(frozen=True)
class RuleBase:
    rules: tuple[AssociationRule, ...] = ()

    def __post_init__(self) -> None:
        rules = tuple(self.rules)
        for rule in rules:
            if rule.kind is not RuleKind.CLASS:
                raise ValueError(f"rule base accepts class rules only: {rule}")
            if any(i.dimension is Dimension.CLASS for i in rule.premise):
                raise ValueError(f"class item in premise: {rule}")
        object.__setattr__(self, "rules", rules)

    @classmethod
    def load(cls, path: str | Path) -> "RuleBase":
        return cls(tuple(load_rule_base(path)))

    def __len__(self) -> int:
        return len(self.rules)


class LearningBase:
    """Append-only list of (situation, interest) observations.

    ``loaded`` counts the entries that came from disk, so that
    :meth:`append_to` writes only what this run added.
    """

    HEADER = "location\tseason\tdaypart\tinterest"

    def __init__(self, entries: Iterable[tuple[Situation, str]] = ()):
        self._entries: list[tuple[Situation, str]] = list(entries)
        self.loaded = len(self._entries)

    @property
    def entries(self) -> tuple[tuple[Situation, str], ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def append(self, situation: Situation, interest: str) -> None:
        self._entries.append((situation, interest))

    def new_entries(self) -> list[tuple[Situation, str]]:
        return self._entries[self.loaded:]

    def merge(self, other: "LearningBase") -> None:
        self._entries.extend(other.new_entries())

    @classmethod
    def load(cls, path: str | Path) -> "LearningBase":
        path = Path(path)
        entries = []
        if path.exists():
            for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
                if not line.strip() or line.startswith("#") or line == cls.HEADER:
                    continue
                cells = line.split("\t")
                if len(cells) != 4:
                    raise ParseError(f"expected 4 columns, got {len(cells)}", lineno, str(path))
                try:
                    entries.append((Situation(*cells[:3]), cells[3].strip()))
                except ValueError as exc:
                    raise ParseError(str(exc), lineno, str(path)) from None
        return cls(entries)

    def append_to(self, path: str | Path) -> int:
        path = Path(path)
        fresh = self.new_entries()
        if not fresh:
            return 0
        lines = []
        if not path.exists() or path.stat().st_size == 0:
            lines.append(self.HEADER)
        lines += [f"{s.location_type}\t{s.season}\t{s.day_part}\t{i}" for s, i in fresh]
        with path.open("a", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        self.loaded = len(self._entries)
        return len(fresh)

    def to_context(self) -> FormalContext:
        return FormalContext(
            tuple(s.items() | {Item(interest, Dimension.CLASS)} for s, interest in self._entries)
        )


@dataclass(frozen=True)
class RuleMatch:
    rule_id: str
    overlap: int


@dataclass(frozen=True)
class KnowledgeBase:
    query_concept: Iri
    location_concept: Iri
    candidates: tuple[Iri, ...]


@dataclass(frozen=True)
class EnrichmentResult:
    query: str
    interest: str
    provenance: RuleMatch | KnowledgeBase
    situation: Situation
    enriched_query: str = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "enriched_query", f"{self.query} {surface_form(self.interest)}")


def surface_form(token: str) -> str:
    return token.replace("_", " ")


def eligible_rules(rb: RuleBase | Sequence[AssociationRule], s: Situation) -> list[tuple[AssociationRule, int]]:
    rules = rb.rules if isinstance(rb, RuleBase) else rb
    scored = []
    for rule in rules:
        score = overlap(s, rule.premise)
        if score >= MIN_OVERLAP:
            scored.append((rule, score))
    return scored


def _rank(entry: tuple[AssociationRule, int]) -> tuple:
    rule, score = entry
    return (-score, -rule.confidence, -rule.support, rule.rule_id, rule.sort_key())


def select_rule(scored: Sequence[tuple[AssociationRule, int]]) -> tuple[AssociationRule, int] | None:
    """Best eligible rule: overlap, then confidence, then support, then id."""
    if not scored:
        return None
    return min(scored, key=_rank)


def enrich_query(
    q: str,
    s: Situation,
    rb: RuleBase,
    store: TripleStore,
    lb: LearningBase,
    depth: int = 2,
    category_prefix: str = CATEGORY_PREFIX,
) -> EnrichmentResult:
    query = " ".join(q.split())
    if not query:
        raise ValueError("query must be non-empty")
    chosen = select_rule(eligible_rules(rb, s))
    if chosen is not None:
        rule, score = chosen
        return EnrichmentResult(query, rule.interest, RuleMatch(rule.rule_id, score), s)

    query_concept = concept_by_label(store, query)
    location_concept = concept_by_label(store, s.location_type)
    if query_concept is None:
        raise NoInterestFound(f"query {query!r} matches no concept label")
    if location_concept is None:
        raise NoInterestFound(f"location type {s.location_type!r} matches no concept label")
    candidates = extract_interest(store, query_concept, location_concept, depth, category_prefix)
    if not candidates:
        raise NoInterestFound(
            f"no concept links {query_concept.value} to {location_concept.value} within {depth} hops"
        )
    interest = concept_token(most_frequent(candidates))
    lb.append(s, interest)
    return EnrichmentResult(
        query, interest, KnowledgeBase(query_concept, location_concept, tuple(candidates)), s
    )


# -- case-based reasoning baseline -------------------------------------------

CBR_DIMENSIONS = (Dimension.LOCATION, Dimension.SEASON, Dimension.DAYPART)


def equality(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


@dataclass(frozen=True)
class CbrCase:
    situation: Situation
    interest: str


@dataclass(frozen=True)
class CbrConfig:
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    threshold: float = 2.0
    similarities: tuple[Callable[[str, str], float], ...] = (equality, equality, equality)

    def __post_init__(self) -> None:
        if len(self.weights) != 3 or len(self.similarities) != 3:
            raise ValueError("one weight and one similarity per situation dimension")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValueError("weights must be non-negative with a positive sum")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")


def cbr_score(case: CbrCase, s: Situation, cfg: CbrConfig) -> float:
    return sum(
        w * sim(s.value(dim), case.situation.value(dim))
        for w, sim, dim in zip(cfg.weights, cfg.similarities, CBR_DIMENSIONS)
    )


def cbr_select(cases: Sequence[CbrCase], s: Situation, cfg: CbrConfig = CbrConfig()) -> tuple[CbrCase, float] | None:
    """Most similar past case, or ``None`` when it scores below the threshold."""
    best = None
    for case in cases:
        score = cbr_score(case, s, cfg)
        if best is None or score > best[1]:
            best = (case, score)
    if best is None or best[1] < cfg.threshold:
        return None
    return best
