"""Formal contexts, closed itemsets, minimal generators and the IGB rule base.

Items are dimension-tagged tokens (season, day part, location type, class).
Itemsets are plain ``frozenset`` objects of :class:`Item`.  Supports and
confidences are exact :class:`fractions.Fraction` values so that threshold
comparisons at ``minsup``/``minconf`` are never ambiguous.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DerivationError, DomainError, ParseError

Itemset = frozenset


class Dimension(str, Enum):
    SEASON = "season"
    DAYPART = "daypart"
    LOCATION = "location"
    CLASS = "class"


SEASONS = ("printemps", "été", "automne", "hiver")
DAYPARTS = ("matin", "midi", "soir")


def normalize_token(raw: str) -> str:
    """Lowercase, NFC-normalize and replace whitespace runs by underscores."""
    text = unicodedata.normalize("NFC", raw).strip().lower()
    return "_".join(text.split())


@dataclass(frozen=True, order=True)
class Item:
    # field order gives the sort order: token first, then dimension
    value: str
    dimension: Dimension

    def __post_init__(self) -> None:
        value = normalize_token(self.value)
        if not value:
            raise ValueError("item value must be non-empty")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "dimension", Dimension(self.dimension))

    def __str__(self) -> str:
        return self.value


def infer_item(token: str) -> Item:
    """Tag a bare situation token with its dimension.

    Seasons and day parts are closed vocabularies; every other token is taken
    to be a location type.
    """
    value = normalize_token(token)
    if value in SEASONS:
        return Item(value, Dimension.SEASON)
    if value in DAYPARTS:
        return Item(value, Dimension.DAYPART)
    return Item(value, Dimension.LOCATION)


def itemset_key(items: Iterable[Item]) -> tuple:
    ordered = tuple(sorted(items))
    return (len(ordered), ordered)


def format_itemset(items: Iterable[Item]) -> str:
    return "{" + ", ".join(i.value for i in sorted(items)) + "}"


@dataclass(frozen=True)
class FormalContext:
    transactions: tuple[frozenset, ...]
    universe: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        txs = tuple(frozenset(t) for t in self.transactions)
        for row, tx in enumerate(txs, start=1):
            seen: set[Dimension] = set()
            for item in tx:
                if item.dimension in seen:
                    raise ValueError(f"transaction {row} has two {item.dimension.value} items")
                seen.add(item.dimension)
        object.__setattr__(self, "transactions", txs)
        universe = frozenset().union(*txs) if txs else frozenset()
        object.__setattr__(self, "universe", universe)
        # tidset bitmask per item
        tids: dict[Item, int] = {}
        for pos, tx in enumerate(txs):
            for item in tx:
                tids[item] = tids.get(item, 0) | (1 << pos)
        object.__setattr__(self, "_tids", tids)
        object.__setattr__(self, "_all", (1 << len(txs)) - 1)

    def __len__(self) -> int:
        return len(self.transactions)

    def extent(self, items: Iterable[Item]) -> int:
        mask = self._all
        for item in items:
            try:
                mask &= self._tids[item]
            except KeyError:
                raise DomainError(f"item {item.value!r} is not in the context universe") from None
        return mask

    def count(self, items: Iterable[Item]) -> int:
        return bin(self.extent(items)).count("1")

    def intent(self, extent: int) -> frozenset:
        if extent == 0:
            return self.universe
        return frozenset(i for i, tids in self._tids.items() if tids & extent == extent)


def load_context(path: str | Path) -> FormalContext:
    """Read a context TSV: header of dimension names, ``-`` for absent cells."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    header = None
    transactions = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in line.split("\t")]
        if header is None:
            try:
                header = [Dimension(normalize_token(c)) for c in cells]
            except ValueError as exc:
                raise ParseError(f"bad header: {exc}", lineno, str(path)) from None
            if len(set(header)) != len(header):
                raise ParseError("duplicate dimension in header", lineno, str(path))
            continue
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} columns, got {len(cells)}", lineno, str(path)
            )
        tx = set()
        for dim, cell in zip(header, cells):
            if cell in ("", "-"):
                continue
            values = [v for v in cell.split(",") if v.strip()]
            if len(values) > 1:
                raise ParseError(f"more than one {dim.value} value in row", lineno, str(path))
            tx.add(Item(values[0], dim))
        transactions.append(frozenset(tx))
    return FormalContext(tuple(transactions))


def _check_subset(ctx: FormalContext, items: Iterable[Item]) -> frozenset:
    items = frozenset(items)
    missing = items - ctx.universe
    if missing:
        raise DomainError(f"items outside universe: {format_itemset(missing)}")
    return items


def closure(ctx: FormalContext, items: Iterable[Item]) -> frozenset:
    """Intersection of all transactions containing ``items``.

    An itemset contained in no transaction closes to the whole universe.
    """
    items = _check_subset(ctx, items)
    return ctx.intent(ctx.extent(items))


def support(ctx: FormalContext, items: Iterable[Item]) -> Fraction:
    items = _check_subset(ctx, items)
    if len(ctx) == 0:
        return Fraction(0)
    return Fraction(ctx.count(items), len(ctx))


@dataclass(frozen=True)
class ClosedPattern:
    closed: frozenset
    support: Fraction
    generators: tuple[frozenset, ...]


def _minimal_generators(ctx: FormalContext, closed: frozenset) -> tuple[frozenset, ...]:
    target = ctx.count(closed)
    found: list[frozenset] = []
    ordered = sorted(closed)
    for size in range(len(ordered) + 1):
        for combo in combinations(ordered, size):
            cand = frozenset(combo)
            if any(g <= cand for g in found):
                continue
            if ctx.count(cand) == target:
                found.append(cand)
    return tuple(sorted(found, key=itemset_key))


def mine_closed(ctx: FormalContext, minsup: Fraction | float | str) -> list[ClosedPattern]:
    """All frequent closed itemsets with their complete minimal-generator sets.

    Closed sets are exactly the intersections of non-empty groups of
    transactions, built incrementally one transaction at a time.
    """
    minsup = Fraction(minsup)
    if not 0 < minsup <= 1:
        raise ValueError("minsup must lie in (0, 1]")
    if len(ctx) == 0:
        return []
    intents: set[frozenset] = set()
    for tx in ctx.transactions:
        intents |= {c & tx for c in intents}
        intents.add(tx)
    patterns = []
    for closed in intents:
        sup = Fraction(ctx.count(closed), len(ctx))
        if sup >= minsup:
            patterns.append(ClosedPattern(closed, sup, _minimal_generators(ctx, closed)))
    patterns.sort(key=lambda p: itemset_key(p.closed))
    return patterns


class RuleKind(str, Enum):
    GENERIC = "generic"
    CLASS = "class"


@dataclass(frozen=True)
class AssociationRule:
    premise: frozenset
    conclusion: frozenset
    support: Fraction
    confidence: Fraction
    kind: RuleKind = RuleKind.GENERIC
    rule_id: str = ""

    def __post_init__(self) -> None:
        if self.premise & self.conclusion:
            raise ValueError("premise and conclusion must be disjoint")
        if not self.conclusion:
            raise ValueError("conclusion must be non-empty")
        if self.kind is RuleKind.CLASS:
            if len(self.conclusion) != 1 or next(iter(self.conclusion)).dimension is not Dimension.CLASS:
                raise ValueError("class rules conclude exactly one class item")

    @property
    def interest(self) -> str:
        """Class token of a class rule."""
        return next(iter(self.conclusion)).value

    def sort_key(self) -> tuple:
        return (itemset_key(self.premise), itemset_key(self.conclusion))

    def __str__(self) -> str:
        label = f"{self.rule_id}: " if self.rule_id else ""
        return (
            f"{label}{format_itemset(self.premise)} => {format_itemset(self.conclusion)}"
            f" (sup={self.support}, conf={self.confidence})"
        )


def generate_igb(
    ctx: FormalContext, patterns: Sequence[ClosedPattern], minconf: Fraction | float | str
) -> list[AssociationRule]:
    """Informative generic basis over the given frequent closed itemsets.

    For a frequent closed ``I`` a premise is a minimal generator ``g`` of some
    frequent closed ``f`` included in ``I``, the rule ``g => I - g`` must reach
    ``minconf`` and no proper subset of ``g`` may already reach it.
    """
    minconf = Fraction(minconf)
    if not 0 < minconf <= 1:
        raise ValueError("minconf must lie in (0, 1]")
    n = len(ctx)
    rules: dict[tuple, AssociationRule] = {}
    for big in patterns:
        count_big = ctx.count(big.closed)
        for small in patterns:
            if not small.closed <= big.closed:
                continue
            for gen in small.generators:
                conclusion = big.closed - gen
                if not conclusion:
                    continue
                conf = Fraction(count_big, ctx.count(gen))
                if conf < minconf:
                    continue
                if _has_confident_subset(ctx, gen, count_big, minconf):
                    continue
                rule = AssociationRule(gen, conclusion, Fraction(count_big, n), conf)
                rules[(gen, conclusion)] = rule
    return sorted(rules.values(), key=AssociationRule.sort_key)


def _has_confident_subset(ctx: FormalContext, gen: frozenset, count_big: int, minconf: Fraction) -> bool:
    members = sorted(gen)
    for size in range(len(members)):
        for combo in combinations(members, size):
            if Fraction(count_big, ctx.count(combo)) >= minconf:
                return True
    return False


class DeriveMode(str, Enum):
    AUGMENTATION = "augmentation"
    DECOMPOSITION = "decomposition"


def derive(
    ctx: FormalContext, rule: AssociationRule, mode: DeriveMode | str, subset: Iterable[Item]
) -> AssociationRule:
    """Apply the augmentation or decomposition derivation axiom to ``rule``."""
    mode = DeriveMode(mode)
    subset = frozenset(subset)
    if not subset or not subset < rule.conclusion:
        raise DerivationError("subset must be a non-empty proper subset of the conclusion")
    if mode is DeriveMode.AUGMENTATION:
        premise, conclusion = rule.premise | subset, rule.conclusion - subset
    else:
        if closure(ctx, rule.premise | subset) != rule.premise | rule.conclusion:
            raise DerivationError(
                f"closure of {format_itemset(rule.premise | subset)} is not "
                f"{format_itemset(rule.premise | rule.conclusion)}"
            )
        premise, conclusion = rule.premise, subset
    sup_premise = ctx.count(premise)
    if sup_premise == 0:
        raise DerivationError("derived premise never occurs in the context")
    count_rule = ctx.count(premise | conclusion)
    return AssociationRule(
        premise, conclusion, Fraction(count_rule, len(ctx)), Fraction(count_rule, sup_premise)
    )


def class_rules(
    rules: Iterable[AssociationRule], ctx: FormalContext | None = None
) -> list[AssociationRule]:
    """Project generic rules onto single-class conclusions.

    Rules with a class item in the premise, or without one in the conclusion,
    are dropped.  With ``ctx`` the projected rule's support and confidence are
    recomputed; without it the source rule's values are carried over.
    Duplicates keep the highest (confidence, support).
    """
    best: dict[tuple, AssociationRule] = {}
    for rule in rules:
        if any(i.dimension is Dimension.CLASS for i in rule.premise):
            continue
        classes = [i for i in rule.conclusion if i.dimension is Dimension.CLASS]
        if not classes:
            continue
        conclusion = frozenset(classes[:1])
        sup, conf = rule.support, rule.confidence
        if ctx is not None:
            hits = ctx.count(rule.premise | conclusion)
            sup = Fraction(hits, len(ctx))
            conf = Fraction(hits, ctx.count(rule.premise))
        projected = AssociationRule(rule.premise, conclusion, sup, conf, RuleKind.CLASS)
        key = (rule.premise, conclusion)
        prev = best.get(key)
        if prev is None or (conf, sup) > (prev.confidence, prev.support):
            best[key] = projected
    return sorted(best.values(), key=AssociationRule.sort_key)


def number_rules(rules: Sequence[AssociationRule], prefix: str = "R") -> list[AssociationRule]:
    out = []
    for pos, rule in enumerate(rules, start=1):
        out.append(
            AssociationRule(rule.premise, rule.conclusion, rule.support, rule.confidence, rule.kind, f"{prefix}{pos}")
        )
    return out


def load_rule_base(path: str | Path) -> list[AssociationRule]:
    """Read a class-rule TSV ``premise  class  support  confidence``.

    Premise tokens are comma separated and tagged by :func:`infer_item`.
    Rules are numbered ``R1``, ``R2``... in file order.
    """
    path = Path(path)
    rules = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in line.split("\t")]
        if cells[0].lower() == "premise":
            continue
        if len(cells) != 4:
            raise ParseError(f"expected 4 columns, got {len(cells)}", lineno, str(path))
        premise_tokens = [t for t in cells[0].split(",") if t.strip()] if cells[0] != "-" else []
        try:
            premise = frozenset(infer_item(t) for t in premise_tokens)
            if len({i.dimension for i in premise}) != len(premise):
                raise ValueError("two premise tokens share a dimension")
            rule = AssociationRule(
                premise,
                frozenset([Item(cells[1], Dimension.CLASS)]),
                Fraction(cells[2]),
                Fraction(cells[3]),
                RuleKind.CLASS,
                f"R{len(rules) + 1}",
            )
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
        if not 0 < rule.confidence <= 1 or not 0 <= rule.support <= 1:
            raise ParseError("support/confidence out of range", lineno, str(path))
        rules.append(rule)
    return rules


def dump_rule_base(rules: Iterable[AssociationRule]) -> str:
    lines = ["premise\tclass\tsupport\tconfidence"]
    for rule in rules:
        premise = ",".join(i.value for i in sorted(rule.premise)) or "-"
        lines.append(f"{premise}\t{rule.interest}\t{rule.support}\t{rule.confidence}")
    return "\n".join(lines) + "\n"
