"""Evaluation: precision metrics, diary records, growth statistics, benchmarks.

Precision values are exact fractions.  The benchmark times Walktrap against
Girvan-Newman on seeded planted-partition graphs and also reports the
modularity each one reaches.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import statistics
import time
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .community import detect_communities, girvan_newman, modularity
from .enrichment import CbrCase, CbrConfig, RuleBase, cbr_select, eligible_rules, select_rule
from .errors import ParseError, UndefinedPrecision
from .itemsets import normalize_token
from .situation import CivilTime, Gazetteer, GeoPoint, Situation, build_situation, day_part_of, season_of
from .social import SimpleGraph, SocialGraph, node_key


def precision(returned: Iterable, relevant: Iterable) -> Fraction:
    returned = set(returned)
    if not returned:
        raise UndefinedPrecision("precision of an empty result list is undefined")
    return Fraction(len(returned & set(relevant)), len(returned))


@dataclass(frozen=True)
class Judgment:
    query_id: str
    returned: tuple
    relevant: frozenset

    def __post_init__(self) -> None:
        if len(set(self.returned)) != len(self.returned):
            raise ValueError(f"duplicate resources in results of {self.query_id}")


def precision_at_k(j: Judgment, k: int = 10) -> Fraction:
    if k < 1:
        raise ValueError("k must be >= 1")
    return precision(j.returned[:k], j.relevant)


def mean_precision(values: Iterable[Fraction]) -> Fraction:
    values = [Fraction(v) for v in values]
    if not values:
        raise ValueError("mean of no values")
    return sum(values, Fraction(0)) / len(values)


def load_judgments(path: str | Path) -> list[Judgment]:
    """Judgments TSV ``query_id  rank  resource_id  relevant(0/1)``."""
    path = Path(path)
    rows: dict[str, dict[int, tuple[str, bool]]] = defaultdict(dict)
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.split("\t")
        if cells[:2] == ["query_id", "rank"]:
            continue
        if len(cells) != 4:
            raise ParseError(f"expected 4 columns, got {len(cells)}", lineno, str(path))
        qid, rank, resource, flag = (c.strip() for c in cells)
        if flag not in ("0", "1"):
            raise ParseError(f"relevance must be 0 or 1, got {flag!r}", lineno, str(path))
        try:
            r = int(rank)
        except ValueError:
            raise ParseError(f"rank must be an integer, got {rank!r}", lineno, str(path)) from None
        if r in rows[qid]:
            raise ParseError(f"duplicate rank {r} for {qid}", lineno, str(path))
        rows[qid][r] = (resource, flag == "1")
    judgments = []
    for qid in sorted(rows, key=node_key):
        ranked = [rows[qid][r] for r in sorted(rows[qid])]
        try:
            judgments.append(
                Judgment(qid, tuple(res for res, _ in ranked), frozenset(res for res, ok in ranked if ok))
            )
        except ValueError as exc:
            raise ParseError(str(exc), None, str(path)) from None
    return judgments


@dataclass(frozen=True)
class PrecisionRow:
    system: str
    query_id: str
    precision: Fraction


def precision_report(systems: Mapping[str, Sequence[Judgment]], k: int = 10) -> tuple[list[PrecisionRow], dict[str, Fraction]]:
    rows = [PrecisionRow(name, j.query_id, precision_at_k(j, k)) for name, js in systems.items() for j in js]
    means = {name: mean_precision(precision_at_k(j, k) for j in js) for name, js in systems.items()}
    return rows, means


# -- diary records and the predictor comparison ----------------------------------


@dataclass(frozen=True)
class QueryRecord:
    user: str
    time: CivilTime
    location: GeoPoint | str
    interest: str
    query: str

    def __post_init__(self) -> None:
        if not self.query.strip():
            raise ValueError("query must be non-empty")

    def situation(self, gazetteer: Gazetteer | None = None) -> Situation:
        if isinstance(self.location, GeoPoint):
            if gazetteer is None:
                raise ValueError("a gazetteer is needed to map coordinates")
            return build_situation(gazetteer, self.location, self.time)
        return Situation(self.location, season_of(self.time), day_part_of(self.time))


def _parse_location(cell: str) -> GeoPoint | str:
    if "," in cell:
        lat, lon = cell.split(",", 1)
        try:
            return GeoPoint(float(lat), float(lon))
        except ValueError:
            pass
    return normalize_token(cell)


DIARY_HEADER = ["user", "time", "location", "interest", "query"]


def load_diary(path: str | Path) -> list[QueryRecord]:
    """Diary TSV ``user  time  location  interest  query``.

    ``location`` is either ``lat,lon`` or an already mapped location type.
    """
    path = Path(path)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.split("\t")
        if cells == DIARY_HEADER:
            continue
        if len(cells) != 5:
            raise ParseError(f"expected 5 columns, got {len(cells)}", lineno, str(path))
        user, stamp, where, interest, query = (c.strip() for c in cells)
        try:
            records.append(
                QueryRecord(user, CivilTime.parse(stamp), _parse_location(where), interest.lower(), query)
            )
        except ValueError as exc:
            raise ParseError(str(exc), lineno, str(path)) from None
    return records


@dataclass(frozen=True)
class PredictionRow:
    index: int
    query: str
    truth: str
    rules: str | None
    cbr: str | None


def compare_predictors(
    records: Sequence[QueryRecord],
    rb: RuleBase,
    gazetteer: Gazetteer | None = None,
    cfg: CbrConfig = CbrConfig(),
) -> tuple[list[PredictionRow], dict[str, Fraction]]:
    """Rule classifier against leave-one-out CBR on the same records.

    Returns per-record predictions and the fraction of records each predictor
    labels correctly.
    """
    situations = [r.situation(gazetteer) for r in records]
    rows = []
    for i, (rec, s) in enumerate(zip(records, situations)):
        chosen = select_rule(eligible_rules(rb, s))
        cases = [CbrCase(situations[j], records[j].interest) for j in range(len(records)) if j != i]
        hit = cbr_select(cases, s, cfg)
        rows.append(
            PredictionRow(i + 1, rec.query, rec.interest, chosen[0].interest if chosen else None, hit[0].interest if hit else None)
        )
    n = len(rows) or 1
    accuracy = {
        "rules": Fraction(sum(r.rules == r.truth for r in rows), n),
        "cbr": Fraction(sum(r.cbr == r.truth for r in rows), n),
    }
    return rows, accuracy


# -- community growth ------------------------------------------------------------------


def average_degree(sg: SocialGraph, members: Iterable[str]) -> Fraction:
    members = list(members)
    if not members:
        raise ValueError("empty community")
    return Fraction(sum(sg.degree(m) for m in members), len(members))


def growth_percent(before: Fraction, after: Fraction) -> Fraction | None:
    """Percent increase, or ``None`` when the starting value is zero."""
    before, after = Fraction(before), Fraction(after)
    if before == 0:
        return None
    return (after - before) / before * 100


@dataclass(frozen=True)
class GrowthRow:
    community: str
    before: Fraction
    after: Fraction
    percent: Fraction | None


def growth_stats(before: SocialGraph, after: SocialGraph, communities: Mapping[str, Iterable[str]]) -> list[GrowthRow]:
    if before.persons != after.persons:
        raise ValueError("growth needs the same person set before and after")
    rows = []
    for name, members in communities.items():
        members = list(members)
        b, a = average_degree(before, members), average_degree(after, members)
        rows.append(GrowthRow(name, b, a, growth_percent(b, a)))
    return rows


def format_percent(p: Fraction | None) -> str:
    return "undefined" if p is None else f"{float(p):.2f}"


# -- benchmark ----------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    """Planted partition: blocks of ``block_size``; ``out_degree`` expected
    links per node leave its block."""

    block_size: int = 25
    p_in: float = 0.2
    out_degree: float = 1.2
    seed: int = 7
    t: int = 4

    def __post_init__(self) -> None:
        if self.block_size < 1 or not 0 <= self.p_in <= 1 or self.out_degree < 0 or self.t < 1:
            raise ValueError(f"invalid benchmark configuration {self}")


def planted_partition(n: int, cfg: BenchConfig = BenchConfig()) -> SimpleGraph:
    if n < 2:
        raise ValueError("benchmark graphs need at least 2 nodes")
    rng = np.random.default_rng([cfg.seed, n])
    block = np.arange(n) // cfg.block_size
    outside = n - cfg.block_size
    p_out = min(1.0, cfg.out_degree / outside) if outside > 0 else 0.0
    i, j = np.triu_indices(n, k=1)
    p = np.where(block[i] == block[j], cfg.p_in, p_out)
    keep = rng.random(len(p)) < p
    names = [f"v{k}" for k in range(n)]
    return SimpleGraph(names, ((names[a], names[b]) for a, b in zip(i[keep], j[keep])))


def edge_checksum(g: SimpleGraph) -> str:
    text = "".join(f"{u}\t{v}\n" for u, v in g.edges())
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class BenchRow:
    algorithm: str
    n: int
    edges: int
    seconds: float
    modularity: float
    communities: int
    checksum: str


def _median_time(fn: Callable[[], object], repetitions: int, warmup: int, timer: Callable[[], float]):
    result = None
    for _ in range(warmup):
        result = fn()
    samples = []
    for _ in range(repetitions):
        start = timer()
        result = fn()
        samples.append(timer() - start)
    return statistics.median(samples), result


def bench_compare(
    sizes: Sequence[int],
    cfg: BenchConfig = BenchConfig(),
    repetitions: int = 5,
    warmup: int = 1,
    timer: Callable[[], float] = time.perf_counter,
) -> list[BenchRow]:
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    algorithms = {
        "walktrap": lambda g: detect_communities(g, cfg.t),
        "girvan_newman": girvan_newman,
    }
    rows = []
    for n in sizes:
        g = planted_partition(n, cfg)
        checksum = edge_checksum(g)
        for name, algo in algorithms.items():
            seconds, part = _median_time(lambda: algo(g), repetitions, warmup, timer)
            rows.append(BenchRow(name, n, g.number_of_edges(), seconds, modularity(g, part), len(part), checksum))
    return rows


# -- reports ------------------------------------------------------------------------


def _cell(value: object) -> str:
    if isinstance(value, Fraction):
        return str(value) if value.denominator == 1 else f"{float(value):.6g}"
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "undefined"
    return str(value)


def _plain(value: object) -> object:
    if isinstance(value, Fraction):
        return {"fraction": str(value), "value": float(value)}
    return value


def to_tsv(rows: Sequence[object]) -> str:
    if not rows:
        return ""
    names = [f.name for f in dataclasses.fields(rows[0])]
    lines = ["\t".join(names)]
    lines += ["\t".join(_cell(getattr(r, k)) for k in names) for r in rows]
    return "\n".join(lines) + "\n"


def to_jsonl(rows: Sequence[object]) -> str:
    return "".join(
        json.dumps({k: _plain(v) for k, v in dataclasses.asdict(r).items()}, ensure_ascii=False, sort_keys=True) + "\n"
        for r in rows
    )

