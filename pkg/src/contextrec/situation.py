"""Semantic situation of a mobile user: (location type, season, day part)."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import ParseError, UnmappedLocation
from .itemsets import DAYPARTS, SEASONS, Dimension, Item, normalize_token

EARTH_RADIUS_M = 6_371_008.8


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class CivilTime:
    year: int
    month: int
    day: int
    hour: int = 0
    minute: int = 0

    def __post_init__(self) -> None:
        # raises ValueError on an impossible date or time
        dt.datetime(self.year, self.month, self.day, self.hour, self.minute)

    @classmethod
    def parse(cls, text: str) -> "CivilTime":
        """Parse ``YYYY-MM-DD[THH:MM[:SS]]`` (or with a space separator)."""
        try:
            stamp = dt.datetime.fromisoformat(text.strip())
        except ValueError:
            raise ValueError(f"not an ISO timestamp: {text!r}") from None
        return cls(stamp.year, stamp.month, stamp.day, stamp.hour, stamp.minute)

    def isoformat(self) -> str:
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}T{self.hour:02d}:{self.minute:02d}"


@dataclass(frozen=True)
class Situation:
    location_type: str
    season: str
    day_part: str

    def __post_init__(self) -> None:
        loc = normalize_token(self.location_type)
        season = normalize_token(self.season)
        part = normalize_token(self.day_part)
        if not loc:
            raise ValueError("location type must be non-empty")
        if season not in SEASONS:
            raise ValueError(f"unknown season {self.season!r}")
        if part not in DAYPARTS:
            raise ValueError(f"unknown day part {self.day_part!r}")
        object.__setattr__(self, "location_type", loc)
        object.__setattr__(self, "season", season)
        object.__setattr__(self, "day_part", part)

    def items(self) -> frozenset:
        return frozenset(
            [
                Item(self.location_type, Dimension.LOCATION),
                Item(self.season, Dimension.SEASON),
                Item(self.day_part, Dimension.DAYPART),
            ]
        )

    def value(self, dimension: Dimension) -> str | None:
        return {
            Dimension.LOCATION: self.location_type,
            Dimension.SEASON: self.season,
            Dimension.DAYPART: self.day_part,
        }.get(dimension)

    def __str__(self) -> str:
        return f"({self.location_type}, {self.season}, {self.day_part})"


@dataclass(frozen=True)
class GazetteerEntry:
    center: GeoPoint
    radius_m: float
    location_type: str

    def __post_init__(self) -> None:
        if not self.radius_m > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "location_type", normalize_token(self.location_type))


@dataclass(frozen=True)
class Gazetteer:
    entries: tuple[GazetteerEntry, ...]

    @classmethod
    def load(cls, path: str | Path) -> "Gazetteer":
        path = Path(path)
        entries = []
        for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cells = line.split("\t")
            if len(cells) != 4:
                raise ParseError(f"expected 4 columns, got {len(cells)}", lineno, str(path))
            try:
                entries.append(
                    GazetteerEntry(GeoPoint(float(cells[0]), float(cells[1])), float(cells[2]), cells[3])
                )
            except ValueError as exc:
                raise ParseError(str(exc), lineno, str(path)) from None
        return cls(tuple(entries))


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def location_type(gz: Gazetteer, p: GeoPoint) -> str:
    """Type of the nearest gazetteer entry whose radius covers ``p``."""
    if not gz.entries:
        raise ValueError("gazetteer is empty")
    hits = []
    for entry in gz.entries:
        d = haversine_m(entry.center, p)
        if d <= entry.radius_m:
            hits.append((d, entry.location_type))
    if not hits:
        raise UnmappedLocation(f"no gazetteer entry covers ({p.lat}, {p.lon})")
    return min(hits)[1]


def season_of(t: CivilTime) -> str:
    # meteorological seasons, northern hemisphere
    return ("hiver", "printemps", "été", "automne")[(t.month % 12) // 3]


def day_part_of(t: CivilTime) -> str:
    if 4 <= t.hour < 12:
        return "matin"
    if 12 <= t.hour < 17:
        return "midi"
    return "soir"


def build_situation(gz: Gazetteer, p: GeoPoint, t: CivilTime) -> Situation:
    return Situation(location_type(gz, p), season_of(t), day_part_of(t))


def overlap(a: Situation, b: Iterable[Item]) -> int:
    """Number of dimension values of ``b`` that agree with situation ``a``.

    Class items in ``b`` are ignored.
    """
    seen: set[Dimension] = set()
    score = 0
    for item in b:
        if item.dimension is Dimension.CLASS:
            continue
        if item.dimension in seen:
            raise ValueError(f"more than one {item.dimension.value} token")
        seen.add(item.dimension)
        if a.value(item.dimension) == item.value:
            score += 1
    return score


def similar(a: Situation, b: Iterable[Item]) -> bool:
    return overlap(a, b) >= 2
