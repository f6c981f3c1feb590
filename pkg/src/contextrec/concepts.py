"""Local triple store with an N-Triples subset parser and concept lookups.

The store stands in for a remote knowledge base: it answers single
triple-pattern queries, finds concepts by ``rdfs:label`` and extracts
candidate interests by following ``skos:broader`` / ``dcterms:subject`` links.

Supported N-Triples subset::

    <subject> <predicate> <object> .
    <subject> <predicate> "literal" .
    <subject> <predicate> "literal"@lang .

Blank nodes, datatyped literals and escapes other than ``\\"`` ``\\\\``
``\\n`` ``\\t`` are rejected.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .errors import DomainError, ParseError

log = logging.getLogger(__name__)

# Predicate and namespace IRIs, bit-exact.
FOAF = "http://xmlns.com/foaf/0.1/"
FOAF_KNOWS = FOAF + "knows"
FOAF_INTEREST = FOAF + "interest"
FOAF_BASED_NEAR = FOAF + "based_near"
FOAF_NAME = FOAF + "name"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
SKOS_BROADER = "http://www.w3.org/2004/02/skos/core#broader"
DCTERMS_SUBJECT = "http://purl.org/dc/terms/subject"
DBPEDIA_RESOURCE = "http://dbpedia.org/resource/"
CATEGORY_PREFIX = DBPEDIA_RESOURCE + "Category:"


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not self.value or any(c in self.value for c in "<> \t\n\"{}|\\^`"):
            raise ValueError(f"invalid IRI {self.value!r}")
        if ":" not in self.value:
            raise ValueError(f"IRI must be absolute: {self.value!r}")

    def n3(self) -> str:
        return f"<{self.value}>"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Literal:
    value: str
    lang: str | None = None

    def __post_init__(self) -> None:
        if self.lang is not None:
            if not re.fullmatch(r"[A-Za-z]+(-[A-Za-z0-9]+)*", self.lang):
                raise ValueError(f"invalid language tag {self.lang!r}")
            object.__setattr__(self, "lang", self.lang.lower())

    def n3(self) -> str:
        escaped = (
            self.value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        )
        return f'"{escaped}"' + (f"@{self.lang}" if self.lang else "")

    def __str__(self) -> str:
        return self.value


Term = Union[Iri, Literal]


def term_key(term: Term) -> tuple:
    if isinstance(term, Iri):
        return (0, term.value, "")
    return (1, term.value, term.lang or "")


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.subject, Iri) or not isinstance(self.predicate, Iri):
            raise ValueError("subject and predicate must be IRIs")

    def sort_key(self) -> tuple:
        return (self.subject.value, self.predicate.value, term_key(self.object))

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


_IRI = r"<([^<>\s\"]*)>"
_LITERAL = r"\"((?:[^\"\\]|\\.)*)\"(?:@([A-Za-z]+(?:-[A-Za-z0-9]+)*))?"
_LINE = re.compile(rf"^\s*{_IRI}\s+{_IRI}\s+(?:{_IRI}|{_LITERAL})\s*\.\s*(?:#.*)?$")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


def _unescape(raw: str, lineno: int) -> str:
    out = []
    chars = iter(raw)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(chars, "")
        if nxt not in _ESCAPES:
            raise ParseError(f"unsupported escape \\{nxt}", lineno)
        out.append(_ESCAPES[nxt])
    return "".join(out)


def _diagnose(line: str) -> str:
    stripped = line.strip()
    if stripped.startswith("_:") or " _:" in stripped:
        return "blank nodes are not supported"
    if "^^" in stripped:
        return "datatyped literals are not supported"
    if not stripped.endswith("."):
        return "missing terminating '.'"
    return "malformed statement"


def parse_ntriples(text: str) -> list[Triple]:
    """Parse an N-Triples document; the first bad line aborts the whole parse."""
    triples = []
    # only \n (optionally preceded by \r) ends a statement
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.removesuffix("\r")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE.match(line)
        if not m:
            raise ParseError(_diagnose(line), lineno)
        s, p, o_iri, o_lit, o_lang = m.groups()
        try:
            obj: Term = Iri(o_iri) if o_iri is not None else Literal(_unescape(o_lit, lineno), o_lang)
            triples.append(Triple(Iri(s), Iri(p), obj))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return triples


def serialize_ntriples(triples: Iterable[Triple]) -> str:
    return "".join(t.n3() + "\n" for t in sorted(set(triples), key=Triple.sort_key))


@dataclass(frozen=True)
class TripleStore:
    triples: frozenset
    _by_s: dict = field(init=False, repr=False, compare=False)
    _by_p: dict = field(init=False, repr=False, compare=False)
    _by_o: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        triples = frozenset(self.triples)
        object.__setattr__(self, "triples", triples)
        by_s, by_p, by_o = defaultdict(set), defaultdict(set), defaultdict(set)
        for t in triples:
            by_s[t.subject].add(t)
            by_p[t.predicate].add(t)
            by_o[t.object].add(t)
        object.__setattr__(self, "_by_s", dict(by_s))
        object.__setattr__(self, "_by_p", dict(by_p))
        object.__setattr__(self, "_by_o", dict(by_o))

    @classmethod
    def from_text(cls, text: str) -> "TripleStore":
        return cls(frozenset(parse_ntriples(text)))

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, term: object) -> bool:
        return term in self._by_s or term in self._by_o

    def query(
        self, subject: Iri | None = None, predicate: Iri | None = None, obj: Term | None = None
    ) -> list[Triple]:
        bound = [
            (index, key)
            for index, key in ((self._by_s, subject), (self._by_p, predicate), (self._by_o, obj))
            if key is not None
        ]
        if not bound:
            log.warning("unconstrained triple pattern: scanning %d triples", len(self.triples))
            hits: Iterable[Triple] = self.triples
        else:
            candidate_sets = [index.get(key, set()) for index, key in bound]
            hits = set.intersection(*map(set, candidate_sets))
        return sorted(hits, key=Triple.sort_key)

    def objects(self, subject: Iri, predicate: Iri) -> list[Term]:
        return [t.object for t in self.query(subject, predicate)]

    def subjects(self, predicate: Iri, obj: Term) -> list[Iri]:
        return [t.subject for t in self.query(None, predicate, obj)]


def normalize_label(text: str) -> str:
    text = unicodedata.normalize("NFC", text).casefold().replace("_", " ")
    return " ".join(text.split())


def concept_by_label(store: TripleStore, label: str) -> Iri | None:
    """Concept whose ``rdfs:label`` matches ``label`` up to case and spacing."""
    wanted = normalize_label(label)
    if not wanted:
        return None
    hits = [
        t.subject
        for t in store.query(None, Iri(RDFS_LABEL))
        if isinstance(t.object, Literal) and normalize_label(t.object.value) == wanted
    ]
    return min(hits) if hits else None


def is_category(store: TripleStore, concept: Iri, category_prefix: str = CATEGORY_PREFIX) -> bool:
    if category_prefix and concept.value.startswith(category_prefix):
        return True
    return bool(store.query(None, Iri(SKOS_BROADER), concept))


def _neighbourhood(store: TripleStore, start: Iri, depth: int, blocked: Iri) -> set[Iri]:
    """Concepts within ``depth`` undirected broader/subject hops of ``start``."""
    preds = (Iri(SKOS_BROADER), Iri(DCTERMS_SUBJECT))
    seen = {start: 0}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if seen[node] == depth:
            continue
        nbrs = []
        for p in preds:
            nbrs.extend(o for o in store.objects(node, p) if isinstance(o, Iri))
            nbrs.extend(store.subjects(p, node))
        for nbr in nbrs:
            if nbr == blocked or nbr in seen:
                continue
            seen[nbr] = seen[node] + 1
            queue.append(nbr)
    return set(seen)


def _subcategories(store: TripleStore, category: Iri, depth: int) -> set[Iri]:
    broader = Iri(SKOS_BROADER)
    found: dict[Iri, int] = {category: 0}
    queue = deque([category])
    while queue:
        node = queue.popleft()
        if found[node] == depth:
            continue
        for child in store.subjects(broader, node):
            if child not in found:
                found[child] = found[node] + 1
                queue.append(child)
    found.pop(category)
    return set(found)


def extract_interest(
    store: TripleStore,
    query_concept: Iri,
    location_concept: Iri,
    depth: int = 2,
    category_prefix: str = CATEGORY_PREFIX,
) -> list[Iri]:
    """Candidate interest concepts for a query issued at a location.

    A category query yields its sub-categories (up to ``depth`` broader hops);
    any other concept yields its ``dcterms:subject`` categories.  Either way a
    candidate is kept only if it lies within ``depth`` broader/subject hops of
    the location concept, not counting paths through the query concept.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    for concept in (query_concept, location_concept):
        if concept not in store:
            raise DomainError(f"unknown concept {concept.value}")
    if is_category(store, query_concept, category_prefix):
        candidates = _subcategories(store, query_concept, depth)
    else:
        candidates = {o for o in store.objects(query_concept, Iri(DCTERMS_SUBJECT)) if isinstance(o, Iri)}
    near = _neighbourhood(store, location_concept, depth, blocked=query_concept)
    return sorted(candidates & near)


def most_frequent(concepts: Sequence[Iri]) -> Iri:
    if not concepts:
        raise ValueError("no concepts to choose from")
    counts = Counter(concepts)
    return min(counts, key=lambda c: (-counts[c], c))


def concept_token(concept: Iri) -> str:
    """Interest token for a concept: its local name without category prefix."""
    local = re.split(r"[/#]", concept.value)[-1]
    if local.startswith("Category:"):
        local = local[len("Category:"):]
    return "_".join(unicodedata.normalize("NFC", local).lower().replace("_", " ").split())
