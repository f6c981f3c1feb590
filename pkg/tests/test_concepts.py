from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contextrec.concepts import (
    DCTERMS_SUBJECT,
    RDFS_LABEL,
    Iri,
    Literal,
    Triple,
    TripleStore,
    concept_by_label,
    concept_token,
    extract_interest,
    is_category,
    most_frequent,
    parse_ntriples,
    serialize_ntriples,
)
from contextrec.errors import DomainError, ParseError

R = "http://dbpedia.org/resource/"
CAT = R + "Category:"


@pytest.fixture(scope="module")
def store():
    from conftest import DATA

    return TripleStore.from_text((DATA / "concepts.nt").read_text(encoding="utf-8"))


def test_parse_grammar():
    (t,) = parse_ntriples("<u:a> <foaf:knows> <u:b> .")
    assert t == Triple(Iri("u:a"), Iri("foaf:knows"), Iri("u:b"))
    (lab,) = parse_ntriples('<c:MonaLisa> <rdfs:label> "Mona Lisa"@en .')
    assert lab.object == Literal("Mona Lisa", "en")
    (plain,) = parse_ntriples('<c:x> <c:p> "say \\"hi\\"\\n" . # trailing comment')
    assert plain.object == Literal('say "hi"\n')
    assert parse_ntriples("# only a comment\n\n") == []


@pytest.mark.parametrize(
    "text,line",
    [
        ("<u:a> <foaf:knows> <u:b>", 1),
        ("<u:a> <u:p> <u:b> .\n_:b0 <u:p> <u:c> .", 2),
        ('<u:a> <u:p> "1"^^<u:int> .', 1),
        ('<u:a> <u:p> "bad \\u0041" .', 1),
        ('"lit" <u:p> <u:b> .', 1),
        ("<noscheme> <u:p> <u:b> .", 1),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_ntriples(text)
    assert info.value.line == line


def test_language_tags_lowercased():
    (t,) = parse_ntriples('<u:a> <u:p> "x"@EN-GB .')
    assert t.object.lang == "en-gb"


def test_query_examples(store):
    subjects = store.query(Iri(R + "Mona_Lisa"), Iri(DCTERMS_SUBJECT))
    assert [t.object for t in subjects] == [Iri(CAT + "1500s_paintings"), Iri(CAT + "Art"), Iri(CAT + "Film")]
    full = Triple(Iri(R + "Mona_Lisa"), Iri(DCTERMS_SUBJECT), Iri(CAT + "Art"))
    assert store.query(full.subject, full.predicate, full.object) == [full]
    assert store.query(Iri(R + "Nothing")) == []


def test_unconstrained_query_is_flagged(store, caplog):
    with caplog.at_level("WARNING"):
        assert len(store.query()) == len(store)
    assert "unconstrained" in caplog.text


def test_concept_by_label(store):
    assert concept_by_label(store, "Mona Lisa") == Iri(R + "Mona_Lisa")
    assert concept_by_label(store, "mona  lisa ") == Iri(R + "Mona_Lisa")
    assert concept_by_label(store, "MONA_LISA") == Iri(R + "Mona_Lisa")
    assert concept_by_label(store, "zzz-unknown") is None


def test_concept_by_label_prefers_smallest_iri():
    store = TripleStore.from_text(
        f'<u:z> <{RDFS_LABEL}> "same"@en .\n<u:a> <{RDFS_LABEL}> "Same"@fr .\n'
    )
    assert concept_by_label(store, "same") == Iri("u:a")


def test_is_category(store):
    assert is_category(store, Iri(CAT + "Sport"))
    assert not is_category(store, Iri(R + "Mona_Lisa"))
    # structural rule without the namespace prefix
    s = TripleStore.from_text("<u:child> <http://www.w3.org/2004/02/skos/core#broader> <u:parent> .")
    assert is_category(s, Iri("u:parent"), category_prefix="")
    assert not is_category(s, Iri("u:child"), category_prefix="")


def test_extract_interest_category_branch(store):
    got = extract_interest(store, Iri(CAT + "Sport"), Iri(R + "Beach"), depth=2)
    assert [concept_token(c) for c in got] == [
        "beach_polo",
        "beach_soccer",
        "beach_sports",
        "beach_volleyball",
        "rowing",
        "water_sports",
    ]
    winter = extract_interest(store, Iri(CAT + "Sport"), Iri(R + "Mountain"), depth=2)
    assert [concept_token(c) for c in winter] == ["climbing", "skiing", "snowboarding", "winter_sports"]


def test_extract_interest_subject_branch(store):
    assert extract_interest(store, Iri(R + "Mona_Lisa"), Iri(R + "Museum"), depth=2) == [Iri(CAT + "Art")]
    assert extract_interest(store, Iri(R + "Mona_Lisa"), Iri(R + "Movie_theater"), depth=2) == [Iri(CAT + "Film")]


def test_extract_interest_empty_and_errors(store):
    assert extract_interest(store, Iri(R + "Puma_(brand)"), Iri(R + "Beach"), depth=2) == []
    with pytest.raises(DomainError):
        extract_interest(store, Iri(R + "Atlantis"), Iri(R + "Beach"))


def test_most_frequent():
    a, b = Iri("u:a"), Iri("u:b")
    assert most_frequent([a, b, a]) == a
    assert most_frequent([b, a]) == a
    assert most_frequent([b]) == b
    with pytest.raises(ValueError):
        most_frequent([])


def test_roundtrip_fixture(store):
    text = serialize_ntriples(store.triples)
    assert frozenset(parse_ntriples(text)) == store.triples


def test_extract_interest_invariant_under_reordering(store):
    triples = list(store.triples)
    rng = random.Random(3)
    for _ in range(5):
        rng.shuffle(triples)
        shuffled = TripleStore.from_text(serialize_ntriples(triples[::-1]))
        assert extract_interest(shuffled, Iri(CAT + "Sport"), Iri(R + "Beach")) == extract_interest(
            store, Iri(CAT + "Sport"), Iri(R + "Beach")
        )


iris = st.sampled_from([Iri(f"u:n{i}") for i in range(5)])
terms = st.one_of(iris, st.builds(Literal, st.text(min_size=0, max_size=6), st.sampled_from([None, "en", "fr"])))
triples = st.builds(Triple, iris, st.sampled_from([Iri("u:p"), Iri("u:q")]), terms)


@settings(max_examples=80, deadline=None)
@given(st.lists(triples, max_size=25), st.one_of(st.none(), iris), st.one_of(st.none(), st.sampled_from([Iri("u:p"), Iri("u:q")])), st.one_of(st.none(), terms))
def test_query_matches_pattern(items, s, p, o):
    store = TripleStore(frozenset(items))
    hits = store.query(s, p, o)
    assert set(hits) <= store.triples
    expected = {t for t in store.triples if (s is None or t.subject == s) and (p is None or t.predicate == p) and (o is None or t.object == o)}
    assert set(hits) == expected
    assert hits == sorted(hits, key=Triple.sort_key)
    # serializer escapes whatever the literal strategy produced
    assert frozenset(parse_ntriples(serialize_ntriples(items))) == frozenset(items)
