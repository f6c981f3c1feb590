from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contextrec.errors import DomainError
from contextrec.recommend import (
    Level,
    apply_recommendations,
    discover_communities,
    format_communities,
    format_recommendation,
    interest_update,
    recommend_friends,
)
from contextrec.social import build_social_graph, load_social


@pytest.fixture(scope="module")
def net():
    from conftest import DATA

    return load_social(DATA / "network16.tsv")


@pytest.fixture(scope="module")
def communities(net):
    return discover_communities(net)


def members(communities, level):
    return [c.sorted_members() for c in communities if c.level is level]


def test_location_pass(communities):
    assert members(communities, Level.LOCATION) == [
        ["U1", "U2", "U3", "U4", "U5", "U6"],
        ["U7", "U9", "U10"],
        ["U8", "U12", "U13"],
        ["U11", "U14", "U15", "U16"],
    ]
    assert [c.location_label for c in communities if c.level is Level.LOCATION] == ["L1", "L2", "L3", "L4"]


def test_interest_pass(communities):
    inner = [(c.interest_label, c.sorted_members()) for c in communities if c.level is Level.INTEREST]
    assert inner == [
        ("I1", ["U1", "U5"]),
        ("I2", ["U2", "U3"]),
        ("I3", ["U4", "U6"]),
        ("I4", ["U7", "U9", "U10"]),
        ("I5", ["U8", "U12", "U13"]),
        ("I6", ["U11", "U16"]),
        ("I7", ["U14", "U15"]),
    ]


def test_recommend_u8(net, communities):
    rec = recommend_friends(net, communities, "U8")
    assert rec.persons == ["U12", "U13"]
    assert format_recommendation(rec) == "U8\tU12\tL3\tI5\nU8\tU13\tL3\tI5\n"


def test_recommend_edge_cases(net, communities):
    # U12 and U13 know each other; U12 still gets U8
    assert recommend_friends(net, communities, "U12").persons == ["U8"]
    # U15 knows U16 but not U14
    assert recommend_friends(net, communities, "U15").persons == ["U14"]
    with pytest.raises(DomainError):
        recommend_friends(net, communities, "U99")
    solo = build_social_graph([], [("a", "x")], [("a", "l")])
    found = discover_communities(solo)
    assert [(c.level, c.sorted_members()) for c in found] == [(Level.LOCATION, ["a"]), (Level.INTEREST, ["a"])]
    assert recommend_friends(solo, found, "a").persons == []


def test_all_friends_already(communities):
    sg = build_social_graph([("a", "b")], [("a", "x"), ("b", "x")], [("a", "l"), ("b", "l")])
    assert recommend_friends(sg, discover_communities(sg), "a").persons == []


def test_apply_recommendations(net, communities):
    rec = recommend_friends(net, communities, "U8")
    grown = apply_recommendations(net, rec, ["U12", "U13"])
    assert len(grown.knows) == len(net.knows) + 2
    assert apply_recommendations(net, rec, []) == net
    with pytest.raises(DomainError):
        apply_recommendations(net, rec, ["U1"])
    with pytest.raises(DomainError):
        apply_recommendations(grown, rec, ["U12"])


def test_interest_update_bridges_strangers():
    sg = build_social_graph([], [("a", "x"), ("b", "y"), ("c", "z")], [("a", "l"), ("b", "l"), ("c", "l")])
    assert recommend_friends(sg, discover_communities(sg), "a").persons == []
    updated = interest_update(sg, "b", "x")
    assert recommend_friends(updated, discover_communities(updated), "a").persons == ["b"]
    assert interest_update(updated, "b", "x") == updated
    with pytest.raises(DomainError):
        interest_update(sg, "nobody", "x")


def test_communities_format(communities):
    text = format_communities(communities)
    lines = text.splitlines()
    assert len(lines) == 11
    assert lines[0] == "location\tL1\tU1,U2,U3,U4,U5,U6"
    assert lines[8] == "interest\tL3/I5\tU8,U12,U13"


@st.composite
def social_graphs(draw):
    n = draw(st.integers(1, 9))
    persons = [f"p{i}" for i in range(n)]
    located = [(p, draw(st.sampled_from(["l1", "l2"]))) for p in persons]
    interests = [(p, i) for p in persons for i in draw(st.sets(st.sampled_from(["a", "b", "c"]), max_size=2))]
    knows = draw(st.lists(st.tuples(st.sampled_from(persons), st.sampled_from(persons)), max_size=8))
    return build_social_graph(knows, interests, located)


@settings(max_examples=150, deadline=None)
@given(social_graphs(), st.data())
def test_recommendation_properties(sg, data):
    found = discover_communities(sg)
    for level in Level:
        blocks = [c.members for c in found if c.level is level]
        assert sorted(p for b in blocks for p in b) == sorted(sg.persons)
    target = data.draw(st.sampled_from(sg.sorted_persons()))
    rec = recommend_friends(sg, found, target)
    for person, community in rec.candidates:
        assert person != target and not sg.knows_each_other(person, target)
        assert sg.location[person] == sg.location[target]
        assert community.interest_label in sg.interests[target]
        assert {person, target} <= community.members
    accepted = rec.persons[: data.draw(st.integers(0, len(rec.persons)))]
    grown = apply_recommendations(sg, rec, accepted)
    assert grown.degree(target) == sg.degree(target) + len(accepted)
    assert grown.interests == sg.interests and grown.location == sg.location
