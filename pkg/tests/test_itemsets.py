from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contextrec.errors import DerivationError, DomainError, ParseError
from contextrec.itemsets import (
    AssociationRule,
    Dimension,
    FormalContext,
    Item,
    RuleKind,
    class_rules,
    closure,
    derive,
    dump_rule_base,
    generate_igb,
    load_context,
    load_rule_base,
    mine_closed,
    support,
)

from generators import random_context
from oracles import bf_closed_patterns, bf_igb

S, D, L, C = Dimension.SEASON, Dimension.DAYPART, Dimension.LOCATION, Dimension.CLASS


def iset(*pairs):
    return frozenset(Item(v, d) for d, v in pairs)


@pytest.fixture
def ctx(data_dir):
    return load_context(data_dir / "context.tsv")


def test_load_fixture(ctx):
    assert len(ctx) == 5
    # 4 seasons seen (automne, printemps, été, hiver) + 3 day parts + 5 places + 4 classes
    assert len(ctx.universe) == 16
    assert iset((S, "printemps"), (D, "soir"), (L, "théâtre"), (C, "art")) in ctx.transactions


def test_load_empty_and_errors(tmp_path):
    p = tmp_path / "empty.tsv"
    p.write_text("season\tdaypart\tlocation\tclass\n", encoding="utf-8")
    assert len(load_context(p)) == 0

    bad = tmp_path / "bad.tsv"
    bad.write_text("season\tdaypart\tlocation\tclass\nété\tmatin\tplage\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":2:"):
        load_context(bad)

    two = tmp_path / "two.tsv"
    two.write_text("season\tclass\tclass\nété\tart\tsurf\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_context(two)

    two_values = tmp_path / "twovals.tsv"
    two_values.write_text("season\tclass\nété\tart\nhiver\tart,surf\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":3:"):
        load_context(two_values)


def test_closure_examples(ctx):
    assert closure(ctx, iset((D, "midi"))) == iset((D, "midi"))
    assert closure(ctx, iset((S, "printemps"))) == iset(
        (S, "printemps"), (D, "soir"), (L, "théâtre"), (C, "art")
    )
    assert closure(ctx, frozenset()) == frozenset()
    # empty extent closes to the universe
    assert closure(ctx, iset((D, "soir"), (L, "plage"))) == ctx.universe
    with pytest.raises(DomainError):
        closure(ctx, iset((L, "lune")))


def test_support_examples(ctx):
    assert support(ctx, iset((S, "printemps"), (D, "soir"))) == Fraction(1, 5)
    assert support(ctx, frozenset()) == 1
    assert support(ctx, iset((S, "été"), (D, "matin"))) == Fraction(1, 5)


def test_mine_closed_examples(ctx):
    pats = {p.closed: p for p in mine_closed(ctx, Fraction(1, 5))}
    beach = iset((S, "été"), (D, "matin"), (L, "plage"), (C, "surf"))
    assert set(pats[beach].generators) == {
        iset((L, "plage")),
        iset((C, "surf")),
        iset((S, "été"), (D, "matin")),
    }
    pats2 = {p.closed: p for p in mine_closed(ctx, Fraction(2, 5))}
    assert pats2[iset((D, "midi"))].support == Fraction(2, 5)
    assert pats2[iset((C, "art"))].support == Fraction(2, 5)
    only = mine_closed(ctx, 1)
    assert [p.closed for p in only] == [closure(ctx, frozenset())]


def test_mine_closed_is_ordered(ctx):
    pats = mine_closed(ctx, Fraction(1, 5))
    keys = [(len(p.closed), tuple(sorted(p.closed))) for p in pats]
    assert keys == sorted(keys)


def test_mine_closed_matches_oracle_on_fixture(ctx):
    for minsup in (Fraction(1, 5), Fraction(2, 5), Fraction(3, 5), Fraction(1)):
        expected = bf_closed_patterns(list(ctx.transactions), minsup)
        got = {p.closed: set(p.generators) for p in mine_closed(ctx, minsup)}
        assert got == expected


def test_igb_examples(ctx):
    pats = mine_closed(ctx, Fraction(1, 5))
    rules = generate_igb(ctx, pats, 1)
    by_premise = {(r.premise, r.conclusion): r for r in rules}
    r = by_premise[(iset((S, "printemps")), iset((D, "soir"), (L, "théâtre"), (C, "art")))]
    assert r.support == Fraction(1, 5) and r.confidence == 1
    assert all(r.confidence >= 1 for r in rules)
    assert not any(r.premise == iset((D, "midi")) for r in rules)


@pytest.mark.parametrize("minsup,minconf", [("1/5", "1"), ("1/5", "1/2"), ("2/5", "1/2"), ("1/5", "1/3")])
def test_igb_matches_definition(ctx, minsup, minconf):
    minsup, minconf = Fraction(minsup), Fraction(minconf)
    rules = generate_igb(ctx, mine_closed(ctx, minsup), minconf)
    got = {(r.premise, r.conclusion): (r.support, r.confidence) for r in rules}
    assert got == bf_igb(list(ctx.transactions), minsup, minconf)


def _printemps_rule(ctx):
    return AssociationRule(
        iset((S, "printemps")),
        iset((D, "soir"), (L, "théâtre"), (C, "art")),
        Fraction(1, 5),
        Fraction(1),
    )


def test_derive_augmentation(ctx):
    out = derive(ctx, _printemps_rule(ctx), "augmentation", iset((D, "soir")))
    assert out.premise == iset((S, "printemps"), (D, "soir"))
    assert out.conclusion == iset((L, "théâtre"), (C, "art"))
    assert (out.support, out.confidence) == (Fraction(1, 5), Fraction(1))


def test_derive_decomposition(ctx):
    rule = _printemps_rule(ctx)
    with pytest.raises(DerivationError):
        derive(ctx, rule, "decomposition", rule.conclusion)
    # closure({printemps, soir, théâtre}) is the full transaction 2
    out = derive(ctx, rule, "decomposition", iset((D, "soir"), (L, "théâtre")))
    assert out.premise == rule.premise and out.conclusion == iset((D, "soir"), (L, "théâtre"))
    assert out.confidence == 1


def test_derive_decomposition_closure_failure():
    txs = (iset((S, "été"), (D, "matin")), iset((S, "été"), (D, "matin"), (C, "surf")))
    ctx = FormalContext(txs)
    rule = AssociationRule(frozenset(), iset((S, "été"), (D, "matin"), (C, "surf")), Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(DerivationError):
        derive(ctx, rule, "decomposition", iset((S, "été")))


def test_class_rules_projection(ctx):
    rule = _printemps_rule(ctx)
    (proj,) = class_rules([rule])
    assert proj.kind is RuleKind.CLASS
    assert proj.premise == iset((S, "printemps")) and proj.conclusion == iset((C, "art"))

    drop = AssociationRule(iset((C, "art")), iset((D, "midi")), Fraction(2, 5), Fraction(1, 2))
    assert class_rules([drop]) == []

    a = AssociationRule(iset((D, "midi")), iset((C, "art")), Fraction(1, 5), Fraction(8, 10))
    b = AssociationRule(iset((D, "midi")), iset((C, "art"), (L, "musée")), Fraction(1, 5), Fraction(1))
    (merged,) = class_rules([a, b])
    assert merged.confidence == 1


def test_class_rules_recomputed_against_context(ctx):
    rules = generate_igb(ctx, mine_closed(ctx, Fraction(1, 5)), Fraction(1, 2))
    for r in class_rules(rules, ctx):
        assert r.confidence == Fraction(ctx.count(r.premise | r.conclusion), ctx.count(r.premise))


def test_rule_base_roundtrip(data_dir, tmp_path):
    rules = load_rule_base(data_dir / "rules_example.tsv")
    assert [r.rule_id for r in rules] == ["R1", "R2", "R3", "R4", "R5"]
    assert rules[3].premise == iset((S, "printemps"), (D, "soir")) and rules[3].interest == "art"
    out = tmp_path / "rb.tsv"
    out.write_text(dump_rule_base(rules), encoding="utf-8")
    again = load_rule_base(out)
    assert [(r.premise, r.conclusion, r.support, r.confidence) for r in again] == [
        (r.premise, r.conclusion, r.support, r.confidence) for r in rules
    ]


def test_random_contexts_match_oracle():
    rng = random.Random(7)
    for _ in range(40):
        ctx = random_context(rng)
        n = len(ctx)
        minsup = Fraction(rng.randint(1, n), n)
        minconf = Fraction(rng.randint(1, 4), 4)
        txs = list(ctx.transactions)
        got = {p.closed: set(p.generators) for p in mine_closed(ctx, minsup)}
        assert got == bf_closed_patterns(txs, minsup)
        rules = generate_igb(ctx, mine_closed(ctx, minsup), minconf)
        assert {(r.premise, r.conclusion): (r.support, r.confidence) for r in rules} == bf_igb(txs, minsup, minconf)


items_strategy = st.sampled_from(
    [Item(v, d) for d, vs in {S: ["printemps", "été"], D: ["matin", "soir"], L: ["musée", "plage"], C: ["art"]}.items() for v in vs]
)


@settings(max_examples=60, deadline=None)
@given(
    txs=st.lists(st.frozensets(items_strategy, max_size=7), min_size=1, max_size=6),
    x=st.frozensets(items_strategy),
    y=st.frozensets(items_strategy),
)
def test_closure_operator_laws(txs, x, y):
    # keep the one-item-per-dimension invariant
    clean = []
    for t in txs:
        per_dim = {}
        for item in sorted(t):
            per_dim.setdefault(item.dimension, item)
        clean.append(frozenset(per_dim.values()))
    ctx = FormalContext(tuple(clean))
    x &= ctx.universe
    y = (y & ctx.universe) | x
    cx = closure(ctx, x)
    assert closure(ctx, cx) == cx
    assert x <= cx
    assert cx <= closure(ctx, y)
