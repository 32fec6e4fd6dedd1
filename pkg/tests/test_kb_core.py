from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from concept_forge.kb_core import (
    ConceptEntry,
    ConstraintSet,
    Relation,
    Triple,
    build_constraint,
    disjoint,
    extract_keywords,
    load_stopwords,
    normalize_concept,
    substitute_span,
)

from .conftest import abstract_of, entry


class TestRelation:
    def test_exactly_nine_members(self):
        assert len(Relation) == 9
        assert {r.value for r in Relation} == {
            "xEffect", "oEffect", "xWant", "oWant", "xReact",
            "oReact", "xNeed", "xAttr", "xIntent",
        }

    def test_parse_roundtrip(self):
        for r in Relation:
            assert Relation.parse(r.value) is r

    def test_unknown_tag_is_an_error(self):
        with pytest.raises(ValueError, match="xFoo"):
            Relation.parse("xFoo")


class TestTriple:
    def test_empty_head_rejected(self):
        with pytest.raises(ValueError, match="empty head"):
            Triple(0, "   ", Relation.X_WANT, "tail")

    def test_empty_tail_rejected(self):
        with pytest.raises(ValueError, match="empty tail"):
            Triple(0, "head", Relation.X_WANT, "")


class TestConceptEntry:
    def test_span_must_match_instance_text(self):
        with pytest.raises(ValueError, match="does not match"):
            ConceptEntry("PersonX arrives", 0, 7, "arrives", "person", 0.9)

    def test_span_bounds(self):
        with pytest.raises(ValueError, match="out of bounds"):
            ConceptEntry.from_span("abc", 1, 9, "x", 0.9)

    def test_plausibility_range(self):
        with pytest.raises(ValueError, match="plausibility"):
            ConceptEntry.from_span("abc def", 0, 3, "x", 1.5)


class TestExtractKeywords:
    def test_bar_example(self):
        assert extract_keywords("PersonX arrives at the bar") == {"arrives", "bar"}

    def test_games_example(self):
        assert extract_keywords("PersonX plays the games together") == {"plays", "games", "together"}

    def test_empty_result_is_legal(self):
        assert extract_keywords("the a an") == frozenset()

    def test_placeholders_removed_case_insensitively(self):
        assert extract_keywords("personY thanks PERSONX warmly") == {"thanks", "warmly"}

    def test_stemming_toggle(self):
        assert extract_keywords("PersonX plays the games together", stem=True) == {
            "play", "game", "together",
        }

    @given(st.text(min_size=1, max_size=80))
    def test_idempotent_under_renormalization(self, head):
        keywords = extract_keywords(head)
        assert extract_keywords(" ".join(sorted(keywords))) == keywords

    @given(st.text(min_size=1, max_size=80))
    def test_members_are_lowercase_and_stopword_free(self, head):
        stopwords = load_stopwords()
        for token in extract_keywords(head):
            assert token == token.lower()
            assert token not in stopwords
            assert token


class TestStopwords:
    def test_comments_and_blanks_ignored(self, tmp_path):
        p = tmp_path / "sw.txt"
        p.write_text("# comment\nfoo\n\nBar\n", encoding="utf-8")
        assert load_stopwords(str(p)) == {"foo", "bar"}

    def test_packaged_list_loads(self):
        sw = load_stopwords()
        assert "the" in sw and "at" in sw and "is" in sw
        assert "together" not in sw


class TestBuildConstraint:
    def test_casino_example(self):
        t = Triple(1, "PersonX is at the casino", Relation.X_WANT, "have a drink")
        c = build_constraint(t, [entry(t.head, "casino", "entertainment place")])
        assert c == ConstraintSet(frozenset({"casino"}), frozenset({"entertainment place"}))

    def test_no_concepts(self):
        t = Triple(0, "PersonX arrives at the bar", Relation.X_WANT, "relax himself")
        c = build_constraint(t, [])
        assert c.keywords == {"arrives", "bar"}
        assert c.concepts == frozenset()

    def test_both_figure_concepts_present(self):
        t = Triple(0, "PersonX arrive at the bar", Relation.X_WANT, "relax himself")
        c = build_constraint(
            t,
            [entry(t.head, "bar", "entertainment place"), entry(t.head, "bar", "relaxation")],
        )
        assert c.concepts == {"entertainment place", "relaxation"}

    def test_mismatched_head_is_an_error(self):
        t = Triple(0, "PersonX arrives at the bar", Relation.X_WANT, "relax himself")
        other = entry("PersonX is at the casino", "casino", "entertainment place")
        with pytest.raises(ValueError, match="does not reference"):
            build_constraint(t, [other])

    def test_concepts_normalized(self):
        t = Triple(0, "PersonX naps", Relation.X_WANT, "rest")
        c = build_constraint(t, [entry(t.head, "naps", "  Entertainment   Place ".strip())])
        assert c.concepts == {"entertainment place"}


class TestDisjoint:
    def test_shared_concept_blocks(self):
        bar = ConstraintSet(frozenset({"arrive", "bar"}), frozenset({"entertainment place"}))
        casino = ConstraintSet(frozenset({"casino"}), frozenset({"entertainment place"}))
        assert not disjoint(bar, casino)

    def test_two_empty_sets(self):
        assert disjoint(ConstraintSet(), ConstraintSet())

    def test_concept_concept_overlap_counts(self):
        a = ConstraintSet(frozenset({"a"}), frozenset({"x"}))
        b = ConstraintSet(frozenset({"b"}), frozenset({"x"}))
        assert not disjoint(a, b)

    def test_keyword_concept_cross_overlap_counts(self):
        a = ConstraintSet(frozenset({"x"}), frozenset())
        b = ConstraintSet(frozenset(), frozenset({"x"}))
        assert not disjoint(a, b)

    tokens = st.sets(st.sampled_from([f"t{i}" for i in range(12)]), max_size=5)

    @given(tokens, tokens, tokens, tokens)
    def test_symmetric(self, ka, ca, kb, cb):
        a = ConstraintSet(frozenset(ka), frozenset(ca))
        b = ConstraintSet(frozenset(kb), frozenset(cb))
        assert disjoint(a, b) == disjoint(b, a)

    @given(tokens, tokens, tokens, tokens)
    def test_matches_naive_set_intersection(self, ka, ca, kb, cb):
        a = ConstraintSet(frozenset(ka), frozenset(ca))
        b = ConstraintSet(frozenset(kb), frozenset(cb))
        naive = len((set(ka) | set(ca)) & (set(kb) | set(cb))) == 0
        assert disjoint(a, b) == naive


class TestAbstractTriple:
    def test_reconstruction_invariant_holds(self):
        t = Triple(0, "PersonX plays a football game", Relation.X_WANT, "take a rest")
        e = entry(t.head, "plays a football game", "do sport")
        a = abstract_of(0, t, e)
        assert a.head_c == "PersonX do sport"
        assert substitute_span(t.head, e.start, e.end, e.concept) == a.head_c

    def test_reconstruction_mismatch_rejected(self):
        from concept_forge.kb_core import AbstractTriple

        t = Triple(0, "PersonX plays a football game", Relation.X_WANT, "take a rest")
        e = entry(t.head, "plays a football game", "do sport")
        with pytest.raises(ValueError, match="substituted"):
            AbstractTriple(0, t.id, e, "PersonX do sports", t.relation, t.tail, 0.95)

    @given(
        st.text(min_size=3, max_size=40).filter(lambda s: s.strip()),
        st.data(),
    )
    def test_reconstruction_roundtrip_property(self, head, data):
        start = data.draw(st.integers(0, len(head) - 1))
        end = data.draw(st.integers(start + 1, len(head)))
        concept = data.draw(st.text(min_size=1, max_size=10))
        rebuilt = substitute_span(head, start, end, concept)
        assert rebuilt == head[:start] + concept + head[end:]


def test_normalize_concept_collapses_whitespace():
    assert normalize_concept("  Entertainment \t Place\n") == "entertainment place"
