from functools import lru_cache

import pytest
from hypothesis import given, strategies as st

from qgrank.errors import DataError
from qgrank.kb import ISA, KnowledgeBase, Triple
from qgrank.linking import (
    LinkKind,
    OrdinalValue,
    TimeValue,
    edit_similarity,
    enrich_entities,
    levenshtein,
    link_entities,
    link_focus_nodes,
    link_ordinals,
    link_time,
    link_types,
    load_lexicon,
    load_superlatives,
    make_lexicon,
    tokenize,
)
from qgrank.synthetic import SPAIN_QUESTION


def ref_levenshtein(a, b):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return d(len(a), len(b))


short_text = st.text(alphabet="abcde ", max_size=8)


@given(short_text, short_text)
def test_levenshtein_matches_recursive_definition(a, b):
    assert levenshtein(a, b) == ref_levenshtein(a, b)
    assert 0.0 <= edit_similarity(a, b) <= 1.0
    assert edit_similarity(a, b) == edit_similarity(b, a)


def test_tokenize():
    assert tokenize("Who is the PM of Spain after 1980?") == ["who", "is", "the", "pm", "of", "spain", "after", "1980", "?"]
    assert tokenize("o'neill's co-founder") == ["o'neill's", "co-founder"]


words = st.sampled_from(["a", "b", "c", "d", "e"])


@given(st.lists(words, min_size=0, max_size=9),
       st.dictionaries(st.lists(words, min_size=1, max_size=3).map(" ".join), st.just(0.5), max_size=6))
def test_entity_spans_are_longest_leftmost_and_maximal(question, mentions):
    lex = make_lexicon([(m, "ent_" + m.replace(" ", "_"), p) for m, p in mentions.items()])
    links = link_entities(question, lex)
    spans = [l.span for l in links]
    # every span is in the lexicon and spans never overlap
    covered = set()
    for i, j in spans:
        assert " ".join(question[i:j]) in lex
        assert covered.isdisjoint(range(i, j))
        covered |= set(range(i, j))
    # brute force: greedy claim over every (i, j), longest first then leftmost
    every = [(i, j) for i in range(len(question)) for j in range(i + 1, len(question) + 1)
             if " ".join(question[i:j]) in lex]
    taken, expect = set(), []
    for i, j in sorted(every, key=lambda s: (s[0] - s[1], s[0])):
        if taken.isdisjoint(range(i, j)):
            taken |= set(range(i, j))
            expect.append((i, j))
    assert spans == sorted(expect)


def test_entity_links_pick_highest_prior_and_enrich():
    lex = make_lexicon([("paris", "paris_fr", 0.9), ("paris", "paris_tx", 0.1), ("texas", "texas", 1.0)])
    q = tokenize("is paris in texas")
    links = link_entities(q, lex)
    assert [(l.target, l.span) for l in links] == [("paris_fr", (1, 2)), ("texas", (3, 4))]
    rich = enrich_entities(q, links, lex)
    assert [(l.target, l.score) for l in rich] == [("paris_fr", 0.9), ("paris_tx", 0.1), ("texas", 1.0)]


def _type_kb(types):
    return KnowledgeBase.from_triples([Triple(f"x{i}", ISA, t) for i, t in enumerate(types)])


@given(st.lists(words, min_size=1, max_size=7),
       st.lists(st.sampled_from(["a.b", "c", "x.a_b", "d.e", "b.c"]), min_size=1, max_size=4, unique=True),
       st.integers(1, 12))
def test_type_links_are_top_k_of_exhaustive_scoring(question, types, k):
    kb = _type_kb(types)
    got = link_types(question, kb, top_k=k)
    surface = {t: t.replace(".", " ").replace("_", " ") for t in types}
    every = []
    for i in range(len(question)):
        for j in range(i + 1, min(i + 3, len(question)) + 1):
            for t in types:
                every.append((edit_similarity(" ".join(question[i:j]), surface[t]), t, i, j))
    every.sort(key=lambda r: (-r[0], r[1], r[2], r[3]))
    assert [(l.score, l.target, *l.span) for l in got] == every[:k]
    assert all(l.kind == LinkKind.TYPE for l in got)


def test_type_linking_with_empty_vocabulary():
    assert link_types(["a"], KnowledgeBase.from_triples([Triple("a", "p", "b")])) == []


@pytest.mark.parametrize("text,expected", [
    ("born after 1980", [TimeValue(1980, "after")]),
    ("since 1990", [TimeValue(1990, "after")]),
    ("before 850", [TimeValue(850, "before")]),
    ("during 2001", [TimeValue(2001, "in")]),
    ("the 1975 election", [TimeValue(1975, "in")]),
    ("1066", [TimeValue(1066, "in")]),
    ("in 0980 or 19800 or 42", []),
])
def test_time_mentions(text, expected):
    assert [l.target for l in link_time(tokenize(text))] == expected


@pytest.mark.parametrize("text,expected,span", [
    ("the highest mountain", OrdinalValue(1, "max"), (1, 2)),
    ("the second largest city", OrdinalValue(2, "max"), (1, 3)),
    ("the 3rd smallest state", OrdinalValue(3, "min"), (1, 3)),
    ("the oldest person", OrdinalValue(1, "min"), (1, 2)),
])
def test_ordinal_mentions(text, expected, span):
    (link,) = link_ordinals(tokenize(text))
    assert link.target == expected and link.span == span


def test_superlative_vocabulary_has_both_directions():
    vocab = load_superlatives()
    assert len(vocab) >= 20
    assert set(vocab.values()) == {"max", "min"}


def test_bad_superlative_file(tmp_path):
    bad = tmp_path / "s.tsv"
    bad.write_text("tallest\tup\n")
    with pytest.raises(DataError):
        load_superlatives(bad)


def test_lexicon_file(tmp_path):
    path = tmp_path / "lex.tsv"
    path.write_text("Spain\tspain\t0.9\nprime minister\tprime_minister\t0.8\n")
    assert load_lexicon(path) == {"spain": [("spain", 0.9)], "prime minister": [("prime_minister", 0.8)]}
    path.write_text("spain\tspain\t1.5\n")
    with pytest.raises(DataError):
        load_lexicon(path)


def test_running_example_focus_nodes(spain, lexicon):
    focus = link_focus_nodes(tokenize(SPAIN_QUESTION), spain, lexicon)
    assert [l.target for l in focus.entities] == ["prime_minister", "spain"]
    assert "people.person" in [l.target for l in focus.types]
    assert len(focus.types) == 10
    assert [l.target for l in focus.times] == [TimeValue(1980, "after")]
    assert [l.target for l in focus.ordinals] == [OrdinalValue(1, "max")]


def test_empty_question_links_nothing(spain, lexicon):
    assert link_focus_nodes([], spain, lexicon).is_empty()
