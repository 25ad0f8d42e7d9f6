import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import scan_in, scan_out, scan_types
from qgrank.errors import DataError
from qgrank.kb import (
    KnowledgeBase,
    Literal,
    NameResolver,
    Triple,
    dump_kb,
    load_kb,
    parse_kb_lines,
    parse_triple_line,
)
from qgrank.synthetic import random_toy_kb


@given(st.integers(0, 10_000))
def test_indexes_match_full_scan(seed):
    kb = random_toy_kb(np.random.default_rng(seed))
    ids = kb.entities() + ["missing"]
    for e in ids:
        assert kb.out_edges(e) == scan_out(kb.triples, e)
        assert kb.in_edges(e) == scan_in(kb.triples, e)
        assert kb.types_of(e) == scan_types(kb.triples, e)


@given(st.integers(0, 10_000))
def test_dump_and_reload_round_trip(tmp_path_factory, seed):
    kb = random_toy_kb(np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("kb") / "kb.tsv"
    dump_kb(kb, path)
    again = load_kb(path)
    assert again.triples == kb.triples
    assert again.cvt_marks == kb.cvt_marks


def test_literals_never_index_incoming():
    kb = KnowledgeBase.from_triples([Triple("a", "height", Literal("3", "integer"))])
    assert kb.in_edges(Literal("3", "integer")) == []
    assert kb.out_edges(Literal("3", "integer")) == []
    assert kb.out_edges("a") == [("height", Literal("3", "integer"))]


def test_parse_line_kinds():
    assert parse_triple_line("a\tp\tb") == Triple("a", "p", "b")
    assert parse_triple_line("a\tborn\t1975-03-01\tdate").object == Literal("1975-03-01", "date")
    assert parse_triple_line("#cvt\tc1") == "c1"
    assert parse_triple_line("# comment") is None
    assert parse_triple_line("   ") is None


@pytest.mark.parametrize("line", [
    "a\tp",
    "a\tp\tb\tc\td",
    "\tp\tb",
    "a\tp\t",
    "a\tp\tx\tinteger",
    "a\tp\tsoon\tdate",
    "a\tp\t3\tcomplex",
    "#cvt",
])
def test_malformed_lines_report_line_number(line):
    with pytest.raises(DataError) as err:
        parse_kb_lines(["a\tp\tb", line], path="kb.tsv")
    assert "kb.tsv:2:" in str(err.value)


def test_cvt_directive_must_name_known_entity():
    with pytest.raises(DataError):
        parse_kb_lines(["#cvt\tghost", "a\tp\tb"])


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError):
        load_kb(tmp_path / "nope.tsv")


def test_type_vocab_and_names(spain):
    assert "people.person" in spain.type_vocab
    assert spain.name_of("felipe_gonzalez") == "Felipe Gonzalez"
    assert spain.types_of("cvt1") == frozenset()


def test_name_resolver_surface_forms(spain):
    names = NameResolver(spain)
    assert names.entity("prime_minister") == "prime minister"
    assert names.entity("cvt1") == "cvt1"
    assert names.entity(Literal("1.85", "float")) == "1.85"
    assert names.predicate("government.governing_officials") == "governing officials"
    assert names.type("people.person") == "people person"


def test_literal_helpers():
    assert Literal("1982-05-01", "date").year() == 1982
    assert Literal("2.5", "float").number() == 2.5
    with pytest.raises(ValueError):
        Literal("x", "blob")
