"""Full-text index: postings, path probing, ranked node scans."""

from __future__ import annotations

import pytest

from searchcube.corpus_store import ContextPath, CorpusStore, search_tokens
from searchcube.path_index import InvalidQueryError, PathIndex
from searchcube.search_expr import MatchAny, Word, node_score, parse_search

from conftest import EXPORT_PCT, EXPORT_TC, IMPORT_PCT, IMPORT_TC, random_corpus


def test_posting_over_two_documents():
    store = CorpusStore.ingest(
        [("1.xml", b"<a><b>red</b></a>"), ("2.xml", b"<a><c>red</c></a>")]
    )
    index = PathIndex.build(store)
    posting = index.posting("red")
    assert {str(e.path) for e in posting.entries} == {"/a/b", "/a/c"}
    for entry in posting.entries:
        assert entry.occurrence >= 1


def test_united_occurs_in_three_contexts(factbook_index):
    entries = factbook_index.paths_for(parse_search('"united states"'))
    assert {e.path for e in entries} == {ContextPath.of("/country"), IMPORT_TC, EXPORT_TC}
    # the single keyword has the same three contexts
    entries_kw = factbook_index.paths_for(Word("united"))
    assert {e.path for e in entries_kw} == {ContextPath.of("/country"), IMPORT_TC, EXPORT_TC}


def test_tag_name_percentage_has_two_contexts(factbook_index):
    posting = factbook_index.posting("percentage")
    assert {e.path for e in posting.entries} == {IMPORT_PCT, EXPORT_PCT}


def test_match_anything_with_name_hint(factbook_index, factbook_store):
    entries = factbook_index.paths_for(None, name_hint="percentage")
    assert {e.path for e in entries} == {IMPORT_PCT, EXPORT_PCT}
    for entry in entries:
        assert entry.doc_frequency == factbook_store.path_stats[entry.path][0]


def test_unknown_name_hint_is_empty(factbook_index):
    assert factbook_index.paths_for(None, name_hint="nonexistent_tag") == []


def test_empty_probe_is_invalid(factbook_index):
    with pytest.raises(InvalidQueryError):
        factbook_index.paths_for(None, None)


def test_scan_single_match(factbook_index):
    hits = list(factbook_index.scan_nodes(parse_search('"10.6"')))
    assert len(hits) == 1
    assert hits[0][1] > 0


def test_scan_match_anything_context_filter(factbook_index, factbook_store):
    hits = list(factbook_index.scan_nodes(MatchAny(), [IMPORT_PCT]))
    assert len(hits) == factbook_store.path_stats[IMPORT_PCT][1]
    assert all(score == 1.0 for _n, score in hits)


def test_scan_scores_match_frequency_oracle():
    store, index = random_corpus(seed=3)
    assert len(store.nodes) >= 50
    expr = parse_search("w1")
    hits = list(index.scan_nodes(expr))
    oracle = []
    for node_id in sorted(store.nodes):
        score = node_score(expr, search_tokens(store.nodes[node_id]))
        if score > 0:
            oracle.append((node_id, score))
    oracle.sort(key=lambda pair: (-pair[1], pair[0]))
    assert hits == oracle


def test_union_bound_paths_for_equals_scan_contexts(factbook_index, factbook_store):
    for text in ['"united states"', "china", "percentage OR gdp", "canada 2007"]:
        expr = parse_search(text)
        via_paths = {e.path for e in factbook_index.paths_for(expr)}
        via_scan = {
            factbook_store.nodes[n].context for n, _s in factbook_index.scan_nodes(expr)
        }
        assert via_paths == via_scan


def test_path_posting_consistency(factbook_index, factbook_store):
    for term in ["united", "china", "percentage", "gdp", "2007"]:
        posting = factbook_index.posting(term)
        assert posting.entries, term
        for entry in posting.entries:
            hits = list(factbook_index.scan_nodes(Word(term), [entry.path]))
            assert hits, f"term {term} has no satisfying node at {entry.path}"
            assert len(hits) == entry.occurrence


def test_scan_is_deterministic(factbook_index):
    expr = parse_search("united OR canada")
    first = list(factbook_index.scan_nodes(expr))
    second = list(factbook_index.scan_nodes(expr))
    assert first == second


def test_index_save_and_open(tmp_path, factbook_store, factbook_index):
    factbook_store.save(tmp_path)
    factbook_index.save(tmp_path)
    reopened = PathIndex.open(CorpusStore.open(tmp_path), tmp_path)
    assert reopened.stats.term_count == factbook_index.stats.term_count
    for term in ["united", "percentage"]:
        assert reopened.posting(term) == factbook_index.posting(term)


def test_index_stats_counts(factbook_index):
    stats = factbook_index.stats
    assert stats.term_count > 0
    assert stats.posting_entries >= stats.term_count
    assert "terms" in stats.render()
