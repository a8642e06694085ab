from hypothesis import given, settings
from hypothesis import strategies as st

from argrecon.similarity import align_span, char_overlap_similarity, lcs_length, normalize

import oracles


def test_worked_examples():
    assert char_overlap_similarity("abc", "abc") == 1.0
    assert abs(char_overlap_similarity("abcd", "bc") - 4 / 6) < 1e-12
    assert char_overlap_similarity("", "x") == 0.0
    assert char_overlap_similarity("", "") == 1.0


def test_normalization_ignores_case_and_spacing():
    assert normalize("  The   Cat\n sat ") == "the cat sat"
    assert char_overlap_similarity("The  cat", "the cat") == 1.0


small = st.text(alphabet="abcde ", max_size=25)


@settings(max_examples=300, deadline=None)
@given(small, small)
def test_lcs_matches_dynamic_program(a, b):
    assert lcs_length(a, b) == oracles.lcs_dp(a, b)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=30), st.text(max_size=30))
def test_similarity_symmetric_and_bounded(a, b):
    s = char_overlap_similarity(a, b)
    assert 0.0 <= s <= 1.0
    assert s == char_overlap_similarity(b, a)


def test_align_exact_case_insensitive():
    src = "First sentence. The Teacher  will approve. Last."
    start, end = align_span(src, "the teacher will approve")
    assert src[start:end] == "The Teacher  will approve"


def test_align_fuzzy_and_threshold():
    src = "We all agree that the college board does not want to lose any tuition fees."
    span = align_span(src, "the college's board does not want to lose tuition fees")
    assert span is not None
    picked = src[span[0]:span[1]]
    assert picked.startswith("the college board")
    assert char_overlap_similarity(picked, "the college's board does not want to lose tuition fees") >= 0.8
    assert align_span(src, "completely unrelated statement about weather") is None
    assert align_span(src, "") is None


def test_socrates_span_covers_sentence():
    assert align_span("Socrates is mortal.", "Socrates is mortal.") == (0, 19)
