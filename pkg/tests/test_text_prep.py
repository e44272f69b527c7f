import pytest
from hypothesis import given, settings, strategies as st

from selmem.text_prep import (
    NUMBER,
    PUNCT,
    WORD,
    ChunkingError,
    chunk_document,
    expected_chunk_count,
    terms,
    tokenize,
    tokenize_doc,
)


def _doc(n_tokens, doc_id="d"):
    return tokenize_doc(doc_id, " ".join(f"w{i}" for i in range(n_tokens)))


def test_empty_text_has_no_tokens():
    assert tokenize("") == []


def test_decimal_numbers_stay_whole():
    toks = tokenize("Eq. 4 gives 0.72")
    assert [t.text for t in toks] == ["Eq", ".", "4", "gives", "0.72"]
    assert [t.kind for t in toks] == [WORD, PUNCT, NUMBER, WORD, NUMBER]


def test_offsets_for_plain_words():
    toks = tokenize("Paris is big")
    assert [t.char_offset for t in toks] == [0, 6, 9]
    assert all(t.kind == WORD for t in toks)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("state-of-the-art", ["state-of-the-art"]),
        ("don't stop", ["don't", "stop"]),
        ("GPT-4 wins.", ["GPT-4", "wins", "."]),
        ("3rd place", ["3rd", "place"]),
        ("(a, b)", ["(", "a", ",", "b", ")"]),
        ("end.", ["end", "."]),
        ("1,200", ["1", ",", "200"]),
    ],
)
def test_token_grammar(text, expected):
    assert [t.text for t in tokenize(text)] == expected


def test_terms_lowercase_and_drop_punct():
    assert terms(tokenize("The Cat, the HAT!")) == ["the", "cat", "the", "hat"]


@given(st.text(max_size=200))
def test_token_offsets_point_into_text(text):
    for t in tokenize(text):
        assert text[t.char_offset : t.end] == t.text
        assert not t.text.isspace()


def test_chunking_237_tokens():
    chunks = chunk_document(_doc(237), 150, 30)
    assert [(c.token_start, c.token_start + c.token_len) for c in chunks] == [(0, 150), (120, 237)]


def test_chunking_short_doc_single_chunk():
    chunks = chunk_document(_doc(100), 150, 30)
    assert len(chunks) == 1 and chunks[0].token_len == 100


def test_chunking_7200_tokens():
    chunks = chunk_document(_doc(7200), 150, 30)
    starts = list(range(0, 7081, 120))
    assert [c.token_start for c in chunks] == starts
    assert len(chunks) == 60


def test_empty_doc_gives_one_empty_chunk():
    chunks = chunk_document(tokenize_doc("e", ""), 150, 30)
    assert len(chunks) == 1
    assert chunks[0].text == "" and chunks[0].token_len == 0


@pytest.mark.parametrize("size, overlap", [(0, 0), (10, 10), (10, -1), (5, 7)])
def test_bad_window_rejected(size, overlap):
    with pytest.raises(ChunkingError):
        chunk_document(_doc(20), size, overlap)


def _enumerate_windows(n, size, overlap):
    starts, s = [], 0
    while True:
        starts.append(s)
        if s + size >= n:
            return starts
        s += size - overlap


@settings(max_examples=300)
@given(st.integers(0, 2000), st.integers(1, 300), st.data())
def test_chunk_count_formula_matches_enumeration(n, size, data):
    overlap = data.draw(st.integers(0, size - 1))
    assert expected_chunk_count(n, size, overlap) == len(_enumerate_windows(n, size, overlap))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 800), st.integers(2, 200), st.data())
def test_chunks_cover_every_token(n, size, data):
    overlap = data.draw(st.integers(0, size - 1))
    chunks = chunk_document(_doc(n), size, overlap)
    assert len(chunks) == expected_chunk_count(n, size, overlap)
    covered = set()
    for c in chunks:
        covered.update(range(c.token_start, c.token_start + c.token_len))
        assert c.token_len <= size
    assert covered == set(range(n))
    assert [c.chunk_id for c in chunks] == list(range(len(chunks)))


def test_chunk_text_matches_token_span():
    doc = tokenize_doc("d", "Alpha beta, gamma.  Delta 3.5 epsilon!\nZeta eta theta.")
    for c in chunk_document(doc, 4, 1):
        assert c.text.startswith(c.tokens[0].text)
        assert c.text.endswith(c.tokens[-1].text)
        lo, hi = c.char_span
        assert doc.text[lo:hi] == c.text


def test_chunking_deterministic():
    text = "Some text. " * 500
    a = chunk_document(tokenize_doc("d", text))
    b = chunk_document(tokenize_doc("d", text))
    assert a == b


def test_sections_attached_to_chunks():
    text = "Intro words here. " * 40 + "Method words here. " * 40
    split = len("Intro words here. ") * 40
    doc = tokenize_doc("d", text, (("Intro", 0, split), ("Method", split, len(text))))
    chunks = chunk_document(doc, 50, 10)
    assert chunks[0].section == "Intro"
    assert chunks[-1].section == "Method"
