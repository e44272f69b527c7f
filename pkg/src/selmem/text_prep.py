"""Tokenization and overlapping chunking.

Tokenizer grammar, applied left to right with the first matching rule:

    word         a run of word characters containing at least one letter,
                 optionally joined by ``-`` or ``'`` to further runs
                 ("Falcon-7", "state-of-the-art", "1st", "don't")
    number       ``\\d+(\\.\\d+)?`` -- integers and decimals stay whole ("0.72")
    punctuation  any other single non-whitespace character

So ``"Eq. 4 gives 0.72"`` tokenizes to ``Eq . 4 gives 0.72``. Ordinals such as
"1st" fall under the word rule and are never split. Original casing is kept;
consumers lowercase where they need to.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

WORD, NUMBER, PUNCT = "word", "number", "punctuation"

_TOKEN_RE = re.compile(
    r"(?P<word>\w*[^\W\d_]\w*(?:[-'’]\w+)*)"
    r"|(?P<number>\d+(?:\.\d+)?)"
    r"|(?P<punct>\S)"
)
NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")

DEFAULT_CHUNK_SIZE = 150
DEFAULT_OVERLAP = 30


class ChunkingError(ValueError):
    """Invalid chunk size / overlap combination."""


@dataclass(frozen=True)
class Token:
    text: str
    kind: str
    char_offset: int

    @property
    def end(self) -> int:
        return self.char_offset + len(self.text)


@dataclass
class TokenizedDoc:
    doc_id: str
    text: str
    tokens: List[Token]
    source_meta: Dict[str, str] = field(default_factory=dict)
    # (section name, char start, char end), in document order
    sections: Sequence[Tuple[str, int, int]] = ()


@dataclass(frozen=True)
class Chunk:
    chunk_id: int
    doc_id: str
    tokens: Tuple[Token, ...]
    token_start: int
    text: str
    section: Optional[str] = None

    @property
    def token_len(self) -> int:
        return len(self.tokens)

    @property
    def char_span(self) -> Tuple[int, int]:
        if not self.tokens:
            return (0, 0)
        return (self.tokens[0].char_offset, self.tokens[-1].end)


def _kind(match: re.Match) -> str:
    if match.lastgroup == "word":
        return WORD
    if match.lastgroup == "number":
        return NUMBER
    return PUNCT


def tokenize(text: str) -> List[Token]:
    return [Token(m.group(), _kind(m), m.start()) for m in _TOKEN_RE.finditer(text)]


def token_count(text: str) -> int:
    return sum(1 for _ in _TOKEN_RE.finditer(text))


def terms(tokens: Sequence[Token]) -> List[str]:
    """Lowercased word/number tokens; punctuation dropped."""
    return [t.text.lower() for t in tokens if t.kind != PUNCT]


def tokenize_doc(doc_id: str, text: str, sections=(), source_meta=None) -> TokenizedDoc:
    return TokenizedDoc(
        doc_id=doc_id,
        text=text,
        tokens=tokenize(text),
        source_meta=dict(source_meta or {}),
        sections=tuple(sections),
    )


def expected_chunk_count(n_tokens: int, size: int, overlap: int) -> int:
    if n_tokens <= size:
        return 1
    return 1 + math.ceil((n_tokens - size) / (size - overlap))


def _section_at(sections, offset: int) -> Optional[str]:
    for name, start, end in sections:
        if start <= offset < end:
            return name
    return None


def chunk_document(
    doc: TokenizedDoc, size: int = DEFAULT_CHUNK_SIZE, overlap: int = DEFAULT_OVERLAP
) -> List[Chunk]:
    """Slide a ``size``-token window with stride ``size - overlap``.

    The final window may be shorter and is kept as its own chunk. A document
    with no tokens still yields one (empty) chunk so that every document has
    at least one storable unit.
    """
    if size < 1:
        raise ChunkingError(f"chunk size must be >= 1, got {size}")
    if not 0 <= overlap < size:
        raise ChunkingError(f"overlap must satisfy 0 <= overlap < size, got {overlap} (size {size})")

    tokens = doc.tokens
    stride = size - overlap
    starts = [0]
    while starts[-1] + size < len(tokens):
        starts.append(starts[-1] + stride)

    chunks = []
    for chunk_id, start in enumerate(starts):
        window = tuple(tokens[start : start + size])
        if window:
            lo, hi = window[0].char_offset, window[-1].end
            text, section = doc.text[lo:hi], _section_at(doc.sections, lo)
        else:
            text, section = "", None
        chunks.append(Chunk(chunk_id, doc.doc_id, window, start, text, section))
    return chunks
