"""BM25 sparse scoring, a hashed-trigram dense stand-in, and hybrid fusion."""

from __future__ import annotations

import hashlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .memory import MemoryEntry, MemoryStore
from .text_prep import terms, tokenize

SPARSE_ONLY = "sparse_only"
HYBRID = "hybrid"

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75
DEFAULT_ALPHA = 0.7
DEFAULT_DIM = 256
_HASH_KEY = b"selmem-trigram-v1"


@dataclass
class Bm25Index:
    postings: Dict[str, List[Tuple[int, int]]]
    doc_lengths: List[int]
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    @property
    def doc_count(self) -> int:
        return len(self.doc_lengths)

    @property
    def avg_doc_length(self) -> float:
        return sum(self.doc_lengths) / len(self.doc_lengths) if self.doc_lengths else 0.0


def build_index_from_texts(texts: Sequence[str], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    postings: Dict[str, List[Tuple[int, int]]] = defaultdict(list)
    lengths = []
    for idx, text in enumerate(texts):
        ts = terms(tokenize(text))
        lengths.append(len(ts))
        for term, tf in Counter(ts).items():
            postings[term].append((idx, tf))
    return Bm25Index(dict(postings), lengths, k1, b)


def build_index(entries: Sequence[MemoryEntry], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    return build_index_from_texts([e.chunk.text for e in entries], k1, b)


def idf(n_docs: int, df: int) -> float:
    return math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)


def bm25_scores(index: Bm25Index, query: str) -> List[Tuple[int, float]]:
    """Okapi BM25 over the query's terms (repeated query terms count again).

    Only entries sharing at least one term with the query are returned,
    ordered by entry index.
    """
    if index.doc_count == 0:
        return []
    avgdl = index.avg_doc_length or 1.0
    acc: Dict[int, float] = defaultdict(float)
    for term in terms(tokenize(query)):
        plist = index.postings.get(term)
        if not plist:
            continue
        w = idf(index.doc_count, len(plist))
        for idx, tf in plist:
            norm = index.k1 * (1.0 - index.b + index.b * index.doc_lengths[idx] / avgdl)
            acc[idx] += w * tf * (index.k1 + 1.0) / (tf + norm)
    return sorted(acc.items())


def _bucket(trigram: str, dim: int) -> int:
    h = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8, key=_HASH_KEY).digest()
    return int.from_bytes(h, "little") % dim


def embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Character-trigram counts hashed into ``dim`` buckets, L2-normalized."""
    if dim < 16:
        raise ValueError("dim must be >= 16")
    vec = np.zeros(dim)
    norm_text = " " + " ".join(text.lower().split()) + " "
    if norm_text.strip():
        for i in range(len(norm_text) - 2):
            vec[_bucket(norm_text[i : i + 3], dim)] += 1.0
    n = np.linalg.norm(vec)
    return vec / n if n > 0 else vec


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def minmax(scores: Dict, keys) -> Dict:
    vals = [scores.get(k, 0.0) for k in keys]
    if not vals:
        return {}
    lo, hi = min(vals), max(vals)
    if hi <= lo:
        return {k: 0.0 for k in keys}
    return {k: (scores.get(k, 0.0) - lo) / (hi - lo) for k in keys}


def hybrid_fuse(dense: Dict, sparse: Dict, alpha: float = DEFAULT_ALPHA) -> Dict:
    """alpha * dense + (1 - alpha) * sparse after per-query min-max scaling.

    Candidates are the union of both inputs; a missing score counts as 0
    before scaling.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    keys = sorted(set(dense) | set(sparse), key=str)
    d, s = minmax(dense, keys), minmax(sparse, keys)
    return {k: alpha * d[k] + (1.0 - alpha) * s[k] for k in keys}


@dataclass
class RetrievalResult:
    # (mem_id, fused, sparse, dense) for the semantic hits, best first
    ranked: List[Tuple[str, float, float, float]]
    # episodic entries, temporal order; always prepended to the context
    episodic: List[MemoryEntry] = field(default_factory=list)
    semantic: List[MemoryEntry] = field(default_factory=list)

    @property
    def entries(self) -> List[MemoryEntry]:
        return self.episodic + self.semantic

    @property
    def mem_ids(self) -> List[str]:
        return [e.mem_id for e in self.entries]


def retrieve(
    store: MemoryStore,
    query: str,
    k: int = 3,
    mode: str = SPARSE_ONLY,
    alpha: float = DEFAULT_ALPHA,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
    embedder: Optional[Callable[[str], np.ndarray]] = None,
) -> RetrievalResult:
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode not in (SPARSE_ONLY, HYBRID):
        raise ValueError(f"unknown retrieval mode {mode!r}")
    entries = list(store.semantic.values())
    index = build_index(entries, k1, b)
    sparse = dict(bm25_scores(index, query))

    if mode == HYBRID and entries:
        embedder = embedder or embed
        q = embedder(query)
        dense = {i: cosine(q, embedder(e.chunk.text)) for i, e in enumerate(entries)}
        fused = hybrid_fuse(dense, sparse, alpha)
    else:
        dense = {}
        fused = dict(sparse)

    order = sorted(fused, key=lambda i: (-fused[i], entries[i].stored_at))[:k]
    semantic = [entries[i] for i in order]
    ranked = [(entries[i].mem_id, fused[i], sparse.get(i, 0.0), dense.get(i, 0.0)) for i in order]

    picked = {e.mem_id for e in semantic}
    episodic = [e for e in store.episodic if e.mem_id not in picked]
    for e in episodic + semantic:
        e.access_count += 1
    return RetrievalResult(ranked, episodic, semantic)
