"""Budget-constrained selective memory for long-document question answering.

Documents are chunked, each chunk is scored from cheap lexical features, and
only the top fraction is kept in a two-tier memory store. Questions are
answered from a BM25 (optionally hybrid) retrieval over that store.
"""

from .answer import Answer, answer_extractive, answer_external
from .memory import MemoryEntry, MemoryStore, select_budget, select_threshold, storage_ratio
from .packing import PackedContext, pack
from .retrieval import RetrievalResult, retrieve
from .salience import FeatureVector, SalienceWeights, document_features, score, score_all, train_scorer
from .text_prep import Chunk, Token, chunk_document, tokenize, tokenize_doc

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "Chunk",
    "FeatureVector",
    "MemoryEntry",
    "MemoryStore",
    "PackedContext",
    "RetrievalResult",
    "SalienceWeights",
    "Token",
    "answer_external",
    "answer_extractive",
    "chunk_document",
    "document_features",
    "pack",
    "retrieve",
    "score",
    "score_all",
    "select_budget",
    "select_threshold",
    "storage_ratio",
    "tokenize",
    "tokenize_doc",
    "train_scorer",
]
