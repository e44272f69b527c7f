"""Budgeted chunk selection and the dual-tier memory store.

Snapshot format (``MemoryStore.dump`` / ``load``): UTF-8 JSON lines, one entry
per line, keys in this order::

    mem_id, tier, salience, access_count, stored_at,
    doc_id, chunk_id, token_start, token_len, section, text
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Union

from .salience import SalienceScore
from .text_prep import Chunk, tokenize

EPISODIC = "episodic"
SEMANTIC = "semantic"


class EmptyInputError(ValueError):
    pass


class EmptyStoreError(LookupError):
    pass


class UnknownMemoryError(KeyError):
    pass


def budget_k(budget_ratio: float, m: int) -> int:
    return max(1, math.floor(budget_ratio * m))


def select_budget(scores: Sequence[SalienceScore], budget_ratio: float) -> Set[int]:
    """Top ``max(1, floor(r*M))`` chunk ids by score, lower id winning ties."""
    if not scores:
        raise EmptyInputError("no scores to select from")
    if not 0 < budget_ratio <= 1:
        raise ValueError(f"budget_ratio must be in (0, 1], got {budget_ratio}")
    k = budget_k(budget_ratio, len(scores))
    ranked = sorted(scores, key=lambda s: (-s.score, s.chunk_id))
    return {s.chunk_id for s in ranked[:k]}


def select_threshold(scores: Sequence[SalienceScore], threshold: float) -> Set[int]:
    if not 0 <= threshold <= 1:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return {s.chunk_id for s in scores if s.score > threshold}


def storage_ratio(stored: Union["MemoryStore", int, Iterable], total_chunks: int) -> float:
    if total_chunks < 1:
        raise ValueError("total_chunks must be >= 1")
    if isinstance(stored, MemoryStore):
        n = len(stored)
    elif isinstance(stored, int):
        n = stored
    else:
        n = len(set(stored))
    return n / total_chunks


def memory_saving(ratio: float) -> float:
    return 1.0 - ratio


@dataclass
class BudgetConfig:
    budget_ratio: float = 0.3
    threshold: Optional[float] = None
    episodic_capacity: int = 16
    semantic_capacity: int = 1024

    def __post_init__(self):
        if not 0 < self.budget_ratio <= 1:
            raise ValueError(f"budget_ratio must be in (0, 1], got {self.budget_ratio}")
        if self.threshold is not None and not 0 <= self.threshold <= 1:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.episodic_capacity < 1 or self.semantic_capacity < 1:
            raise ValueError("capacities must be >= 1")

    @property
    def uses_threshold(self) -> bool:
        return self.threshold is not None

    def select(self, scores: Sequence[SalienceScore]) -> Set[int]:
        if self.uses_threshold:
            return select_threshold(scores, self.threshold)
        return select_budget(scores, self.budget_ratio)


@dataclass
class MemoryEntry:
    mem_id: str
    chunk: Chunk
    salience: float
    access_count: int = 0
    stored_at: int = 0
    tier: str = EPISODIC


class MemoryStore:
    """Episodic FIFO ring in front of a capacity-bounded semantic store.

    Writes land in the episodic ring; overflow consolidates the oldest
    episodic entry into the semantic tier verbatim, and semantic overflow
    triggers priority eviction. Single writer.
    """

    def __init__(
        self,
        episodic_capacity: int = 16,
        semantic_capacity: int = 1024,
        alpha_access: float = 0.5,
        beta_salience: float = 0.5,
    ):
        if episodic_capacity < 1 or semantic_capacity < 1:
            raise ValueError("capacities must be >= 1")
        self.episodic_capacity = episodic_capacity
        self.semantic_capacity = semantic_capacity
        self.alpha_access = alpha_access
        self.beta_salience = beta_salience
        self.episodic: deque = deque()
        self.semantic: "OrderedDict[str, MemoryEntry]" = OrderedDict()
        self.clock = 0

    @classmethod
    def from_config(cls, cfg: BudgetConfig, **kw) -> "MemoryStore":
        return cls(cfg.episodic_capacity, cfg.semantic_capacity, **kw)

    def __len__(self) -> int:
        return len(self.episodic) + len(self.semantic)

    def __iter__(self) -> Iterator[MemoryEntry]:
        yield from self.episodic
        yield from self.semantic.values()

    def get(self, mem_id: str) -> MemoryEntry:
        if mem_id in self.semantic:
            return self.semantic[mem_id]
        for e in self.episodic:
            if e.mem_id == mem_id:
                return e
        raise UnknownMemoryError(mem_id)

    def _new_entry(self, chunk: Chunk, salience: float, tier: str) -> MemoryEntry:
        entry = MemoryEntry(f"m{self.clock}", chunk, float(salience), 0, self.clock, tier)
        self.clock += 1
        return entry

    def write(self, chunk: Chunk, salience: float) -> str:
        entry = self._new_entry(chunk, salience, EPISODIC)
        self.episodic.append(entry)
        while len(self.episodic) > self.episodic_capacity:
            old = self.episodic.popleft()
            old.tier = SEMANTIC
            self.semantic[old.mem_id] = old
        while len(self.semantic) > self.semantic_capacity:
            self.evict()
        return entry.mem_id

    def add_semantic(self, chunk: Chunk, salience: float) -> str:
        """Batch-mode write straight into the semantic tier."""
        entry = self._new_entry(chunk, salience, SEMANTIC)
        self.semantic[entry.mem_id] = entry
        while len(self.semantic) > self.semantic_capacity:
            self.evict()
        return entry.mem_id

    def priority(self, entry: MemoryEntry, max_access: Optional[int] = None) -> float:
        if max_access is None:
            max_access = max((e.access_count for e in self.semantic.values()), default=0)
        norm = entry.access_count / max(1, max_access)
        return self.alpha_access * norm + self.beta_salience * entry.salience

    def evict(self) -> str:
        if not self.semantic:
            raise EmptyStoreError("semantic tier is empty")
        max_access = max(e.access_count for e in self.semantic.values())
        victim = min(
            self.semantic.values(),
            key=lambda e: (self.priority(e, max_access), e.stored_at),
        )
        del self.semantic[victim.mem_id]
        return victim.mem_id

    def record_access(self, mem_id: str) -> int:
        entry = self.get(mem_id)
        entry.access_count += 1
        return entry.access_count

    # -- snapshots ---------------------------------------------------------

    def to_records(self) -> List[Dict]:
        out = []
        for e in self:
            out.append(
                {
                    "mem_id": e.mem_id,
                    "tier": e.tier,
                    "salience": e.salience,
                    "access_count": e.access_count,
                    "stored_at": e.stored_at,
                    "doc_id": e.chunk.doc_id,
                    "chunk_id": e.chunk.chunk_id,
                    "token_start": e.chunk.token_start,
                    "token_len": e.chunk.token_len,
                    "section": e.chunk.section,
                    "text": e.chunk.text,
                }
            )
        return out

    def dump(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for rec in self.to_records():
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path], **kw) -> "MemoryStore":
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: bad snapshot record: {exc}") from exc
        n_epi = sum(r["tier"] == EPISODIC for r in records)
        n_sem = len(records) - n_epi
        kw.setdefault("episodic_capacity", max(1, n_epi))
        kw.setdefault("semantic_capacity", max(1, n_sem))
        store = cls(**kw)
        for r in sorted(records, key=lambda r: r["stored_at"]):
            chunk = Chunk(
                chunk_id=r["chunk_id"],
                doc_id=r["doc_id"],
                tokens=tuple(tokenize(r["text"])),
                token_start=r["token_start"],
                text=r["text"],
                section=r.get("section"),
            )
            entry = MemoryEntry(r["mem_id"], chunk, r["salience"], r["access_count"], r["stored_at"], r["tier"])
            if entry.tier == EPISODIC:
                store.episodic.append(entry)
            else:
                store.semantic[entry.mem_id] = entry
        store.clock = max((r["stored_at"] for r in records), default=-1) + 1
        return store


def build_batch_store(
    chunks: Sequence[Chunk], scores: Sequence[SalienceScore], selected: Iterable[int]
) -> MemoryStore:
    """One store per document: selected chunks go straight to semantic memory."""
    keep = sorted(set(selected))
    store = MemoryStore(episodic_capacity=1, semantic_capacity=max(1, len(keep)))
    by_id = {s.chunk_id: s.score for s in scores}
    for cid in keep:
        store.add_semantic(chunks[cid], by_id.get(cid, 0.0))
    return store
