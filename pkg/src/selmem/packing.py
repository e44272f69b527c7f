"""Citation-tagged context assembly under a token budget."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .memory import MemoryEntry
from .text_prep import tokenize

SYSTEM_PROMPT = (
    "You are a memory-augmented assistant. Use ONLY the provided MEMORY_SNIPPETS "
    "to answer questions. For each factual claim, include [CITE: MEM_ID] inline. "
    "If information is not in memory, state that you don't know."
)
DEFAULT_TOKEN_BUDGET = 3000


@dataclass
class PackedContext:
    system_prompt: str = SYSTEM_PROMPT
    # (mem_id, header, body)
    blocks: List[Tuple[str, str, str]] = field(default_factory=list)
    total_tokens: int = 0
    truncated: bool = False

    def render(self) -> str:
        parts = [self.system_prompt]
        parts.extend(f"{header}\n{body}" for _, header, body in self.blocks)
        return "\n\n".join(parts)

    def __bool__(self) -> bool:
        return bool(self.blocks)


def format_block(entry: MemoryEntry) -> Tuple[str, str]:
    chunk = entry.chunk
    header = f"[MEM_ID: {entry.mem_id}] | Source: {chunk.doc_id}:{chunk.chunk_id} | Time: {entry.stored_at}"
    return header, chunk.text


def _truncate(body: str, n_tokens: int) -> str:
    toks = tokenize(body)
    if len(toks) <= n_tokens:
        return body
    if n_tokens <= 0:
        return ""
    return body[: toks[n_tokens - 1].end]


def pack(
    episodic: Sequence[MemoryEntry],
    semantic_ranked: Sequence[MemoryEntry],
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    system_prompt: str = SYSTEM_PROMPT,
) -> PackedContext:
    """Episodic blocks first, then semantic ones, whole blocks only.

    Only block bodies count against ``token_budget``. Packing stops at the
    first block that does not fit, except that an oversized first block is
    cut down to the budget so the context is never empty.
    """
    if token_budget < 1:
        raise ValueError("token_budget must be >= 1")
    ctx = PackedContext(system_prompt=system_prompt)
    seen = set()
    for entry in list(episodic) + list(semantic_ranked):
        if entry.mem_id in seen:
            continue
        header, body = format_block(entry)
        n = len(tokenize(body))
        if ctx.total_tokens + n > token_budget:
            if not ctx.blocks:
                body = _truncate(body, token_budget)
                ctx.blocks.append((entry.mem_id, header, body))
                ctx.total_tokens = len(tokenize(body))
                ctx.truncated = True
            break
        seen.add(entry.mem_id)
        ctx.blocks.append((entry.mem_id, header, body))
        ctx.total_tokens += n
    return ctx
