import random

import pytest
from hypothesis import given, settings, strategies as st

from selmem.memory import MemoryEntry
from selmem.packing import SYSTEM_PROMPT, PackedContext, format_block, pack
from selmem.text_prep import Chunk, token_count, tokenize


def entry(mem_id, text, doc="paper3", chunk_id=4, stored_at=12, tier="semantic"):
    c = Chunk(chunk_id, doc, tuple(tokenize(text)), 0, text)
    return MemoryEntry(mem_id, c, 0.5, 0, stored_at, tier)


def words(n, tag="w"):
    return " ".join(f"{tag}{i}" for i in range(n))


def test_header_format_exact():
    header, body = format_block(entry("m7", "Body text."))
    assert header == "[MEM_ID: m7] | Source: paper3:4 | Time: 12"
    assert body == "Body text."


def test_same_content_different_ids():
    h1, b1 = format_block(entry("m1", "same"))
    h2, b2 = format_block(entry("m2", "same"))
    assert h1 != h2 and b1 == b2


def test_empty_chunk_block():
    header, body = format_block(entry("m0", "", doc="d", chunk_id=0, stored_at=0))
    assert header == "[MEM_ID: m0] | Source: d:0 | Time: 0"
    assert body == ""


def test_everything_fits():
    ctx = pack([], [entry("m1", words(10)), entry("m2", words(20))], 100)
    assert [b[0] for b in ctx.blocks] == ["m1", "m2"]
    assert ctx.total_tokens == 30 and not ctx.truncated


def test_whole_blocks_only():
    blocks = [entry(f"m{i}", words(100, f"b{i}_")) for i in range(3)]
    ctx = pack([], blocks, 250)
    assert [b[0] for b in ctx.blocks] == ["m0", "m1"]
    assert ctx.total_tokens == 200 and not ctx.truncated


def test_oversized_first_block_truncated():
    ctx = pack([], [entry("m1", words(400))], 100)
    assert len(ctx.blocks) == 1
    assert ctx.truncated
    assert token_count(ctx.blocks[0][2]) == 100 == ctx.total_tokens
    assert ctx.blocks[0][2] == words(100)


def test_episodic_first():
    epi = [entry("m8", "recent one", stored_at=8, tier="episodic"), entry("m9", "recent two", stored_at=9, tier="episodic")]
    sem = [entry("m2", "older best"), entry("m1", "older next")]
    ctx = pack(epi, sem, 3000)
    assert [b[0] for b in ctx.blocks] == ["m8", "m9", "m2", "m1"]


def test_duplicate_ids_packed_once():
    e = entry("m1", "text")
    assert [b[0] for b in pack([e], [e], 100).blocks] == ["m1"]


def test_render_layout():
    ctx = pack([], [entry("m1", "Alpha."), entry("m2", "Beta.", chunk_id=5)], 50)
    assert ctx.render() == (
        SYSTEM_PROMPT
        + "\n\n[MEM_ID: m1] | Source: paper3:4 | Time: 12\nAlpha."
        + "\n\n[MEM_ID: m2] | Source: paper3:5 | Time: 12\nBeta."
    )


def test_empty_context_is_falsy():
    assert not pack([], [], 10)
    assert not PackedContext()


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        pack([], [], 0)


def _random_entries(rng, n, tier, start):
    out = []
    for i in range(n):
        k = rng.randint(0, 60)
        text = " ".join(rng.choice(["alpha", "beta,", "3.5", "x-y", "end."]) for _ in range(k))
        out.append(entry(f"m{start + i}", text, stored_at=start + i, tier=tier))
    return out


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 400))
def test_budget_and_order_properties(seed, budget):
    rng = random.Random(seed)
    epi = _random_entries(rng, rng.randint(0, 4), "episodic", 0)
    sem = _random_entries(rng, rng.randint(0, 8), "semantic", 100)
    ctx = pack(epi, sem, budget)
    assert ctx.total_tokens <= budget
    assert ctx.total_tokens == sum(token_count(b) for _, _, b in ctx.blocks)
    ids = [b[0] for b in ctx.blocks]
    order = [e.mem_id for e in epi + sem]
    assert ids == order[: len(ids)]
    assert len(set(ids)) == len(ids)
