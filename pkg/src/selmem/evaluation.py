"""Metrics, selection baselines, the evaluation loop, and report files.

CSV report columns, in order::

    system,n,f1,exact_match,storage_ratio,memory_saving,latency_s,chunks_used,store_recall

JSON reports are a list of objects carrying every ``EvalReport`` field.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
import string
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Union

from .answer import Answer, EmptyContextError, answer_external, answer_extractive
from .config import RunConfig
from .data import Corpus, QAExample, gold_chunk_ids
from .memory import budget_k, build_batch_store, select_budget
from .packing import pack
from .retrieval import retrieve
from .salience import FeatureVector, SalienceScore, SalienceWeights, document_features, load_lexicon, score_all
from .text_prep import Chunk, chunk_document, tokenize_doc

__all__ = [
    "QAExample",
    "EvalReport",
    "SelectionStrategy",
    "token_f1",
    "exact_match",
    "select_with_strategy",
    "evaluate_system",
    "budget_sweep",
    "run_baselines",
    "emit_report",
    "load_reports",
]

BUDGETMEM, RANDOM, FIRST_N, LAST_N, TFIDF_ONLY = (
    "budgetmem_features",
    "random",
    "first_n",
    "last_n",
    "tfidf_only",
)
# row order of the baseline comparison table
BASELINE_ORDER = (RANDOM, FIRST_N, LAST_N, TFIDF_ONLY, BUDGETMEM)
DEFAULT_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9)
CSV_COLUMNS = (
    "system",
    "n",
    "f1",
    "exact_match",
    "storage_ratio",
    "memory_saving",
    "latency_s",
    "chunks_used",
    "store_recall",
)


class MissingDocumentError(KeyError):
    pass


# ---------------------------------------------------------------------------
# metrics

_PUNCT = set(string.punctuation)
_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize_answer(s: str) -> str:
    s = "".join(ch for ch in s.lower() if ch not in _PUNCT)
    s = _ARTICLES.sub(" ", s)
    return " ".join(s.split())


def token_f1(prediction: str, gold: str) -> float:
    pred = normalize_answer(prediction).split()
    ref = normalize_answer(gold).split()
    if not pred or not ref:
        return float(pred == ref)
    common = sum((Counter(pred) & Counter(ref)).values())
    if common == 0:
        return 0.0
    p, r = common / len(pred), common / len(ref)
    return 2 * p * r / (p + r)


def exact_match(prediction: str, gold: str) -> float:
    return float(normalize_answer(prediction) == normalize_answer(gold))


# ---------------------------------------------------------------------------
# selection strategies


@dataclass(frozen=True)
class SelectionStrategy:
    kind: str = BUDGETMEM
    seed: int = 0

    def label(self, ratio: float) -> str:
        pct = f"{ratio * 100:g}%"
        return {
            RANDOM: f"Random {pct}",
            FIRST_N: f"First {pct}",
            LAST_N: f"Last {pct}",
            TFIDF_ONLY: "TF-IDF Only",
            BUDGETMEM: "BudgetMem",
        }[self.kind]


def select_with_strategy(
    chunks: Sequence[Chunk],
    features: Sequence[FeatureVector],
    strategy: SelectionStrategy,
    ratio: float,
    weights: SalienceWeights = SalienceWeights(),
    doc_id: str = "",
) -> Set[int]:
    """Pick ``max(1, floor(ratio * M))`` chunk ids under ``strategy``."""
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    m = len(chunks)
    k = budget_k(ratio, m)
    kind = strategy.kind
    if kind == BUDGETMEM:
        return select_budget(score_all(features, weights), ratio)
    if kind == RANDOM:
        rng = random.Random(f"{strategy.seed}:{doc_id}")
        return set(rng.sample(range(m), k))
    if kind == FIRST_N:
        return set(range(k))
    if kind == LAST_N:
        return set(range(m - k, m))
    if kind == TFIDF_ONLY:
        return set(sorted(range(m), key=lambda i: (-features[i].tfidf_mean, i))[:k])
    raise ValueError(f"unknown strategy {kind!r}")


# ---------------------------------------------------------------------------
# evaluation loop


@dataclass
class EvalReport:
    system_name: str
    n_examples: int
    mean_f1: float
    mean_exact_match: float
    storage_ratio: float
    memory_saving: float
    mean_latency_seconds: float
    mean_chunks_used: float
    store_recall: float
    budget_ratio: float = 1.0
    per_example: List[Dict] = field(default_factory=list)

    def csv_row(self) -> List:
        return [
            self.system_name,
            self.n_examples,
            self.mean_f1,
            self.mean_exact_match,
            self.storage_ratio,
            self.memory_saving,
            self.mean_latency_seconds,
            self.mean_chunks_used,
            self.store_recall,
        ]


@dataclass
class PreparedDoc:
    chunks: List[Chunk]
    features: List[FeatureVector]
    scores: List[SalienceScore]


def prepare(corpus: Corpus, config: RunConfig, doc_ids: Optional[Set[str]] = None) -> Dict[str, PreparedDoc]:
    """Chunk and featurize each document once; shared across strategies and ratios."""
    lexicon = load_lexicon(config.lexicon_path)
    weights = SalienceWeights(tuple(config.weights))
    out = {}
    for d in corpus.documents:
        if doc_ids is not None and d.doc_id not in doc_ids:
            continue
        chunks = chunk_document(tokenize_doc(d.doc_id, d.text, d.sections), config.chunk_size, config.chunk_overlap)
        feats = document_features(chunks, lexicon)
        out[d.doc_id] = PreparedDoc(chunks, feats, score_all(feats, weights))
    return out


def _gold_ids(ex: QAExample, chunks: Sequence[Chunk]) -> List[int]:
    if ex.answer_start is not None:
        return gold_chunk_ids(chunks, ex.answer_start, ex.answer_start + len(ex.gold_answer))
    return list(ex.gold_chunk_ids)


def evaluate_system(
    corpus: Corpus,
    config: RunConfig,
    strategy: Optional[SelectionStrategy] = None,
    system_name: Optional[str] = None,
    prepared: Optional[Dict[str, PreparedDoc]] = None,
) -> EvalReport:
    config.validate()
    if strategy is None:
        strategy = SelectionStrategy(config.strategy, config.seed)
    examples = corpus.examples
    if not examples:
        raise ValueError("corpus has no QA examples")
    known = {d.doc_id for d in corpus.documents}
    missing = sorted({ex.doc_id for ex in examples} - known)
    if missing:
        raise MissingDocumentError(f"examples reference unknown documents: {', '.join(missing[:5])}")

    needed = {ex.doc_id for ex in examples}
    if prepared is None:
        prepared = prepare(corpus, config, needed)
    weights = SalienceWeights(tuple(config.weights))
    endpoint = config.endpoint()

    selections: Dict[str, Set[int]] = {}
    stored = total = 0
    for doc_id in sorted(needed):
        p = prepared[doc_id]
        sel = select_with_strategy(p.chunks, p.features, strategy, config.budget_ratio, weights, doc_id)
        selections[doc_id] = sel
        stored += len(sel)
        total += len(p.chunks)

    def run_one(ex: QAExample) -> Dict:
        p = prepared[ex.doc_id]
        sel = selections[ex.doc_id]
        store = build_batch_store(p.chunks, p.scores, sel)
        gold = _gold_ids(ex, p.chunks)
        t0 = time.perf_counter()
        res = retrieve(store, ex.question, config.top_k, config.retrieval_mode, config.alpha, config.k1, config.b)
        ctx = pack(res.episodic, res.semantic, config.token_budget)
        try:
            if endpoint is not None:
                ans = answer_external(ctx, ex.question, endpoint)
            else:
                ans = answer_extractive(ctx, ex.question)
        except EmptyContextError:
            ans = Answer("", [])
        latency = time.perf_counter() - t0
        return {
            "doc_id": ex.doc_id,
            "question": ex.question,
            "gold_answer": ex.gold_answer,
            "prediction": ans.text,
            "cited": ans.cited_mem_ids,
            "f1": token_f1(ans.text, ex.gold_answer),
            "exact_match": exact_match(ans.text, ex.gold_answer),
            "chunks_used": len(ctx.blocks),
            "gold_chunk_ids": gold,
            "gold_in_store": bool(set(gold) & sel) if gold else None,
            "latency_s": latency,
        }

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(run_one, examples))
    else:
        records = [run_one(ex) for ex in examples]

    n = len(records)
    labelled = [r["gold_in_store"] for r in records if r["gold_in_store"] is not None]
    ratio = stored / total
    return EvalReport(
        system_name=system_name or strategy.label(config.budget_ratio),
        n_examples=n,
        mean_f1=sum(r["f1"] for r in records) / n,
        mean_exact_match=sum(r["exact_match"] for r in records) / n,
        storage_ratio=ratio,
        memory_saving=1.0 - ratio,
        mean_latency_seconds=sum(r["latency_s"] for r in records) / n,
        mean_chunks_used=sum(r["chunks_used"] for r in records) / n,
        store_recall=sum(labelled) / len(labelled) if labelled else 0.0,
        budget_ratio=config.budget_ratio,
        per_example=records,
    )


def budget_sweep(
    corpus: Corpus,
    config: RunConfig,
    ratios: Sequence[float] = DEFAULT_SWEEP,
    strategy: Optional[SelectionStrategy] = None,
) -> List[EvalReport]:
    for r in ratios:
        if not 0 < r <= 1:
            raise ValueError(f"sweep ratio {r} outside (0, 1]")
    prepared = prepare(corpus, config, {ex.doc_id for ex in corpus.examples})
    strategy = strategy or SelectionStrategy(config.strategy, config.seed)
    reports = []
    for r in ratios:
        name = f"{strategy.label(r)} @ {r * 100:g}%"
        reports.append(evaluate_system(corpus, config.replace(budget_ratio=r), strategy, name, prepared))
    return reports


def run_baselines(corpus: Corpus, config: RunConfig) -> List[EvalReport]:
    prepared = prepare(corpus, config, {ex.doc_id for ex in corpus.examples})
    return [
        evaluate_system(corpus, config, SelectionStrategy(kind, config.seed), prepared=prepared)
        for kind in BASELINE_ORDER
    ]


# ---------------------------------------------------------------------------
# report files


def _pct(x: float) -> str:
    return f"{x * 100:.1f}"


def _markdown(reports: Sequence[EvalReport], layout: str) -> str:
    if layout == "sweep":
        head = ["Budget", "F1", "Memory Save", "Store Recall"]
        rows = [[f"{r.budget_ratio * 100:g}%", f"{r.mean_f1:.4f}", f"{_pct(r.memory_saving)}%", f"{r.store_recall:.3f}"] for r in reports]
    elif layout == "baselines":
        head = ["Method", "F1 Score", "Memory Save", "Store Recall"]
        rows = [[r.system_name, f"{r.mean_f1:.4f}", f"{_pct(r.memory_saving)}%", f"{r.store_recall:.3f}"] for r in reports]
    else:
        head = [
            "System", "N", "F1", "EM", "Memory Storage (%)", "Memory Savings (%)",
            "Latency (s)", "Chunks Used", "Store Recall",
        ]
        rows = [
            [
                r.system_name, str(r.n_examples), f"{r.mean_f1:.4f}", f"{r.mean_exact_match:.4f}",
                _pct(r.storage_ratio), _pct(r.memory_saving), f"{r.mean_latency_seconds:.4f}",
                f"{r.mean_chunks_used:.2f}", f"{r.store_recall:.3f}",
            ]
            for r in reports
        ]
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join("---" for _ in head) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def render_report(reports: Sequence[EvalReport], fmt: str = "csv", layout: str = "summary") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in reports:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_row()])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([asdict(r) for r in reports], indent=2, ensure_ascii=False) + "\n"
    if fmt == "markdown":
        return _markdown(reports, layout)
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(
    reports: Sequence[EvalReport], fmt: str, path: Union[str, Path], layout: str = "summary"
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report(reports, fmt, layout), encoding="utf-8", newline="\n")
    return path


def load_reports(path: Union[str, Path]) -> List[EvalReport]:
    return [EvalReport(**rec) for rec in json.loads(Path(path).read_text(encoding="utf-8"))]
