"""Lexical salience features, the chunk scorer, and scorer training."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .text_prep import NUMBER, PUNCT, WORD, Chunk, Token, terms, tokenize

FEATURE_NAMES = (
    "entity_density",
    "question_presence",
    "number_density",
    "position_score",
    "tfidf_mean",
    "discourse_score",
)
DEFAULT_WEIGHTS = (0.2, 0.1, 0.15, 0.15, 0.2, 0.1)

WEIGHTED_SUM = "weighted_sum"
SIGMOID_LINEAR = "sigmoid_linear"

_SENTENCE_END = {".", "?", "!"}
_INTERROGATIVES = {"what", "why", "how", "when", "where", "who", "whom", "whose", "which"}
MAX_RANK_PAIRS = 10_000


class DegenerateDataError(ValueError):
    """Training data cannot support the requested loss."""


class TrainingError(RuntimeError):
    """Raised when the training loss stops behaving (increase or non-finite)."""


def load_lexicon(path: Optional[Path] = None) -> Tuple[Tuple[str, ...], ...]:
    """Read a marker file: one phrase per line, ``#`` starts a comment."""
    if path is None:
        raw = resources.files("selmem.resources").joinpath("discourse_markers.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    phrases = []
    for line in raw.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            phrases.append(tuple(terms(tokenize(line))))
    return tuple(p for p in phrases if p)


@dataclass(frozen=True)
class FeatureVector:
    entity_density: float
    question_presence: float
    number_density: float
    position_score: float
    tfidf_mean: float
    discourse_score: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=float)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "FeatureVector":
        return cls(*(float(v) for v in values))


@dataclass(frozen=True)
class SalienceWeights:
    weights: Tuple[float, ...] = DEFAULT_WEIGHTS
    bias: float = 0.0
    mode: str = WEIGHTED_SUM

    def __post_init__(self):
        if len(self.weights) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} weights, got {len(self.weights)}")
        if not all(math.isfinite(w) for w in self.weights):
            raise ValueError("weights must be finite")
        if self.mode not in (WEIGHTED_SUM, SIGMOID_LINEAR):
            raise ValueError(f"unknown scoring mode {self.mode!r}")
        if self.mode == WEIGHTED_SUM and any(w < 0 for w in self.weights):
            raise ValueError("weighted_sum mode requires non-negative weights")


@dataclass(frozen=True)
class SalienceScore:
    chunk_id: int
    score: float


@dataclass(frozen=True)
class LabeledChunk:
    features: FeatureVector
    is_answer_bearing: bool


@dataclass
class DocContext:
    """Per-document statistics needed to featurize any of its chunks."""

    n_chunks: int
    doc_freq: Counter
    raw_tfidf: Dict[int, float]
    tfidf_min: float
    tfidf_max: float
    lexicon: Tuple[Tuple[str, ...], ...] = field(default_factory=tuple)


def _raw_tfidf(chunk_terms: List[str], doc_freq: Counter, n_chunks: int) -> float:
    """Sum of the chunk's L2-normalized smoothed TF-IDF row.

    Divided by the document vocabulary size this is the mean over the row;
    the division is dropped since values are min-max scaled per document.
    """
    if not chunk_terms:
        return 0.0
    w = [c * (math.log((1 + n_chunks) / (1 + doc_freq[t])) + 1.0) for t, c in Counter(chunk_terms).items()]
    norm = math.sqrt(sum(v * v for v in w))
    return sum(w) / norm


def build_doc_context(chunks: Sequence[Chunk], lexicon=None) -> DocContext:
    """TF-IDF statistics treat each chunk of the document as one document."""
    chunk_terms = {c.chunk_id: terms(c.tokens) for c in chunks}
    df: Counter = Counter()
    for ts in chunk_terms.values():
        df.update(set(ts))
    n = len(chunks)
    raw = {cid: _raw_tfidf(ts, df, n) for cid, ts in chunk_terms.items()}
    vals = list(raw.values()) or [0.0]
    return DocContext(
        n_chunks=n,
        doc_freq=df,
        raw_tfidf=raw,
        tfidf_min=min(vals),
        tfidf_max=max(vals),
        lexicon=load_lexicon() if lexicon is None else tuple(lexicon),
    )


def is_entity(tok: Token, sentence_initial: bool) -> bool:
    if tok.kind != WORD:
        return False
    text = tok.text
    if text.isupper() and sum(ch.isalpha() for ch in text) >= 2:
        return True
    return text[0].isupper() and not sentence_initial


def _sentences(tokens: Sequence[Token]) -> List[List[Token]]:
    out, cur = [], []
    for tok in tokens:
        cur.append(tok)
        if tok.text in _SENTENCE_END:
            out.append(cur)
            cur = []
    if cur:
        out.append(cur)
    return out


def position_score(i: int, m: int) -> float:
    if i == 0 or i == m - 1:
        return 1.0
    return max(0.0, 1.0 - min(i, m - 1 - i) / math.ceil(m / 2))


def _count_phrases(words: List[str], lexicon) -> int:
    by_first: Dict[str, List[Tuple[str, ...]]] = {}
    for phrase in lexicon:
        by_first.setdefault(phrase[0], []).append(phrase)
    hits = 0
    for j, w in enumerate(words):
        for phrase in by_first.get(w, ()):
            if tuple(words[j : j + len(phrase)]) == phrase:
                hits += 1
    return hits


def extract_features(chunk: Chunk, ctx: DocContext) -> FeatureVector:
    toks = chunk.tokens
    n = len(toks)
    if n == 0:
        return FeatureVector(0.0, 0.0, 0.0, position_score(chunk.chunk_id, ctx.n_chunks), 0.0, 0.0)

    entities = 0
    prev = None
    for tok in toks:
        entities += is_entity(tok, prev is None or prev.text in _SENTENCE_END)
        prev = tok
    numbers = sum(t.kind == NUMBER for t in toks)

    qmarks = sum(t.text == "?" for t in toks)
    leads = 0
    for sent in _sentences(toks):
        first = next((t for t in sent if t.kind != PUNCT), None)
        if first is not None and first.text.lower() in _INTERROGATIVES:
            leads += 1
    question = min(1.0, (qmarks + leads) / 3)

    lo, hi = ctx.tfidf_min, ctx.tfidf_max
    raw = ctx.raw_tfidf.get(chunk.chunk_id, 0.0)
    tfidf = (raw - lo) / (hi - lo) if hi > lo else 0.0

    discourse = min(1.0, _count_phrases(terms(toks), ctx.lexicon) / n)

    return FeatureVector(
        entity_density=entities / n,
        question_presence=question,
        number_density=numbers / n,
        position_score=position_score(chunk.chunk_id, ctx.n_chunks),
        tfidf_mean=min(1.0, max(0.0, tfidf)),
        discourse_score=discourse,
    )


def document_features(chunks: Sequence[Chunk], lexicon=None) -> List[FeatureVector]:
    ctx = build_doc_context(chunks, lexicon)
    return [extract_features(c, ctx) for c in chunks]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def score(features: FeatureVector, w: SalienceWeights = SalienceWeights(), chunk_id: int = -1) -> SalienceScore:
    z = sum(wi * fi for wi, fi in zip(w.weights, features.as_array()))
    if w.mode == SIGMOID_LINEAR:
        s = float(_sigmoid(z + w.bias))
    else:
        s = min(1.0, max(0.0, float(z)))
    return SalienceScore(chunk_id, s)


def score_all(features: Sequence[FeatureVector], w: SalienceWeights = SalienceWeights()) -> List[SalienceScore]:
    return [score(f, w, i) for i, f in enumerate(features)]


# ---------------------------------------------------------------------------
# training


def rank_pairs(labels: np.ndarray, seed: int, max_pairs: int = MAX_RANK_PAIRS) -> np.ndarray:
    """(positive index, negative index) rows; uniformly subsampled past ``max_pairs``."""
    pos = np.flatnonzero(labels)
    neg = np.flatnonzero(~labels)
    total = len(pos) * len(neg)
    if total <= max_pairs:
        flat = np.arange(total)
    else:
        flat = np.sort(np.random.default_rng(seed).choice(total, size=max_pairs, replace=False))
    return np.stack([pos[flat // len(neg)], neg[flat % len(neg)]], axis=1)


def loss_and_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, pairs: np.ndarray, margin: float):
    """Summed BCE over all chunks plus summed hinge over pairs.

    ``theta`` is the weight vector with the bias appended.
    """
    z = X @ theta[:-1] + theta[-1]
    s = _sigmoid(z)
    # log s = -softplus(-z), log(1 - s) = -softplus(z)
    bce = np.sum(np.where(y, np.logaddexp(0.0, -z), np.logaddexp(0.0, z)))
    dz = s - y

    rank = 0.0
    if len(pairs):
        p, q = pairs[:, 0], pairs[:, 1]
        slack = margin + s[q] - s[p]
        active = slack > 0
        rank = float(np.sum(slack[active]))
        ds = np.zeros_like(s)
        np.add.at(ds, q[active], 1.0)
        np.add.at(ds, p[active], -1.0)
        dz = dz + ds * s * (1.0 - s)

    grad = np.concatenate([X.T @ dz, [dz.sum()]])
    return float(bce) + rank, grad


@dataclass
class TrainingTrace:
    losses: List[float]


def train_scorer(
    data: Sequence[LabeledChunk],
    margin: float = 0.2,
    learning_rate: float = 0.1,
    epochs: int = 500,
    seed: int = 0,
    use_rank: bool = True,
    trace: Optional[TrainingTrace] = None,
) -> SalienceWeights:
    """Full-batch gradient descent on BCE + margin ranking loss.

    A step that would raise the loss is halved until it does not; if no
    acceptable step exists the current point is treated as converged.
    """
    if not data:
        raise DegenerateDataError("no training data")
    X = np.stack([d.features.as_array() for d in data])
    y = np.array([d.is_answer_bearing for d in data], dtype=bool)
    if use_rank and (y.all() or not y.any()):
        raise DegenerateDataError("ranking loss needs at least one positive and one negative chunk")
    pairs = rank_pairs(y, seed) if use_rank else np.empty((0, 2), dtype=int)

    theta = np.zeros(X.shape[1] + 1)
    loss, grad = loss_and_grad(theta, X, y.astype(float), pairs, margin)
    losses = [loss]
    for epoch in range(epochs):
        step = learning_rate
        for _ in range(40):
            cand = theta - step * grad
            new_loss, new_grad = loss_and_grad(cand, X, y.astype(float), pairs, margin)
            if not math.isfinite(new_loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            if new_loss <= loss + 1e-9:
                break
            step /= 2
        else:
            break
        if new_loss > losses[-1] + 1e-9:
            raise TrainingError(f"loss increased at epoch {epoch}: {losses[-1]!r} -> {new_loss!r}")
        theta, loss, grad = cand, new_loss, new_grad
        losses.append(loss)

    if trace is not None:
        trace.losses = losses
    return SalienceWeights(tuple(float(v) for v in theta[:-1]), float(theta[-1]), SIGMOID_LINEAR)
