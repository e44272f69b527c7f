"""Synthetic long-paper corpora with planted facts, and SQuAD ingestion.

On-disk corpus layout (``save_corpus`` / ``load_corpus``)::

    <dir>/docs/<doc_id>.txt     document text, UTF-8
    <dir>/documents.jsonl       {"doc_id", "sections": [[name, start, end], ...]}
    <dir>/qa.jsonl              {"doc_id", "question", "gold_answer",
                                 "gold_chunk_ids", "section", "answer_start", "qa_id"}
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .text_prep import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_OVERLAP,
    Chunk,
    chunk_document,
    token_count,
    tokenize_doc,
)

log = logging.getLogger(__name__)

SECTIONS = (
    "Abstract",
    "Introduction",
    "Related Work",
    "Methodology",
    "Experiments",
    "Results",
    "Discussion",
    "Conclusion",
)
MIDDLE_SECTIONS = ("Methodology", "Experiments", "Results")
# relative share of the paper's token budget per section
_SECTION_SHARE = {
    "Abstract": 4,
    "Introduction": 12,
    "Related Work": 12,
    "Methodology": 18,
    "Experiments": 18,
    "Results": 16,
    "Discussion": 12,
    "Conclusion": 8,
}
MIDDLE_FRACTION = 0.6
# share of filler clauses built around rare per-paper jargon (high TF-IDF, no entities)
_JARGON_RATE = 0.08
JARGON_PASSAGE_EVERY = 1200
JARGON_PASSAGE_SENTENCES = 4


class SquadFormatError(ValueError):
    pass


class SchemaVersionError(SquadFormatError):
    pass


@dataclass
class QAExample:
    doc_id: str
    question: str
    gold_answer: str
    gold_chunk_ids: List[int] = field(default_factory=list)
    answer_start: Optional[int] = None
    section: Optional[str] = None
    qa_id: Optional[str] = None


@dataclass
class Document:
    doc_id: str
    text: str
    sections: Tuple[Tuple[str, int, int], ...] = ()


@dataclass
class Corpus:
    documents: List[Document] = field(default_factory=list)
    examples: List[QAExample] = field(default_factory=list)

    def document(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)

    def by_id(self) -> Dict[str, Document]:
        return {d.doc_id: d for d in self.documents}


@dataclass
class SyntheticPaperSpec:
    seed: int = 42
    n_papers: int = 200
    min_tokens: int = 5000
    max_tokens: int = 10000
    questions_per_paper: int = 5
    section_plan: Tuple[str, ...] = SECTIONS

    def __post_init__(self):
        if self.min_tokens > self.max_tokens:
            raise ValueError("min_tokens must be <= max_tokens")
        if self.questions_per_paper < 1:
            raise ValueError("questions_per_paper must be >= 1")
        if self.n_papers < 0:
            raise ValueError("n_papers must be >= 0")
        if not self.section_plan:
            raise ValueError("section_plan must not be empty")


def short_spec(seed: int = 42, n_papers: int = 500) -> SyntheticPaperSpec:
    """Single-paragraph documents, one question each, mostly one or two chunks."""
    return SyntheticPaperSpec(
        seed=seed,
        n_papers=n_papers,
        min_tokens=96,
        max_tokens=240,
        questions_per_paper=1,
        section_plan=("Paragraph",),
    )


def gold_chunk_ids(chunks: Sequence[Chunk], start: int, end: int) -> List[int]:
    """Chunks whose character range covers ``[start, end)``."""
    out = []
    for c in chunks:
        if not c.tokens:
            continue
        lo, hi = c.char_span
        if lo <= start and end <= hi:
            out.append(c.chunk_id)
    return out


def relabel(corpus: Corpus, size: int, overlap: int) -> Corpus:
    """Recompute gold chunk ids for a different chunking, where spans are known."""
    docs = corpus.by_id()
    cache: Dict[str, List[Chunk]] = {}
    examples = []
    for ex in corpus.examples:
        if ex.answer_start is None:
            examples.append(ex)
            continue
        if ex.doc_id not in cache:
            d = docs[ex.doc_id]
            cache[ex.doc_id] = chunk_document(tokenize_doc(d.doc_id, d.text, d.sections), size, overlap)
        ids = gold_chunk_ids(cache[ex.doc_id], ex.answer_start, ex.answer_start + len(ex.gold_answer))
        examples.append(
            QAExample(ex.doc_id, ex.question, ex.gold_answer, ids, ex.answer_start, ex.section, ex.qa_id)
        )
    return Corpus(list(corpus.documents), examples)


# ---------------------------------------------------------------------------
# synthetic generator

_ADJ = (
    "general broad common simple careful standard overall typical related similar "
    "different useful practical natural relevant small large stable basic wider"
).split()
_NOUN = (
    "approach method setting system model process result analysis framework problem "
    "task design component structure pattern behaviour question idea study direction "
    "work part view case step goal"
).split()
_PARTICIPLE = (
    "studied described considered discussed examined presented explored used "
    "applied observed noted reviewed"
).split()
_VERB = "consider discuss examine describe explore review outline revisit".split()

_CLAUSES = (
    "the {adj} {noun} is {part} by the {noun}",
    "we {verb} the {noun} of the {adj} {noun}",
    "this {noun} gives a {adj} {noun} for the {noun}",
    "in this {noun} the {noun} remains {adj}",
    "such a {noun} can be {part} with a {adj} {noun}",
    "the {noun} and the {noun} are {part} together",
    "a {adj} {noun} is often {part} in this {noun}",
    "we also {verb} how the {noun} relates to the {noun}",
)
_JARGON_CLAUSES = (
    "the {jar} {noun} relies on {jar} and {jar} terms",
    "we {verb} the {jar} {noun} under a {jar} view",
)

_SYL = "ka lo ri tan vel mor dex sa pra lin qui zor fen ta ro mi nex bal cor vis".split()
_ORG_SUFFIX = ("Institute", "University", "Labs", "Research Center", "Foundation")
_SURNAMES = (
    "Okafor Lindqvist Moreau Tanaka Haddad Kowalski Ferreira Nakamura Petrov "
    "Castillo Brennan Olsen Varga Iyer Duarte Lambert Novak Sato Keller Ward"
).split()
# generic research questions; they share no content words with the QA questions
_RHETORICAL = (
    "Why does this matter?",
    "How well does this hold up?",
    "What does this imply?",
    "How should this be read?",
    "Why is this useful?",
)
_DEF_OBJECTS = (
    "stored chunks", "retrieved passages", "memory entries", "answer spans",
    "query tokens", "section headers", "salient sentences", "budget units",
)
_DEF_RELATIONS = (
    "the ratio of {a} to {b}",
    "the fraction of {a} that overlap {b}",
    "the expected number of {a} per {b}",
    "the weighted count of {a} across {b}",
)


def _pseudo_word(rng: random.Random, n_syl: int) -> str:
    return "".join(rng.choice(_SYL) for _ in range(n_syl))


def _name(rng: random.Random) -> str:
    return _pseudo_word(rng, 2).capitalize()


def _words_for(rng: random.Random, n: int, jargon: Sequence[str]) -> List[str]:
    words: List[str] = []
    while len(words) < n:
        if jargon and rng.random() < _JARGON_RATE:
            tmpl = rng.choice(_JARGON_CLAUSES)
        else:
            tmpl = rng.choice(_CLAUSES)
        clause = tmpl.format_map(_Slots(rng, jargon))
        if words:
            words.append("and")
        words.extend(clause.split())
    return words[:n]


class _Slots(dict):
    def __init__(self, rng, jargon):
        super().__init__()
        self.rng, self.jargon = rng, jargon

    def __missing__(self, key):
        pool = {"adj": _ADJ, "noun": _NOUN, "part": _PARTICIPLE, "verb": _VERB, "jar": self.jargon}[key]
        return self.rng.choice(pool)


def _filler_sentence(rng: random.Random, n_tokens: int, jargon: Sequence[str]) -> str:
    """A lowercase filler sentence of exactly ``n_tokens`` tokens (words + final period)."""
    if n_tokens <= 1:
        return "."
    words = _words_for(rng, n_tokens - 1, jargon)
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def _jargon_sentence(rng: random.Random, n_tokens: int) -> str:
    """Filler-shaped sentence whose content words are fresh rare coinages."""
    if n_tokens <= 1:
        return "."
    words = []
    while len(words) < n_tokens - 1:
        words.extend(["the", _pseudo_word(rng, 3), rng.choice(_NOUN), "of", _pseudo_word(rng, 3)])
    words = words[: n_tokens - 1]
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


def _split_lengths(rng: random.Random, total: int) -> List[int]:
    out = []
    while total > 22:
        n = rng.randint(8, 16)
        out.append(n)
        total -= n
    if total > 0:
        out.append(total)
    return out


@dataclass
class _Fact:
    kind: str
    sentences: List[str]
    question: str
    answer: str
    section: str = ""

    def tokens(self, with_support: bool) -> int:
        return token_count(self.text(with_support))

    def text(self, with_support: bool) -> str:
        return " ".join(self.sentences if with_support else self.sentences[:1])


def _make_fact(rng: random.Random, kind: str, used: set) -> _Fact:
    def fresh(make):
        for _ in range(1000):
            v = make()
            if v not in used:
                used.add(v)
                return v
        raise RuntimeError("name space exhausted")

    method = fresh(lambda: f"{_name(rng)}-{rng.randint(2, 99)}")
    dataset = fresh(lambda: f"{_pseudo_word(rng, 2).upper()}-{rng.randint(10, 999)}")
    a1, a2 = rng.sample(_SURNAMES, 2)
    year = rng.randint(1998, 2024)
    n_runs, n_gpus = rng.randint(3, 12), rng.randint(2, 64)

    if kind == "entity":
        org = fresh(lambda: f"{_name(rng)} {rng.choice(_ORG_SUFFIX)}")
        main = (
            f"Importantly, the {method} framework was developed at the {org} by "
            f"{a1} and {a2} in {year}."
        )
        q = f"Which institution developed the {method} framework?"
        answer = org
    elif kind == "number":
        acc = f"{rng.randint(51, 98)}.{rng.randint(0, 9)} percent"
        main = (
            f"In particular, {method} reaches an accuracy of {acc} on the {dataset} "
            f"benchmark across {n_runs} runs."
        )
        q = f"What accuracy does {method} reach on the {dataset} benchmark?"
        answer = acc
    else:
        term = fresh(lambda: f"{_name(rng)} {rng.choice(('Score', 'Index', 'Ratio', 'Coefficient'))}")
        a, b = rng.sample(_DEF_OBJECTS, 2)
        definition = rng.choice(_DEF_RELATIONS).format(a=a, b=b)
        main = f"We define the {term} as {definition}, following {a1} and {a2} ({year})."
        q = f"How is the {term} defined?"
        answer = definition
    lead = rng.choice(_RHETORICAL)
    a3 = rng.choice([x for x in _SURNAMES if x not in (a1, a2)])
    support = (
        f"Note that {a1} and {a3} of the {_name(rng)} {rng.choice(_ORG_SUFFIX)} replicated "
        f"{method} on {dataset} with {n_gpus} GPUs and {n_runs * 8} hours in {year + 1}."
    )
    return _Fact(kind, [main, lead, support], q, answer)


def _assign_sections(rng: random.Random, n: int, plan: Sequence[str]) -> List[str]:
    middle = [s for s in plan if s in MIDDLE_SECTIONS]
    boundary = [s for s in plan if s not in MIDDLE_SECTIONS]
    if not middle or not boundary:
        pool = list(plan)
        picks = rng.sample(pool, min(n, len(pool)))
        return picks + [rng.choice(pool) for _ in range(n - len(picks))]
    n_mid = round(MIDDLE_FRACTION * n)
    out = []
    for group, count in ((middle, n_mid), (boundary, n - n_mid)):
        picks = rng.sample(group, min(count, len(group)))
        picks += [rng.choice(group) for _ in range(count - len(picks))]
        out.extend(picks)
    rng.shuffle(out)
    return out


def _section_budgets(plan: Sequence[str], total: int) -> Dict[str, int]:
    shares = [_SECTION_SHARE.get(s, 1) for s in plan]
    raw = [total * w / sum(shares) for w in shares]
    budgets = [int(r) for r in raw]
    # largest remainders get the leftover tokens
    for i in sorted(range(len(plan)), key=lambda i: -(raw[i] - budgets[i]))[: total - sum(budgets)]:
        budgets[i] += 1
    return dict(zip(plan, budgets))


def _generate_paper(rng: random.Random, doc_id: str, spec: SyntheticPaperSpec):
    n_tokens = rng.randint(spec.min_tokens, spec.max_tokens)
    used: set = set()
    kinds = ("entity", "number", "definition")
    facts = [_make_fact(rng, kinds[(i + rng.randint(0, 2)) % 3], used) for i in range(spec.questions_per_paper)]
    for f, sec in zip(facts, _assign_sections(rng, len(facts), spec.section_plan)):
        f.section = sec
    jargon = [_pseudo_word(rng, 3) for _ in range(6)]

    with_support = n_tokens >= 400
    while facts and sum(f.tokens(with_support) for f in facts) > n_tokens:
        dropped = facts.pop()
        log.warning("%s: %d tokens too few, dropping a planted fact (%s)", doc_id, n_tokens, dropped.kind)
    if not facts:
        raise ValueError(f"{doc_id}: {n_tokens} tokens cannot hold a single planted fact")

    budgets = _section_budgets(spec.section_plan, n_tokens)
    fact_tokens = {s: sum(f.tokens(with_support) for f in facts if f.section == s) for s in spec.section_plan}
    filler = {s: max(0, budgets[s] - fact_tokens[s]) for s in spec.section_plan}
    excess = sum(fact_tokens.values()) + sum(filler.values()) - n_tokens
    while excess > 0:
        s = max(filler, key=filler.get)
        cut = min(excess, filler[s])
        filler[s] -= cut
        excess -= cut

    text_parts: List[str] = []
    sections = []
    examples = []
    pos = 0
    filler_sentences = {}
    for sec in spec.section_plan:
        filler_sentences[sec] = [_filler_sentence(rng, n, jargon) for n in _split_lengths(rng, filler[sec])]
    # dense jargon passages: lexically rare but free of entities and numbers
    for _ in range(n_tokens // JARGON_PASSAGE_EVERY):
        sec = rng.choice(spec.section_plan)
        sents = filler_sentences[sec]
        if len(sents) < JARGON_PASSAGE_SENTENCES:
            continue
        at = rng.randint(0, len(sents) - JARGON_PASSAGE_SENTENCES)
        for j in range(at, at + JARGON_PASSAGE_SENTENCES):
            sents[j] = _jargon_sentence(rng, token_count(sents[j]))

    for s_idx, sec in enumerate(spec.section_plan):
        sentences = filler_sentences[sec]
        sec_facts = [f for f in facts if f.section == sec]
        slots = sorted(rng.randint(0, len(sentences)) for _ in sec_facts)
        for offset, (slot, f) in enumerate(zip(slots, sec_facts)):
            sentences.insert(slot + offset, f)
        if s_idx:
            text_parts.append("\n\n")
            pos += 2
        start = pos
        for j, item in enumerate(sentences):
            if j:
                text_parts.append(" ")
                pos += 1
            if isinstance(item, _Fact):
                body = item.text(with_support)
                a_off = body.index(item.answer)
                examples.append((item, pos + a_off))
            else:
                body = item
            text_parts.append(body)
            pos += len(body)
        sections.append((sec, start, pos))
    return Document(doc_id, "".join(text_parts), tuple(sections)), examples


def generate(
    spec: SyntheticPaperSpec = SyntheticPaperSpec(),
    chunking: Tuple[int, int] = (DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP),
) -> Corpus:
    rng = random.Random(spec.seed)
    corpus = Corpus()
    width = max(3, len(str(max(spec.n_papers - 1, 0))))
    for p in range(spec.n_papers):
        doc_id = f"paper{p:0{width}d}"
        doc, planted = _generate_paper(rng, doc_id, spec)
        chunks = chunk_document(tokenize_doc(doc.doc_id, doc.text, doc.sections), *chunking)
        corpus.documents.append(doc)
        for q_idx, (fact, start) in enumerate(planted):
            ids = gold_chunk_ids(chunks, start, start + len(fact.answer))
            corpus.examples.append(
                QAExample(doc_id, fact.question, fact.answer, ids, start, fact.section, f"{doc_id}-q{q_idx}")
            )
    return corpus


# ---------------------------------------------------------------------------
# persistence


def save_corpus(corpus: Corpus, out_dir: Union[str, Path]) -> None:
    out = Path(out_dir)
    (out / "docs").mkdir(parents=True, exist_ok=True)
    with open(out / "documents.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for d in corpus.documents:
            (out / "docs" / f"{d.doc_id}.txt").write_text(d.text, encoding="utf-8", newline="\n")
            fh.write(json.dumps({"doc_id": d.doc_id, "sections": [list(s) for s in d.sections]}) + "\n")
    with open(out / "qa.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for ex in corpus.examples:
            rec = {
                "doc_id": ex.doc_id,
                "question": ex.question,
                "gold_answer": ex.gold_answer,
                "gold_chunk_ids": ex.gold_chunk_ids,
                "section": ex.section,
                "answer_start": ex.answer_start,
                "qa_id": ex.qa_id,
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> List[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    rows.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc.msg}") from exc
    return rows


def load_corpus(in_dir: Union[str, Path]) -> Corpus:
    root = Path(in_dir)
    if not (root / "qa.jsonl").exists():
        raise FileNotFoundError(f"{root}: no qa.jsonl (not a corpus directory)")
    docs = []
    manifest = root / "documents.jsonl"
    if manifest.exists():
        for rec in _read_jsonl(manifest):
            text = (root / "docs" / f"{rec['doc_id']}.txt").read_text(encoding="utf-8")
            docs.append(Document(rec["doc_id"], text, tuple(tuple(s) for s in rec.get("sections", []))))
    else:
        for p in sorted((root / "docs").glob("*.txt")):
            docs.append(Document(p.stem, p.read_text(encoding="utf-8")))
    examples = [
        QAExample(
            r["doc_id"],
            r["question"],
            r["gold_answer"],
            list(r.get("gold_chunk_ids") or []),
            r.get("answer_start"),
            r.get("section"),
            r.get("qa_id"),
        )
        for r in _read_jsonl(root / "qa.jsonl")
    ]
    return Corpus(docs, examples)


# ---------------------------------------------------------------------------
# SQuAD v2.0

_SLUG_RE = re.compile(r"[^A-Za-z0-9]+")
_ACCEPTED_VERSIONS = ("v2.0", "2.0")


def _slug(title: str) -> str:
    return _SLUG_RE.sub("_", title).strip("_") or "untitled"


def _field(obj, key, where, kind):
    if not isinstance(obj, dict) or key not in obj:
        raise SquadFormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kind):
        raise SquadFormatError(f"{where}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def parse_squad(raw: dict, size: int = DEFAULT_CHUNK_SIZE, overlap: int = DEFAULT_OVERLAP, source: str = "<squad>") -> Corpus:
    version = raw.get("version") if isinstance(raw, dict) else None
    if version is not None and str(version) not in _ACCEPTED_VERSIONS:
        raise SchemaVersionError(f"{source}: unsupported SQuAD version {version!r} (expected v2.0)")
    corpus = Corpus()
    for a_idx, article in enumerate(_field(raw, "data", source, list)):
        where = f"{source}: data[{a_idx}]"
        title = _slug(str(article.get("title", f"article{a_idx}")) if isinstance(article, dict) else "")
        for p_idx, para in enumerate(_field(article, "paragraphs", where, list)):
            pwhere = f"{where}.paragraphs[{p_idx}]"
            context = _field(para, "context", pwhere, str)
            doc_id = f"{title}_p{p_idx}"
            corpus.documents.append(Document(doc_id, context))
            chunks = chunk_document(tokenize_doc(doc_id, context), size, overlap)
            for q_idx, qa in enumerate(_field(para, "qas", pwhere, list)):
                qwhere = f"{pwhere}.qas[{q_idx}]"
                question = _field(qa, "question", qwhere, str)
                if qa.get("is_impossible", False):
                    continue
                answers = _field(qa, "answers", qwhere, list)
                if not answers:
                    continue
                text = _field(answers[0], "text", f"{qwhere}.answers[0]", str)
                start = _field(answers[0], "answer_start", f"{qwhere}.answers[0]", int)
                if context[start : start + len(text)] != text:
                    raise SquadFormatError(f"{qwhere}: answer text not found at answer_start={start}")
                corpus.examples.append(
                    QAExample(
                        doc_id,
                        question,
                        text,
                        gold_chunk_ids(chunks, start, start + len(text)),
                        start,
                        None,
                        qa.get("id"),
                    )
                )
    if corpus.documents and not corpus.examples:
        log.warning("%s: no answerable questions; corpus has %d documents and 0 examples", source, len(corpus.documents))
    return corpus


def load_squad(path: Union[str, Path], size: int = DEFAULT_CHUNK_SIZE, overlap: int = DEFAULT_OVERLAP) -> Corpus:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SquadFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_squad(raw, size, overlap, source=str(path))


def to_squad(corpus: Corpus) -> dict:
    """Inverse of ``parse_squad`` for corpora it produced (answerable questions only)."""
    articles: Dict[str, dict] = {}
    by_doc: Dict[str, List[QAExample]] = {}
    for ex in corpus.examples:
        by_doc.setdefault(ex.doc_id, []).append(ex)
    for d in corpus.documents:
        title = d.doc_id.rsplit("_p", 1)[0]
        art = articles.setdefault(title, {"title": title, "paragraphs": []})
        art["paragraphs"].append(
            {
                "context": d.text,
                "qas": [
                    {
                        "id": ex.qa_id,
                        "question": ex.question,
                        "is_impossible": False,
                        "answers": [{"text": ex.gold_answer, "answer_start": ex.answer_start}],
                    }
                    for ex in by_doc.get(d.doc_id, [])
                ],
            }
        )
    return {"version": "v2.0", "data": list(articles.values())}
