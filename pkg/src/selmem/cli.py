"""Command-line entry point: ``selmem <command> [flags]``.

Every command accepts ``--config FILE`` (flat key=value); explicit flags win
over file values, which win over built-in defaults.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import data, evaluation
from .answer import EndpointError, MalformedResponseError, answer_external, answer_extractive
from .config import ConfigError, RunConfig, load_config
from .memory import MemoryStore, build_batch_store, select_budget
from .packing import pack
from .retrieval import retrieve
from .salience import SalienceWeights, document_features, load_lexicon, score_all
from .text_prep import ChunkingError, chunk_document, tokenize_doc

log = logging.getLogger("selmem")

# flag dest -> RunConfig key
_CONFIG_FLAGS = {
    "chunk_size": "chunk_size",
    "chunk_overlap": "chunk_overlap",
    "budget": "budget_ratio",
    "k": "top_k",
    "mode": "retrieval_mode",
    "alpha": "alpha",
    "k1": "k1",
    "b": "b",
    "token_budget": "token_budget",
    "weights": "weights",
    "strategy": "strategy",
    "seed": "seed",
    "workers": "workers",
    "endpoint": "endpoint_url",
    "model": "endpoint_model",
    "timeout": "endpoint_timeout",
    "retries": "endpoint_retries",
    "lexicon": "lexicon_path",
}


def _weights(raw: str):
    try:
        vals = tuple(float(v) for v in raw.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {raw!r}") from None
    return vals


def _ratios(raw: str) -> List[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ratios, got {raw!r}") from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    # defaults are None so unset flags fall through to the config file
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--config", help="flat key=value config file")
    g.add_argument("--chunk-size", type=int)
    g.add_argument("--chunk-overlap", type=int)
    g.add_argument("--budget", type=float, help="budget ratio in (0, 1]")
    g.add_argument("--k", "--top-k", dest="k", type=int, help="semantic entries to retrieve")
    g.add_argument("--mode", choices=("sparse_only", "hybrid"))
    g.add_argument("--alpha", type=float)
    g.add_argument("--k1", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--token-budget", type=int)
    g.add_argument("--weights", type=_weights, help="six comma-separated feature weights")
    g.add_argument("--strategy")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--endpoint", help="chat-completion base URL; extractive answers when unset")
    g.add_argument("--model")
    g.add_argument("--timeout", type=float)
    g.add_argument("--retries", type=int)
    g.add_argument("--lexicon", help="discourse marker file")


def _config(args) -> RunConfig:
    overrides: Dict[str, object] = {key: getattr(args, dest, None) for dest, key in _CONFIG_FLAGS.items()}
    return load_config(args.config, overrides)


def _formats(raw: str) -> List[str]:
    fmts = [f.strip() for f in raw.split(",") if f.strip()]
    for f in fmts:
        if f not in ("csv", "json", "markdown"):
            raise ConfigError("format", f"unknown report format {f!r}")
    return fmts


_SUFFIX = {"csv": ".csv", "json": ".json", "markdown": ".md"}


def _write_reports(reports, args, stem: str, layout: str) -> None:
    out = Path(args.out_dir)
    for fmt in _formats(args.format):
        path = evaluation.emit_report(reports, fmt, out / f"{stem}{_SUFFIX[fmt]}", layout)
        log.info("wrote %s", path)
    sys.stdout.write(evaluation.render_report(reports, "markdown", layout))


def _load_eval_corpus(args, cfg: RunConfig) -> data.Corpus:
    corpus = data.load_corpus(args.corpus)
    return data.relabel(corpus, cfg.chunk_size, cfg.chunk_overlap)


# ---------------------------------------------------------------------------
# commands


def cmd_gen_data(args) -> int:
    cfg = _config(args)
    if args.short:
        spec = data.short_spec(seed=cfg.seed, n_papers=args.papers if args.papers is not None else 500)
    else:
        spec = data.SyntheticPaperSpec(seed=cfg.seed, n_papers=args.papers if args.papers is not None else 200)
    overrides = {
        "min_tokens": args.min_tokens,
        "max_tokens": args.max_tokens,
        "questions_per_paper": args.questions,
    }
    spec = data.SyntheticPaperSpec(**{**spec.__dict__, **{k: v for k, v in overrides.items() if v is not None}})
    corpus = data.generate(spec, (cfg.chunk_size, cfg.chunk_overlap))
    data.save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.documents)} documents and {len(corpus.examples)} questions to {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    corpus = _load_eval_corpus(args, cfg)
    report = evaluation.evaluate_system(corpus, cfg, system_name=args.name)
    _write_reports([report], args, args.stem or "eval", "summary")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    corpus = _load_eval_corpus(args, cfg)
    reports = evaluation.budget_sweep(corpus, cfg, args.ratios or evaluation.DEFAULT_SWEEP)
    _write_reports(reports, args, args.stem or "sweep", "sweep")
    return 0


def cmd_baselines(args) -> int:
    cfg = _config(args)
    corpus = _load_eval_corpus(args, cfg)
    reports = evaluation.run_baselines(corpus, cfg)
    _write_reports(reports, args, args.stem or "baselines", "baselines")
    return 0


def cmd_ingest_squad(args) -> int:
    cfg = _config(args)
    corpus = data.load_squad(args.input, cfg.chunk_size, cfg.chunk_overlap)
    data.save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.documents)} documents and {len(corpus.examples)} questions to {args.out}")
    return 0


def cmd_store(args) -> int:
    cfg = _config(args)
    if args.text:
        path = Path(args.text)
        doc = data.Document(path.stem, path.read_text(encoding="utf-8"))
    else:
        doc = data.load_corpus(args.corpus).document(args.doc)
    chunks = chunk_document(tokenize_doc(doc.doc_id, doc.text, doc.sections), cfg.chunk_size, cfg.chunk_overlap)
    scores = score_all(document_features(chunks, load_lexicon(cfg.lexicon_path)), SalienceWeights(tuple(cfg.weights)))
    selected = select_budget(scores, cfg.budget_ratio)
    store = build_batch_store(chunks, scores, selected)
    store.dump(args.out)
    print(f"stored {len(store)} of {len(chunks)} chunks from {doc.doc_id} in {args.out}")
    return 0


def cmd_query(args) -> int:
    cfg = _config(args)
    if not Path(args.snapshot).is_file():
        raise FileNotFoundError(f"snapshot not found: {args.snapshot}")
    store = MemoryStore.load(args.snapshot)
    res = retrieve(store, args.question, cfg.top_k, cfg.retrieval_mode, cfg.alpha, cfg.k1, cfg.b)
    ctx = pack(res.episodic, res.semantic, cfg.token_budget)
    endpoint = cfg.endpoint()
    if not ctx:
        print("(no stored memory matches the question)")
        return 0
    ans = answer_external(ctx, args.question, endpoint) if endpoint else answer_extractive(ctx, args.question)
    print(ans.text)
    headers = {m: h for m, h, _ in ctx.blocks}
    for mem_id in ans.cited_mem_ids:
        print(f"[CITE: {mem_id}] {headers.get(mem_id, '(not in context)')}")
    if args.save:
        store.dump(args.snapshot)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selmem", description="Budget-constrained selective memory for document QA.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic corpus with planted facts")
    _add_config_flags(p)
    p.add_argument("--papers", type=int)
    p.add_argument("--min-tokens", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--questions", type=int, help="questions per paper")
    p.add_argument("--short", action="store_true", help="short single-paragraph documents")
    p.add_argument("--out", default="synth")
    p.set_defaults(func=cmd_gen_data)

    for name, func, helptext in (
        ("eval", cmd_eval, "evaluate one selection strategy"),
        ("sweep", cmd_sweep, "evaluate a range of budget ratios"),
        ("baselines", cmd_baselines, "compare all selection strategies at one budget"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_config_flags(p)
        p.add_argument("--corpus", default="synth", help="corpus directory")
        p.add_argument("--out-dir", default="reports")
        p.add_argument("--format", default="csv,json,markdown", help="comma-separated: csv,json,markdown")
        p.add_argument("--stem", help="report file name stem")
        if name == "eval":
            p.add_argument("--name", help="system name in the report")
        if name == "sweep":
            p.add_argument("--ratios", type=_ratios, help="comma-separated budget ratios")
        p.set_defaults(func=func)

    p = sub.add_parser("ingest-squad", help="convert a SQuAD v2.0 file to a corpus directory")
    _add_config_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest_squad)

    p = sub.add_parser("store", help="select a budgeted store from one document and save a snapshot")
    _add_config_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="plain-text document")
    src.add_argument("--corpus", help="corpus directory (with --doc)")
    p.add_argument("--doc", help="document id inside --corpus")
    p.add_argument("--out", required=True, help="snapshot path (JSON lines)")
    p.set_defaults(func=cmd_store)

    p = sub.add_parser("query", help="answer a question from a stored snapshot")
    _add_config_flags(p)
    p.add_argument("--snapshot", required=True)
    p.add_argument("--question", "-q", required=True)
    p.add_argument("--save", action="store_true", help="write updated access counts back")
    p.set_defaults(func=cmd_query)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "store" and args.corpus and not args.doc:
        parser.error("--corpus requires --doc")
    try:
        return args.func(args)
    except (ConfigError, ChunkingError, ValueError, KeyError, OSError, EndpointError, MalformedResponseError) as exc:
        print(f"selmem {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
