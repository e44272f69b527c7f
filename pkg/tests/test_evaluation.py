import csv
import io
import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from selmem.config import RunConfig
from selmem.data import Corpus, Document, QAExample
from selmem.evaluation import (
    BASELINE_ORDER,
    BUDGETMEM,
    CSV_COLUMNS,
    FIRST_N,
    LAST_N,
    RANDOM,
    TFIDF_ONLY,
    EvalReport,
    MissingDocumentError,
    SelectionStrategy,
    budget_sweep,
    emit_report,
    evaluate_system,
    exact_match,
    load_reports,
    render_report,
    run_baselines,
    select_with_strategy,
    token_f1,
)
from selmem.salience import FeatureVector
from selmem.text_prep import chunk_document, tokenize_doc

# (prediction, gold, F1) worked by hand after lowercasing and stripping
# punctuation and the articles a/an/the
F1_FIXTURES = [
    ("the cat sat", "cat sat down", Fraction(4, 5)),
    ("", "", Fraction(1)),
    ("", "cat", Fraction(0)),
    ("Paris", "paris", Fraction(1)),
    ("The Eiffel Tower", "Eiffel Tower.", Fraction(1)),
    ("a b c d", "b c", Fraction(4, 5)),
    ("red blue", "green yellow", Fraction(0)),
    ("1,200 people", "1200 people", Fraction(1)),
    ("cat cat cat", "cat", Fraction(1, 2)),
    ("new york city", "York", Fraction(1, 2)),
    ("an apple a day", "the apple", Fraction(2, 3)),
    ("the", "a", Fraction(1)),
]


@pytest.mark.parametrize("pred, gold, expected", F1_FIXTURES)
def test_token_f1_fixtures(pred, gold, expected):
    assert abs(token_f1(pred, gold) - float(expected)) < 1e-12


def test_exact_match():
    assert exact_match("The  Cat!", "cat") == 1.0
    assert exact_match("cat sat", "cat") == 0.0


texts = st.text(alphabet="ab cd.,THE", max_size=30)


@given(texts, texts)
def test_f1_symmetric_and_bounded(a, b):
    f = token_f1(a, b)
    assert 0.0 <= f <= 1.0
    assert f == token_f1(b, a)


@given(texts)
def test_f1_self_is_one(a):
    assert token_f1(a, a) == 1.0


# -- strategies ------------------------------------------------------------


def _doc_chunks(m):
    text = " ".join(f"w{i}" for i in range(m * 10))
    chunks = chunk_document(tokenize_doc("d", text), 10, 0)
    feats = [FeatureVector(0, 0, 0, 0, (i * 37 % m) / m, 0) for i in range(m)]
    return chunks, feats


def test_first_and_last_n():
    chunks, feats = _doc_chunks(10)
    assert select_with_strategy(chunks, feats, SelectionStrategy(FIRST_N), 0.3) == {0, 1, 2}
    assert select_with_strategy(chunks, feats, SelectionStrategy(LAST_N), 0.3) == {7, 8, 9}


def test_random_seeded():
    chunks, feats = _doc_chunks(30)
    a = select_with_strategy(chunks, feats, SelectionStrategy(RANDOM, 1), 0.3, doc_id="x")
    b = select_with_strategy(chunks, feats, SelectionStrategy(RANDOM, 1), 0.3, doc_id="x")
    assert a == b and len(a) == 9


def test_tfidf_only_picks_highest_tfidf():
    chunks, feats = _doc_chunks(10)
    got = select_with_strategy(chunks, feats, SelectionStrategy(TFIDF_ONLY), 0.2)
    want = set(sorted(range(10), key=lambda i: (-feats[i].tfidf_mean, i))[:2])
    assert got == want


@pytest.mark.parametrize("kind", BASELINE_ORDER)
@pytest.mark.parametrize("m, ratio", [(1, 0.3), (7, 0.3), (10, 0.3), (23, 0.9), (5, 1.0)])
def test_all_strategies_same_k(kind, m, ratio):
    chunks, feats = _doc_chunks(m)
    assert len(select_with_strategy(chunks, feats, SelectionStrategy(kind, 4), ratio, doc_id="d")) == max(1, int(ratio * m))


def test_strategy_labels():
    assert [SelectionStrategy(k).label(0.3) for k in BASELINE_ORDER] == [
        "Random 30%", "First 30%", "Last 30%", "TF-IDF Only", "BudgetMem",
    ]


# -- evaluation loop -------------------------------------------------------


def _strip_latency(report):
    d = json.loads(render_report([report], "json"))[0]
    d.pop("mean_latency_seconds")
    d.pop("system_name")
    for rec in d["per_example"]:
        rec.pop("latency_s")
    return d


def test_report_invariants(small_corpus):
    r = evaluate_system(small_corpus, RunConfig())
    assert abs(r.memory_saving + r.storage_ratio - 1) < 1e-12
    assert 0 <= r.mean_f1 <= 1
    assert r.n_examples == len(small_corpus.examples)
    assert r.mean_chunks_used <= 3
    assert all(rec["latency_s"] > 0 for rec in r.per_example)


def test_full_budget_collapses_strategies(small_corpus):
    cfg = RunConfig(budget_ratio=1.0)
    reports = [evaluate_system(small_corpus, cfg, SelectionStrategy(k, 3)) for k in BASELINE_ORDER]
    assert reports[0].memory_saving == 0.0
    first = _strip_latency(reports[0])
    assert all(_strip_latency(r) == first for r in reports[1:])


def test_budgetmem_beats_last_n(small_corpus):
    cfg = RunConfig()
    bm = evaluate_system(small_corpus, cfg, SelectionStrategy(BUDGETMEM))
    last = evaluate_system(small_corpus, cfg, SelectionStrategy(LAST_N))
    assert bm.store_recall > last.store_recall


def test_workers_do_not_change_results(small_corpus):
    one = evaluate_system(small_corpus, RunConfig(workers=1))
    many = evaluate_system(small_corpus, RunConfig(workers=4))
    assert _strip_latency(one) == _strip_latency(many)


def test_missing_document(small_corpus):
    bad = Corpus(small_corpus.documents, [QAExample("nope", "q?", "a")])
    with pytest.raises(MissingDocumentError):
        evaluate_system(bad, RunConfig())


def test_invalid_config_rejected_before_work(small_corpus):
    with pytest.raises(ValueError, match="budget_ratio"):
        evaluate_system(small_corpus, RunConfig(budget_ratio=0.0))


def test_unlabelled_examples_skip_recall():
    doc = Document("d", "Alice met Bob in Paris. They talked about memory budgets for a while.")
    ex = QAExample("d", "Who met Bob?", "Alice")
    r = evaluate_system(Corpus([doc], [ex]), RunConfig())
    assert r.per_example[0]["gold_in_store"] is None
    assert r.mean_f1 > 0


def test_sweep_full_budget_single_row(small_corpus):
    (r,) = budget_sweep(small_corpus, RunConfig(), [1.0])
    assert r.memory_saving == pytest.approx(0.0)


def test_sweep_recall_monotone(small_corpus):
    reports = budget_sweep(small_corpus, RunConfig())
    assert len(reports) == 7
    recalls = [r.store_recall for r in reports]
    assert recalls == sorted(recalls)


def test_baseline_rows(small_corpus):
    reports = run_baselines(small_corpus, RunConfig())
    assert [r.system_name for r in reports] == ["Random 30%", "First 30%", "Last 30%", "TF-IDF Only", "BudgetMem"]
    md = render_report(reports, "markdown", "baselines")
    assert md.splitlines()[0] == "| Method | F1 Score | Memory Save | Store Recall |"


# -- report files ----------------------------------------------------------


def _report(name="X", **kw):
    base = dict(
        system_name=name, n_examples=3, mean_f1=0.5, mean_exact_match=0.25, storage_ratio=0.3,
        memory_saving=0.7, mean_latency_seconds=0.01, mean_chunks_used=2.5, store_recall=1.0,
    )
    base.update(kw)
    return EvalReport(**base)


def test_empty_csv_is_header_only():
    assert render_report([], "csv") == ",".join(CSV_COLUMNS) + "\n"


def test_one_report_one_row():
    rows = list(csv.reader(io.StringIO(render_report([_report()], "csv"))))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == 2 and len(rows[1]) == 9
    assert rows[1][0] == "X" and float(rows[1][4]) == 0.3


def test_json_round_trip(tmp_path):
    reports = [_report("A", per_example=[{"f1": 0.5, "cited": ["m1"]}]), _report("B", mean_f1=1 / 3)]
    path = emit_report(reports, "json", tmp_path / "out" / "r.json")
    assert load_reports(path) == reports


def test_emit_is_byte_stable(tmp_path):
    reports = [_report("A", mean_f1=0.1 + 0.2)]
    for fmt in ("csv", "json", "markdown"):
        a = emit_report(reports, fmt, tmp_path / f"a.{fmt}").read_bytes()
        b = emit_report(reports, fmt, tmp_path / f"b.{fmt}").read_bytes()
        assert a == b


def test_sweep_markdown_columns():
    md = render_report([_report(budget_ratio=0.3)], "markdown", "sweep")
    assert md.splitlines()[0].startswith("| Budget | F1 | Memory Save |")
    assert "| 30% |" in md


def test_unknown_format():
    with pytest.raises(ValueError):
        render_report([], "xml")
