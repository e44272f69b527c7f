"""Sweep the budget ratio on the default synthetic corpus and write sweep reports."""

import argparse
from pathlib import Path

from selmem import data
from selmem.config import RunConfig
from selmem.evaluation import DEFAULT_SWEEP, budget_sweep, emit_report, render_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=list(DEFAULT_SWEEP))
    ap.add_argument("--papers", type=int, default=200)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out-dir", type=Path, default=Path("reports"))
    args = ap.parse_args()

    corpus = data.generate(data.SyntheticPaperSpec(seed=args.seed, n_papers=args.papers))
    reports = budget_sweep(corpus, RunConfig(seed=args.seed), args.ratios)
    for fmt, ext in (("csv", "csv"), ("json", "json")):
        emit_report(reports, fmt, args.out_dir / f"sweep.{ext}")
    print(render_report(reports, "markdown", "sweep"))


if __name__ == "__main__":
    main()
