"""Compare salience selection against random, positional and TF-IDF selection."""

import argparse
from pathlib import Path

from selmem import data
from selmem.config import RunConfig
from selmem.evaluation import emit_report, render_report, run_baselines


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=float, default=0.3)
    ap.add_argument("--papers", type=int, default=200)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out-dir", type=Path, default=Path("reports"))
    args = ap.parse_args()

    corpus = data.generate(data.SyntheticPaperSpec(seed=args.seed, n_papers=args.papers))
    reports = run_baselines(corpus, RunConfig(budget_ratio=args.budget, seed=args.seed))
    emit_report(reports, "csv", args.out_dir / "baselines.csv")
    emit_report(reports, "json", args.out_dir / "baselines.json")
    print(render_report(reports, "markdown", "baselines"))


if __name__ == "__main__":
    main()
