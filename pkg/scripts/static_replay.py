"""Frozen-graph PGD: compare each iteration's AMC candidates with the
previous iteration's non-target misses, and report per-iteration coverage."""

import argparse
from pathlib import Path

from amcsim.experiment import execute, load_spec

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "pgd_static.json"))
    args = ap.parse_args()
    exp = execute(load_spec(args.config), record=True)
    misses = exp.baseline.nontarget_miss_sets
    hist = exp.run.amc_history
    # "observed" = non-target misses seen by AMC during the prefetching pass
    # (demand misses plus first uses of its own prefetches)
    print("iter candidates observed equal baseline_misses missing nontarget_cov")
    for k in range(1, len(misses)):
        cand = hist[k]["candidates"]
        seen = hist[k - 1]["recorded"]
        it = exp.row.per_iteration[k]
        cov = it["useful"] / it["nontarget_misses_baseline"] if it["nontarget_misses_baseline"] else 0.0
        print(f"{k + 1:<5}{len(cand):>10}{len(seen):>9}{str(cand == seen):>6}"
              f"{len(misses[k - 1]):>16}{len(misses[k - 1] - cand):>8}{cov:>14.3f}")


if __name__ == "__main__":
    main()
