"""AMC vs next_line vs pc_temporal_lite on synthetic PGD with active-set churn."""

import argparse
import dataclasses
from pathlib import Path

from amcsim.experiment import load_spec, run_experiment, with_prefetcher

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "pgd_churn.json"))
    ap.add_argument("--seeds", default="1,2,3,4,5")
    args = ap.parse_args()
    base = load_spec(args.config)
    print("seed prefetcher        coverage accuracy miss_red traffic storage")
    for s in (int(x) for x in args.seeds.split(",")):
        spec = dataclasses.replace(base, seed=s)
        for name in ("amc", "next_line", "pc_temporal_lite"):
            r = run_experiment(with_prefetcher(spec, name, name))
            print(f"{s:<5}{name:<18}{r.coverage:>8.3f}{r.accuracy:>9.3f}{r.miss_reduction:>9.3f}"
                  f"{r.additional_traffic:>8.3f}{r.storage_overhead_fraction:>8.3f}")


if __name__ == "__main__":
    main()
