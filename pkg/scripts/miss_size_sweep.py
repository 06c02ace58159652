"""Per-window miss-count CDF on the churn workload, one line per seed."""

import argparse
import dataclasses
from pathlib import Path

from amcsim.experiment import load_spec, sweep_miss_size

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "pgd_churn.json"))
    ap.add_argument("--seeds", default="1,2,3,4,5")
    ap.add_argument("--caps", default="1,2,5,10,20,40")
    args = ap.parse_args()
    caps = [int(c) for c in args.caps.split(",")]
    base = load_spec(args.config)
    print("seed windows " + " ".join(f"<={c:<5}" for c in caps))
    for s in (int(x) for x in args.seeds.split(",")):
        rep = sweep_miss_size(dataclasses.replace(base, seed=s), caps)
        print(f"{s:<5}{rep.total_windows:>7} " + " ".join(f"{f:<7.3f}" for f in rep.fractions))


if __name__ == "__main__":
    main()
