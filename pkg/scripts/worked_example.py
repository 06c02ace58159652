"""Run AMC and the comparison prefetchers on the eight-vertex walkthrough."""

import argparse
import dataclasses
from pathlib import Path

from amcsim.experiment import execute, load_spec, with_prefetcher

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    args = ap.parse_args()
    amc_spec = load_spec(Path(args.configs) / "worked_example.json")
    misb_spec = load_spec(Path(args.configs) / "worked_example_misb.json")

    runs = [("amc", amc_spec)]
    for d in (1, 2, 4):
        params = dict(misb_spec.params)
        params["pc_temporal_lite"] = {"degree": d}
        runs.append((f"pc_temporal_lite/d{d}", dataclasses.replace(misb_spec, params=params)))
    runs.append(("markov/d2", dataclasses.replace(
        with_prefetcher(amc_spec, "markov"), params={"markov": {"degree": 2}})))

    print(f"{'prefetcher':<22}{'issued':>7}{'useful':>7}{'accuracy':>10}{'coverage':>10}")
    for name, spec in runs:
        exp = execute(spec, record=True)
        last = exp.row.per_iteration[-1]
        print(f"{name:<22}{last['prefetches_issued']:>7}{last['useful']:>7}"
              f"{last['accuracy']:>10.3f}{last['coverage']:>10.3f}")
        if name.startswith("markov"):
            blocks = [b for it, src, b in exp.run.issued_log if it == 2]
            print(f"{'':<22}second-pass markov issues: {[hex(b) for b in blocks]}")


if __name__ == "__main__":
    main()
