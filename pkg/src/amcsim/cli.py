"""Command-line entry point: run, sweep, compare, gen-trace, fixture."""

from __future__ import annotations

import argparse
import json
import logging
import operator
import re
import sys
from pathlib import Path

from .core import TraceError
from .experiment import (
    ConfigError,
    compare,
    load_config,
    parse_names,
    rows_to_csv,
    rows_to_json,
    run_experiment,
    spec_from_dict,
    sweep_miss_size,
)

log = logging.getLogger("amcsim")

EXIT_CONFIG = 2
EXIT_ASSERT = 3

_OPS = {">=": operator.ge, "<=": operator.le, "==": operator.eq, ">": operator.gt, "<": operator.lt}
_ASSERT_RE = re.compile(r"^\s*([A-Za-z_][\w@.]*)\s*(>=|<=|==|>|<)\s*([-+0-9.eE]+)\s*$")


class AssertionFailed(Exception):
    pass


def parse_assertion(text: str):
    m = _ASSERT_RE.match(text)
    if not m:
        raise ConfigError("--assert", f"cannot parse {text!r}; expected e.g. 'coverage>=0.4'")
    return m.group(1), m.group(2), float(m.group(3))


def check_assertions(values: dict, assertions) -> list:
    """Evaluate ``metric<op>value`` strings; returns failure messages."""
    failures = []
    for text in assertions or ():
        name, op, want = parse_assertion(text)
        if name not in values:
            raise ConfigError("--assert", f"unknown metric {name!r}")
        got = values[name]
        if not _OPS[op](got, want):
            failures.append(f"{name}={got!r} does not satisfy {op} {want!r}")
    return failures


def _emit(text: str, out_dir, filename: str) -> None:
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / filename).write_text(text)
        log.info("wrote %s", d / filename)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _spec(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "prefetcher", None):
        pf = cfg.get("prefetcher", {})
        pf = {"name": pf} if isinstance(pf, str) else dict(pf)
        pf["name"] = args.prefetcher
        cfg["prefetcher"] = pf
    return cfg, Path(args.config).parent


def cmd_run(args) -> int:
    cfg, base = _spec(args)
    spec = spec_from_dict(cfg, base)
    row = run_experiment(spec)
    if args.format == "json":
        _emit(rows_to_json([row]), args.out, "report.json")
    else:
        _emit(rows_to_csv([row]), args.out, "report.csv")
    failures = check_assertions(row.as_dict(), args.assertions)
    if failures:
        raise AssertionFailed("; ".join(failures))
    return 0


def cmd_sweep(args) -> int:
    cfg, base = _spec(args)
    spec = spec_from_dict(cfg, base)
    try:
        caps = [int(c) for c in args.caps.split(",") if c.strip()]
    except ValueError:
        raise ConfigError("--caps", f"expected comma-separated integers, got {args.caps!r}") from None
    if not caps or min(caps) < 1:
        raise ConfigError("--caps", "caps must be positive integers")
    rep = sweep_miss_size(spec, caps)
    if args.format == "json":
        _emit(json.dumps(rep.as_dict(), indent=2), args.out, "sweep.json")
    else:
        _emit(rep.to_csv(), args.out, "sweep.csv")
    values = {f"fraction@{c}": f for c, f in zip(rep.caps, rep.fractions)}
    values["total_windows"] = rep.total_windows
    failures = check_assertions(values, args.assertions)
    if failures:
        raise AssertionFailed("; ".join(failures))
    return 0


def cmd_compare(args) -> int:
    cfg, base = _spec(args)
    pf = cfg.get("prefetcher", {})
    names = pf if isinstance(pf, (str, list)) else pf.get("name", "amc")
    if isinstance(names, str):
        names = [names]
    if len(names) < 2:
        raise ConfigError("prefetcher.name", "compare needs a list of at least two prefetchers")
    specs = []
    for n in names:
        c = dict(cfg)
        p = {} if isinstance(pf, (str, list)) else dict(pf)
        p["name"] = n
        c["prefetcher"] = p
        c["label"] = n
        parse_names(n, "prefetcher.name")
        specs.append(spec_from_dict(c, base))
    result = compare(specs)
    rows = [r["row"] for r in result]
    if args.format == "json":
        payload = [dict(r["row"].as_dict(), **{k: v for k, v in r.items() if k != "row"}) for r in result]
        _emit(json.dumps(payload, indent=2), args.out, "compare.json")
    else:
        lines = rows_to_csv(rows).splitlines()
        lines[0] += ",delta_coverage,delta_accuracy,delta_additional_traffic"
        for i, r in enumerate(result, 1):
            lines[i] += f",{r['delta_coverage']!r},{r['delta_accuracy']!r},{r['delta_additional_traffic']!r}"
        _emit("\n".join(lines) + "\n", args.out, "compare.csv")
    return 0


def cmd_gen_trace(args) -> int:
    from .traceio import save_trace
    from .workload.graph import MutationSchedule, gen_graph, mutate
    from .workload.kernels import (
        LayoutPlan,
        PgdParams,
        emit_bellmanford_trace,
        emit_bfs_trace,
        emit_cc_trace,
        emit_pgd_trace,
    )

    try:
        g = gen_graph(args.vertices, args.degree, args.model, args.seed)
    except ValueError as exc:
        raise ConfigError("--vertices/--degree", str(exc)) from None
    if args.kernel in ("pgd", "cc"):
        layout = LayoutPlan.packed(g.vertex_count, g.edge_count)
        if args.kernel == "pgd":
            params = PgdParams(max_iterations=args.iterations, churn=args.churn, active_fraction=args.active_fraction)
            events = emit_pgd_trace(g, params, layout)
        else:
            events = emit_cc_trace(g, layout)
    else:
        g2 = mutate(g, MutationSchedule(0.1, 0.1, args.seed + 1))
        layout = LayoutPlan.packed(max(g.vertex_count, g2.vertex_count), max(g.edge_count, g2.edge_count))
        emit = emit_bfs_trace if args.kernel == "bfs" else emit_bellmanford_trace
        events = emit([g, g2], layout)
    save_trace(events, args.out)
    log.info("wrote %d events to %s", len(events), args.out)
    return 0


def cmd_fixture(args) -> int:
    from .workload.fixture import write_fixture

    if args.name != "worked-example":
        raise ConfigError("--name", f"unknown fixture {args.name!r}")
    for p in write_fixture(args.out):
        log.info("wrote %s", p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amcsim", description="Trace-driven AMC prefetcher simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, default_format="csv"):
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", help="output directory (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.add_argument("--prefetcher", help="override prefetcher.name")
    p.add_argument("--assert", dest="assertions", action="append", metavar="EXPR",
                   help="e.g. 'coverage>=0.4'; exit 3 if it does not hold")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="per-window miss-count distribution")
    common(p)
    p.add_argument("--caps", default="5,10,20,40")
    p.add_argument("--assert", dest="assertions", action="append", metavar="EXPR",
                   help="e.g. 'fraction@20>=0.6'")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="compare the prefetchers listed in the config")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-trace", help="emit a synthetic kernel trace")
    p.add_argument("--kernel", choices=("pgd", "bfs", "cc", "bellmanford"), default="pgd")
    p.add_argument("--vertices", type=int, default=1000)
    p.add_argument("--degree", type=float, default=9.0)
    p.add_argument("--model", choices=("uniform", "power_law"), default="uniform")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--churn", type=float, default=0.15)
    p.add_argument("--active-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help=".jsonl for text, anything else for binary")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("fixture", help="write the worked-example traces")
    p.add_argument("--name", default="worked-example")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TraceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionFailed as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
