"""Experiment specs, the trace-driven simulation loop and report rows.

Every experiment runs the trace twice: once with the baseline prefetchers
only (by default next-line) to get the reference miss count, and once with the
baseline plus the selected prefetchers. Coverage, accuracy and the usefulness
classes are attributed to the selected prefetchers only.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

from .amc import AmcConfig, AmcPrefetcher
from .baselines import BASELINES, Prefetcher, make_baseline
from .cache import L1, CacheConfig, FlaggedMissModel, Hierarchy, HierarchyConfig, PrefetchStats
from .core import (
    Access,
    AddrFBase,
    AddrTBase,
    End,
    Init,
    Region,
    RegionMap,
    Reset,
    Translator,
    Update,
    validate_trace,
)

logger = logging.getLogger(__name__)

PREFETCHER_NAMES = ("none", "amc") + tuple(BASELINES)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


# --- specs ---------------------------------------------------------------------


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str = "pgd"  # pgd | bfs | cc | bellmanford | trace | fixture
    vertices: int = 1000
    degree: float = 9.0
    model: str = "uniform"
    iterations: int = 10
    churn: Optional[float] = 0.15
    active_fraction: float = 0.5
    alpha: float = 0.85
    delta_threshold: float = 1e-4
    epsilon: float = 1e-7
    add_fraction: float = 0.1
    delete_fraction: float = 0.1
    path: Optional[str] = None
    name: str = "worked_example"
    input_bytes: Optional[int] = None


@dataclass(frozen=True)
class CacheSpec:
    hierarchy: HierarchyConfig = HierarchyConfig()
    memory_model: str = "lru"  # lru | flagged


@dataclass(frozen=True)
class TranslationSpec:
    mode: str = "identity"
    seed: int = 0


@dataclass(frozen=True)
class ExperimentSpec:
    workload: WorkloadSpec = WorkloadSpec()
    cache: CacheSpec = CacheSpec()
    prefetcher: tuple = ("amc",)
    baseline: tuple = ("next_line",)
    params: tuple = ()  # ((prefetcher name, ((key, value), ...)), ...)
    amc: AmcConfig = AmcConfig()
    translation: TranslationSpec = TranslationSpec()
    seed: int = 0
    label: str = ""

    def prefetcher_params(self, name: str) -> dict:
        return dict(dict(self.params).get(name, ()))

    @property
    def name(self) -> str:
        return self.label or ",".join(self.prefetcher)


def parse_names(value, field_name: str) -> tuple:
    if isinstance(value, str):
        names = [v.strip() for v in value.split(",") if v.strip()]
    elif isinstance(value, (list, tuple)):
        names = [str(v).strip() for v in value]
    else:
        raise ConfigError(field_name, f"expected a name or list of names, got {value!r}")
    for n in names:
        if n not in PREFETCHER_NAMES:
            raise ConfigError(field_name, f"unknown prefetcher {n!r} (known: {', '.join(PREFETCHER_NAMES)})")
    return tuple(n for n in names if n != "none")


_SCALARS = {"int": (int,), "float": (int, float), "str": (str,), "bool": (bool,)}


def _type_ok(value, annotation: str) -> bool:
    # annotations are strings here; only plain scalars and Optional[...] are checked
    if annotation.startswith("Optional[") and annotation.endswith("]"):
        return value is None or _type_ok(value, annotation[9:-1])
    want = _SCALARS.get(annotation)
    if want is None:
        return True
    if isinstance(value, bool) and bool not in want:
        return False
    return isinstance(value, want)


def _build(cls, data: dict, field_name: str, **extra):
    if not isinstance(data, dict):
        raise ConfigError(field_name, "expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    for k, v in data.items():
        if k not in known:
            raise ConfigError(f"{field_name}.{k}", "unknown key")
        ann = known[k].type if isinstance(known[k].type, str) else getattr(known[k].type, "__name__", "")
        if not _type_ok(v, ann):
            raise ConfigError(f"{field_name}.{k}", f"expected {ann}, got {v!r}")
    try:
        return cls(**data, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigError(field_name, str(exc)) from None


def _cache_level(data, field_name: str) -> CacheConfig:
    return _build(CacheConfig, data, field_name)


def parse_cache(data: dict) -> CacheSpec:
    data = dict(data or {})
    model = data.pop("memory_model", "lru")
    if model not in ("lru", "flagged"):
        raise ConfigError("cache.memory_model", f"must be 'lru' or 'flagged', got {model!r}")
    kw = {}
    for lvl in ("l1", "l2", "l3"):
        if lvl in data:
            v = data.pop(lvl)
            kw[lvl] = None if v is None else _cache_level(v, f"cache.{lvl}")
    return CacheSpec(_build(HierarchyConfig, data, "cache", **kw), model)


def spec_from_dict(config: dict, base_dir: Optional[Path] = None) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from a parsed JSON config."""
    if not isinstance(config, dict):
        raise ConfigError("config", "top level must be an object")
    for k in config:
        if k not in ("workload", "cache", "prefetcher", "baseline", "translation", "seed", "label"):
            raise ConfigError(k, "unknown section")
    seed = config.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")
    wl = dict(config.get("workload", {}))
    if wl.get("path") and base_dir is not None and not Path(wl["path"]).is_absolute():
        wl["path"] = str((base_dir / wl["path"]).resolve())
    workload = _build(WorkloadSpec, wl, "workload")
    if workload.kind not in ("pgd", "bfs", "cc", "bellmanford", "trace", "fixture"):
        raise ConfigError("workload.kind", f"unknown kind {workload.kind!r}")
    if workload.kind == "trace" and not (workload.path and Path(workload.path).exists()):
        raise ConfigError("workload.path", f"trace file {workload.path!r} does not exist")
    pf = config.get("prefetcher", {"name": "amc"})
    if isinstance(pf, str):
        pf = {"name": pf}
    pf = dict(pf)
    names = parse_names(pf.pop("name", "amc"), "prefetcher.name")
    amc_cfg = _build(AmcConfig, pf.pop("amc", {}), "prefetcher.amc")
    params = []
    for k, v in pf.items():
        if k not in BASELINES:
            raise ConfigError(f"prefetcher.{k}", "unknown prefetcher parameter section")
        if not isinstance(v, dict):
            raise ConfigError(f"prefetcher.{k}", "expected an object")
        try:
            make_baseline(k, **v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"prefetcher.{k}", str(exc)) from None
        params.append((k, tuple(sorted(v.items()))))
    baseline = parse_names(config.get("baseline", "next_line"), "baseline")
    translation = _build(TranslationSpec, config.get("translation", {}), "translation")
    try:
        Translator(translation.mode, translation.seed)
    except ValueError as exc:
        raise ConfigError("translation.mode", str(exc)) from None
    return ExperimentSpec(
        workload=workload,
        cache=parse_cache(config.get("cache", {})),
        prefetcher=names,
        baseline=baseline,
        params=tuple(sorted(params)),
        amc=amc_cfg,
        translation=translation,
        seed=seed,
        label=str(config.get("label", "")),
    )


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"{path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None


def load_spec(path) -> ExperimentSpec:
    return spec_from_dict(load_config(path), Path(path).parent)


# --- workloads -----------------------------------------------------------------


@dataclass
class Workload:
    events: list
    input_bytes: int
    description: str


@lru_cache(maxsize=16)
def build_workload(ws: WorkloadSpec, seed: int) -> Workload:
    from .traceio import load_trace
    from .workload import fixture as fx
    from .workload.graph import MutationSchedule, gen_graph, mutate
    from .workload.kernels import (
        LayoutPlan,
        PgdParams,
        emit_bellmanford_trace,
        emit_bfs_trace,
        emit_cc_trace,
        emit_pgd_trace,
    )

    if ws.kind == "fixture":
        traces = {"worked_example": fx.worked_example_trace, "worked_example_misb": fx.misb_trace}
        if ws.name not in traces:
            raise ConfigError("workload.name", f"unknown fixture {ws.name!r}")
        return Workload(traces[ws.name](), ws.input_bytes or 4 * fx.NV * fx.ELEM, f"fixture:{ws.name}")
    if ws.kind == "trace":
        events = load_trace(ws.path)
        validate_trace(events)
        size = ws.input_bytes
        if size is None:
            size = sum(ev.region.length for ev in events if isinstance(ev, (AddrTBase, AddrFBase)))
        return Workload(events, size, f"trace:{ws.path}")
    try:
        g = gen_graph(ws.vertices, ws.degree, ws.model, seed)
    except ValueError as exc:
        raise ConfigError("workload", str(exc)) from None
    desc = f"{ws.kind}:n={ws.vertices},d={ws.degree},seed={seed}"
    if ws.kind in ("pgd", "cc"):
        layout = LayoutPlan.packed(g.vertex_count, g.edge_count)
        if ws.kind == "pgd":
            try:
                params = PgdParams(ws.alpha, ws.delta_threshold, ws.epsilon, ws.iterations, ws.churn, ws.active_fraction)
            except ValueError as exc:
                raise ConfigError("workload", str(exc)) from None
            events = emit_pgd_trace(g, params, layout)
        else:
            events = emit_cc_trace(g, layout)
        return Workload(events, ws.input_bytes or layout.input_bytes, desc)
    g2 = mutate(g, MutationSchedule(ws.add_fraction, ws.delete_fraction, seed + 1))
    layout = LayoutPlan.packed(max(g.vertex_count, g2.vertex_count), max(g.edge_count, g2.edge_count))
    emit = emit_bfs_trace if ws.kind == "bfs" else emit_bellmanford_trace
    return Workload(emit([g, g2], layout), ws.input_bytes or layout.input_bytes, desc)


# --- simulation ------------------------------------------------------------------


@dataclass
class IterationStats:
    index: int
    accesses: int = 0
    demand_misses: int = 0
    nontarget_misses: int = 0
    stats: dict = field(default_factory=dict)  # source -> PrefetchStats for this iteration


@dataclass
class SimResult:
    demand_accesses: int
    demand_misses: int
    prefetch_dram: int
    metadata_lines: int
    stats: dict
    iterations: list
    amc_stats: dict
    clock: int
    total_latency: int
    issued_log: list = field(default_factory=list)
    nontarget_miss_sets: list = field(default_factory=list)
    amc_history: list = field(default_factory=list)


def _make_memory(spec: ExperimentSpec):
    if spec.cache.memory_model == "flagged":
        return FlaggedMissModel(spec.cache.hierarchy)
    return Hierarchy(spec.cache.hierarchy)


def simulate(events: Sequence, components: Sequence[str], spec: ExperimentSpec, record: bool = False) -> SimResult:
    """Run one pass of ``events`` with the named prefetchers active."""
    mem = _make_memory(spec)
    tr = Translator(spec.translation.mode, spec.translation.seed)
    translate = tr.translate
    amc = AmcPrefetcher(spec.amc, record_history=record) if "amc" in components else None
    others = [make_baseline(n, **spec.prefetcher_params(n)) for n in components if n != "amc"]
    by_name = {p.name: p for p in others}
    on_access = [p for p in others if type(p).on_access is not Prefetcher.on_access]
    target = frontier = None
    rmap = None
    iters = [IterationStats(1)]
    snap = {}
    issued_log = []
    miss_sets = [set()]
    cur = iters[0]
    amc_stats: dict = {}
    TARGET, OTHER = Region.TARGET, Region.OTHER

    def issue(blocks, source):
        for b in blocks:
            if mem.issue_prefetch(b, source) and record:
                issued_log.append((cur.index, source, b))

    def close_iteration():
        nonlocal snap
        now = {k: v.copy() for k, v in mem.stats.items()}
        cur.stats = {k: v - snap.get(k, PrefetchStats()) for k, v in now.items()}
        snap = now

    for ev in events:
        if type(ev) is Access:
            vaddr = ev.vaddr
            block = translate(vaddr)
            region = rmap.classify(vaddr) if rmap is not None else OTHER
            cur.accesses += 1
            if amc is not None and amc.initialized and region is not OTHER and rmap is not None:
                res = amc.on_l1_access(vaddr, region)
                if res.candidates:
                    issue(res.candidates, "amc")
            for p in on_access:
                c = p.on_access(block, ev.pc)
                if c:
                    issue(c, p.name)
            out = mem.demand_access(block, ev.kind, ev.miss)
            if out.level_hit != L1:
                for p in others:
                    p.on_l1_miss(block, ev.pc)
            if out.l2_miss_block is not None:
                cur.demand_misses += 1
                is_target = region is TARGET
                if not is_target:
                    cur.nontarget_misses += 1
                    if record:
                        miss_sets[-1].add(block)
                if amc is not None and amc.initialized:
                    amc.on_l2_miss(block, is_target)
                for p in others:
                    c = p.on_miss(block, ev.pc)
                    if c:
                        issue(c, p.name)
            elif out.prefetch_source is not None:
                if out.prefetch_source == "amc" and amc is not None and amc.initialized:
                    amc.on_prefetch_hit(block, region is TARGET)
                owner = by_name.get(out.prefetch_source)
                if owner is not None:
                    c = owner.on_prefetch_hit(block, ev.pc)
                    if c:
                        issue(c, owner.name)
        elif isinstance(ev, Update):
            if amc is not None and amc.initialized:
                amc.on_update()
            for p in others:
                p.on_update()
            close_iteration()
            cur = IterationStats(cur.index + 1)
            iters.append(cur)
            miss_sets.append(set())
        elif isinstance(ev, AddrTBase):
            target = ev.region
            if amc is not None:
                amc.set_target(target)
        elif isinstance(ev, AddrFBase):
            frontier = ev.region
            if amc is not None:
                amc.set_frontier(frontier)
        elif isinstance(ev, Init):
            if amc is not None:
                amc.init()
        elif isinstance(ev, Reset):
            if amc is not None and amc.initialized:
                amc.reset()
        elif isinstance(ev, End):
            pass
        if isinstance(ev, (AddrTBase, AddrFBase)) and target is not None and frontier is not None:
            rmap = RegionMap(target, frontier)
    mem.finish()
    close_iteration()
    if amc is not None and amc.initialized:
        amc_stats = amc.on_end()
    if not cur.accesses and len(iters) > 1:
        iters.pop()
        miss_sets.pop()
    return SimResult(
        demand_accesses=mem.demand_accesses,
        demand_misses=mem.demand_misses,
        prefetch_dram=mem.prefetch_dram,
        metadata_lines=amc_stats.get("metadata_lines_read", 0) + amc_stats.get("metadata_lines_written", 0)
        + sum(p.metadata_lines for p in others),
        stats=dict(mem.stats),
        iterations=iters,
        amc_stats=amc_stats,
        clock=mem.clock,
        total_latency=mem.total_latency,
        issued_log=issued_log,
        nontarget_miss_sets=miss_sets if record else [],
        amc_history=amc.history if amc is not None else [],
    )


# --- reports ---------------------------------------------------------------------

CSV_COLUMNS = (
    "prefetcher",
    "workload",
    "seed",
    "demand_misses_baseline",
    "demand_misses_with_prefetch",
    "prefetches_issued",
    "useful",
    "useful_late",
    "evicted_unused",
    "never_used",
    "coverage",
    "accuracy",
    "miss_reduction",
    "baseline_dram_accesses",
    "demand_dram_accesses",
    "prefetch_dram_accesses",
    "metadata_dram_accesses",
    "additional_traffic",
    "metadata_bytes_read",
    "metadata_bytes_written",
    "peak_metadata_bytes",
    "input_bytes",
    "storage_overhead_fraction",
    "final_iteration_coverage",
    "final_iteration_accuracy",
    "iterations",
)


def ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def coverage_ratio(useful: int, baseline_misses: int) -> float:
    # The selected prefetcher can take over lines the baseline prefetcher
    # would have fetched, so useful may exceed the baseline's misses.
    return min(1.0, ratio(useful, baseline_misses))


@dataclass
class ReportRow:
    prefetcher: str
    workload: str
    seed: int
    demand_misses_baseline: int = 0
    demand_misses_with_prefetch: int = 0
    prefetches_issued: int = 0
    useful: int = 0
    useful_late: int = 0
    evicted_unused: int = 0
    never_used: int = 0
    coverage: float = 0.0
    accuracy: float = 0.0
    miss_reduction: float = 0.0  # (baseline misses - misses with prefetch) / baseline misses
    baseline_dram_accesses: int = 0
    demand_dram_accesses: int = 0
    prefetch_dram_accesses: int = 0  # prefetch fills plus 64B metadata transfers
    metadata_dram_accesses: int = 0
    additional_traffic: float = 0.0
    metadata_bytes_read: int = 0
    metadata_bytes_written: int = 0
    peak_metadata_bytes: int = 0
    input_bytes: int = 0
    storage_overhead_fraction: float = 0.0
    final_iteration_coverage: float = 0.0
    final_iteration_accuracy: float = 0.0
    iterations: int = 0
    per_iteration: list = field(default_factory=list)
    amc: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {c: getattr(self, c) for c in CSV_COLUMNS}
        d["per_iteration"] = self.per_iteration
        d["amc"] = self.amc
        return d

    def csv_values(self) -> list:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def rows_to_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


def rows_to_json(rows: Sequence[ReportRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=2)


def _sum_stats(stats: dict, sources) -> PrefetchStats:
    total = PrefetchStats()
    for s in sources:
        st = stats.get(s)
        if st is not None:
            total = total + st
    return total


def _useful(st: PrefetchStats) -> int:
    return st.useful + st.useful_late


@dataclass
class Experiment:
    spec: ExperimentSpec
    row: ReportRow
    baseline: SimResult
    run: SimResult


def execute(spec: ExperimentSpec, record: bool = False) -> Experiment:
    wl = build_workload(spec.workload, spec.seed)
    selected = spec.prefetcher
    base_components = tuple(b for b in spec.baseline if b not in selected)
    base = simulate(wl.events, base_components, spec, record=record)
    run = simulate(wl.events, base_components + selected, spec, record=record)
    st = _sum_stats(run.stats, selected)
    useful = _useful(st)
    meta = run.metadata_lines
    base_dram = base.demand_misses + base.prefetch_dram
    run_prefetch_dram = run.prefetch_dram + meta
    per_iter = []
    for i, it in enumerate(run.iterations):
        b = base.iterations[i] if i < len(base.iterations) else IterationStats(it.index)
        ist = _sum_stats(it.stats, selected)
        per_iter.append({
            "iteration": it.index,
            "accesses": it.accesses,
            "demand_misses_baseline": b.demand_misses,
            "demand_misses_with_prefetch": it.demand_misses,
            "nontarget_misses_baseline": b.nontarget_misses,
            "nontarget_misses_with_prefetch": it.nontarget_misses,
            "prefetches_issued": ist.issued,
            "useful": _useful(ist),
            "coverage": coverage_ratio(_useful(ist), b.demand_misses),
            "accuracy": ratio(_useful(ist), ist.issued),
        })
    amc = run.amc_stats
    peak = amc.get("peak_metadata_bytes", 0)
    row = ReportRow(
        prefetcher=spec.name,
        workload=wl.description,
        seed=spec.seed,
        demand_misses_baseline=base.demand_misses,
        demand_misses_with_prefetch=run.demand_misses,
        prefetches_issued=st.issued,
        useful=st.useful,
        useful_late=st.useful_late,
        evicted_unused=st.evicted_unused,
        never_used=st.never_used,
        coverage=coverage_ratio(useful, base.demand_misses),
        miss_reduction=ratio(base.demand_misses - run.demand_misses, base.demand_misses),
        accuracy=ratio(useful, st.issued),
        baseline_dram_accesses=base_dram,
        demand_dram_accesses=run.demand_misses,
        prefetch_dram_accesses=run_prefetch_dram,
        metadata_dram_accesses=meta,
        additional_traffic=ratio(run.demand_misses + run_prefetch_dram - base_dram, base_dram),
        metadata_bytes_read=amc.get("metadata_bytes_read", 0),
        metadata_bytes_written=amc.get("metadata_bytes_written", 0),
        peak_metadata_bytes=peak,
        input_bytes=wl.input_bytes,
        storage_overhead_fraction=ratio(peak, wl.input_bytes),
        final_iteration_coverage=per_iter[-1]["coverage"] if per_iter else 0.0,
        final_iteration_accuracy=per_iter[-1]["accuracy"] if per_iter else 0.0,
        iterations=len(per_iter) if any(it.accesses for it in run.iterations) else 0,
        per_iteration=per_iter,
        amc=amc,
    )
    return Experiment(spec, row, base, run)


def run_experiment(spec: ExperimentSpec) -> ReportRow:
    return execute(spec).row


def with_prefetcher(spec: ExperimentSpec, names, label: str = "") -> ExperimentSpec:
    return dataclasses.replace(spec, prefetcher=parse_names(names, "prefetcher.name"), label=label)


def compare(specs: Sequence[ExperimentSpec]) -> list:
    """One row per spec plus coverage/accuracy/traffic deltas against the first."""
    if len(specs) < 2:
        raise ConfigError("prefetcher.name", "compare needs at least two prefetchers")
    key = (specs[0].workload, specs[0].seed)
    for s in specs[1:]:
        if (s.workload, s.seed) != key:
            raise ConfigError("workload", "compared specs must share the workload and seed")
    rows = [run_experiment(s) for s in specs]
    first = rows[0]
    out = []
    for r in rows:
        out.append({
            "row": r,
            "delta_coverage": r.coverage - first.coverage,
            "delta_accuracy": r.accuracy - first.accuracy,
            "delta_additional_traffic": r.additional_traffic - first.additional_traffic,
        })
    return out


@dataclass
class SweepReport:
    caps: list
    histogram: dict  # window miss count -> number of windows
    total_windows: int
    fractions: list  # fraction of windows with count <= cap, per cap

    def as_dict(self) -> dict:
        return {
            "caps": self.caps,
            "fractions": self.fractions,
            "total_windows": self.total_windows,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }

    def to_csv(self) -> str:
        lines = ["cap,fraction_at_or_below"]
        lines += [f"{c},{f!r}" for c, f in zip(self.caps, self.fractions)]
        return "\n".join(lines) + "\n"


def cdf_fractions(histogram: dict, caps: Sequence[int]) -> list:
    total = sum(histogram.values())
    return [ratio(sum(v for k, v in histogram.items() if k <= c), total) for c in caps]


def sweep_miss_size(spec: ExperimentSpec, caps: Sequence[int]) -> SweepReport:
    """Distribution of per-window miss counts, recorded without any cap."""
    if "amc" not in spec.prefetcher:
        raise ConfigError("prefetcher.name", "sweep requires amc")
    caps = sorted(int(c) for c in caps)
    unbounded = dataclasses.replace(spec.amc, cache_bytes=None, cache_entries=None)
    exp = execute(dataclasses.replace(spec, amc=unbounded))
    hist = {int(k): v for k, v in exp.row.amc.get("window_size_histogram", {}).items()}
    return SweepReport(caps, hist, sum(hist.values()), cdf_fractions(hist, caps))
