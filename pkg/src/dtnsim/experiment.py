"""Experiment plans: router x TTL x seed sweeps over one scenario, per-run
artifacts, aggregation, and result-set comparison."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .contacts import (
    ContactTrace,
    RoutineSpec,
    SampleConfig,
    generate_routine_trace,
    load_contact_trace,
)
from .engine import SimConfig
from .ledger import dump_ledgers_csv
from .metrics import RunMetrics, aggregate_runs, compute_run_metrics, summarize
from .routing import ROUTER_NAMES
from .socialgraph import centrality_csv, communities_json
from .workload import WorkloadEntry, generate_workload, load_workload

RESULTS_HEADER = "router,ttl,seed,delivery,cost,latency"
AGGREGATE_HEADER = (
    "router,ttl,runs,delivery_mean,delivery_ci,cost_mean,cost_ci,latency_mean,latency_ci"
)
COMPARE_HEADER = "ttl,metric,a_mean,b_mean,delta,delta_unit,delta_ci"


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.field_path = path


@dataclass(frozen=True)
class ExperimentConfig:
    """One scenario swept over routers x TTLs x seeds."""

    routers: tuple[str, ...]
    ttls: tuple[float, ...]
    seeds: tuple[int, ...]
    trace_path: Path | None
    trace_format: str
    routine: RoutineSpec | None
    workload_path: Path | None
    workload_gen: dict | None
    sample: SampleConfig
    buffer_capacity: int
    bandwidth: float | None
    damping: float
    k: int
    familiar_threshold: float
    centrality_window: float
    recompute_interval: float
    epoch: float | None
    drop_policy: str
    charge_summaries: bool
    out_dir: Path

    @property
    def cells(self) -> list[tuple[str, float, int]]:
        return [(r, t, s) for r in self.routers for t in self.ttls for s in self.seeds]


def _require(d: Mapping, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return d[key]


# zero-config sweep: all routers, TTLs of 1/2/4 days and 1/3 weeks, ten seeds
DEFAULT_TTLS = (86400.0, 172800.0, 345600.0, 604800.0, 1814400.0)
DEFAULT_SEEDS = tuple(range(1, 11))


def load_experiment_config(raw: Mapping, base_dir: Path | str = ".") -> ExperimentConfig:
    base = Path(base_dir)

    routers = tuple(raw.get("routers", ROUTER_NAMES))
    if not routers:
        raise ConfigError("routers", "need at least one router")
    for i, r in enumerate(routers):
        if r not in ROUTER_NAMES:
            raise ConfigError(f"routers[{i}]", f"unknown router {r!r} (valid: {', '.join(ROUTER_NAMES)})")

    ttls = tuple(float(t) for t in raw.get("ttls", DEFAULT_TTLS))
    if not ttls or any(t <= 0 for t in ttls):
        raise ConfigError("ttls", "need at least one positive TTL")

    seeds = tuple(int(s) for s in raw.get("seeds", DEFAULT_SEEDS))
    if not seeds:
        raise ConfigError("seeds", "need at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds", "seeds must be distinct")

    try:
        sample = SampleConfig(
            int(raw.get("samples_per_day", 24)), int(raw.get("seconds_per_day", 86400))
        )
    except ValueError as exc:
        raise ConfigError("samples_per_day", str(exc)) from None

    trace = _require(raw, "trace", "")
    trace_path = routine = None
    trace_format = str(raw.get("trace_format", "csv"))
    if isinstance(trace, str):
        trace_path = base / trace
        if not trace_path.exists():
            raise ConfigError("trace", f"file not found: {trace_path}")
    elif isinstance(trace, Mapping) and "routine" in trace:
        try:
            routine = RoutineSpec.from_dict(trace["routine"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError("trace.routine", str(exc)) from None
        if routine.cfg != sample:
            raise ConfigError("trace.routine", "routine sample grid must match run sample grid")
    else:
        raise ConfigError("trace", "expected a file path or {'routine': {...}}")

    workload = _require(raw, "workload", "")
    workload_path = workload_gen = None
    if isinstance(workload, str):
        workload_path = base / workload
        if not workload_path.exists():
            raise ConfigError("workload", f"file not found: {workload_path}")
    elif isinstance(workload, Mapping) and "count" in workload:
        gen = dict(workload)
        if int(gen["count"]) <= 0:
            raise ConfigError("workload.count", "must be > 0")
        if "window" not in gen:
            raise ConfigError("workload.window", "missing required field")
        workload_gen = gen
    else:
        raise ConfigError("workload", "expected a file path or {'count': ..., 'window': [lo, hi]}")

    bandwidth = raw.get("bandwidth")
    if bandwidth is not None:
        bandwidth = float(bandwidth)
        if bandwidth <= 0:
            raise ConfigError("bandwidth", "must be > 0 or null for unlimited")

    def positive(key: str, default: float) -> float:
        value = float(raw.get(key, default))
        if value <= 0:
            raise ConfigError(key, "must be > 0")
        return value

    damping = float(raw.get("damping", 0.8))
    if not 0.0 <= damping <= 1.0:
        raise ConfigError("damping", "must be in [0, 1]")
    k = int(raw.get("k", 5))
    if k < 3:
        raise ConfigError("k", "must be >= 3")

    drop_policy = str(raw.get("drop_policy", "oldest_first"))
    if drop_policy not in ("oldest_first", "newest_first"):
        raise ConfigError("drop_policy", f"unknown policy {drop_policy!r}")

    epoch = raw.get("epoch")
    return ExperimentConfig(
        routers=routers,
        ttls=ttls,
        seeds=seeds,
        trace_path=trace_path,
        trace_format=trace_format,
        routine=routine,
        workload_path=workload_path,
        workload_gen=workload_gen,
        sample=sample,
        buffer_capacity=int(positive("buffer_capacity", 2_000_000)),
        bandwidth=bandwidth,
        damping=damping,
        k=k,
        familiar_threshold=positive("familiar_threshold", 43_200.0),
        centrality_window=positive("centrality_window", 21_600.0),
        recompute_interval=positive("recompute_interval", 86_400.0),
        epoch=None if epoch is None else float(epoch),
        drop_policy=drop_policy,
        charge_summaries=bool(raw.get("charge_summaries", False)),
        out_dir=base / str(raw.get("out", "results")),
    )


def load_experiment_config_file(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    return load_experiment_config(raw, path.parent)


def materialize_scenario(
    cfg: ExperimentConfig, seed: int
) -> tuple[ContactTrace, tuple[WorkloadEntry, ...]]:
    """Resolve the trace and workload for one seed.

    Generated scenarios vary with the seed; file-based ones are fixed, so
    every seed replays the identical input (and, the engine being
    deterministic, yields identical logs).
    """
    if cfg.routine is not None:
        trace = generate_routine_trace(cfg.routine, seed)
    else:
        trace, _ = load_contact_trace(cfg.trace_path, cfg.trace_format)
    if cfg.workload_gen is not None:
        gen = cfg.workload_gen
        lo, hi = gen["window"]
        entries = generate_workload(
            int(gen["count"]),
            trace.node_count,
            (float(lo), float(hi)),
            seed,
            size_range=(
                int(gen.get("min_size", 1000)),
                int(gen.get("max_size", 100000)),
            ),
        )
    else:
        entries = load_workload(cfg.workload_path)
    return trace, tuple(entries)


def sim_config_for_cell(
    cfg: ExperimentConfig,
    router: str,
    ttl: float,
    seed: int,
    trace: ContactTrace,
    workload: tuple[WorkloadEntry, ...],
) -> SimConfig:
    return SimConfig(
        trace=trace,
        workload=workload,
        router=router,
        sample=cfg.sample,
        ttl=ttl,
        buffer_capacity=cfg.buffer_capacity,
        bandwidth=cfg.bandwidth,
        damping=cfg.damping,
        k=cfg.k,
        familiar_threshold=cfg.familiar_threshold,
        centrality_window=cfg.centrality_window,
        recompute_interval=cfg.recompute_interval,
        epoch=cfg.epoch,
        drop_policy=cfg.drop_policy,
        charge_summaries=cfg.charge_summaries,
        seed=seed,
    )


def cell_dir_name(router: str, ttl: float, seed: int) -> str:
    ttl_txt = str(int(ttl)) if float(ttl).is_integer() else repr(float(ttl))
    return f"{router}_ttl{ttl_txt}_s{seed}"


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _run_cell(args) -> tuple[str, float, int, RunMetrics]:
    cfg, router, ttl, seed, dump_ledgers = args
    trace, workload = materialize_scenario(cfg, seed)
    sim_cfg = sim_config_for_cell(cfg, router, ttl, seed, trace, workload)
    from .engine import Simulation  # local import keeps worker pickling light

    sim = Simulation(sim_cfg)
    log = sim.run()
    cell = cfg.out_dir / cell_dir_name(router, ttl, seed)
    cell.mkdir(parents=True, exist_ok=True)
    (cell / "events.ndjson").write_text(log.to_ndjson())
    (cell / "events.csv").write_text(log.to_csv())
    if dump_ledgers:
        pair_csv, imp_csv = dump_ledgers_csv(node.ledger for node in sim.nodes)
        (cell / "ledger_pairs.csv").write_text(pair_csv)
        (cell / "ledger_importance.csv").write_text(imp_csv)
        (cell / "communities.json").write_text(communities_json(sim.communities))
        (cell / "centrality.csv").write_text(
            centrality_csv(sim.centralities, sim.communities, trace.node_count)
        )
    return router, ttl, seed, compute_run_metrics(log)


def run_experiment(
    cfg: ExperimentConfig, jobs: int = 1, dump_ledgers: bool = False
) -> tuple[Path, Path]:
    """Run every plan cell, write per-run logs plus the results and aggregate
    CSVs, and return their paths."""
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, r, t, s, dump_ledgers) for r, t, s in cfg.cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, tasks))
    else:
        outcomes = [_run_cell(task) for task in tasks]

    outcomes.sort(key=lambda o: (o[0], o[1], o[2]))
    results_lines = [RESULTS_HEADER]
    for router, ttl, seed, rm in outcomes:
        results_lines.append(
            f"{router},{ttl!r},{seed},{_fmt(rm.delivery_probability)},{_fmt(rm.avg_cost)},{_fmt(rm.avg_latency)}"
        )
    results_path = cfg.out_dir / "results.csv"
    results_path.write_text("\n".join(results_lines) + "\n")

    aggregate_lines = [AGGREGATE_HEADER]
    for router in cfg.routers:
        for ttl in cfg.ttls:
            runs = [rm for r, t, _, rm in outcomes if r == router and t == ttl]
            agg = aggregate_runs(runs)
            cols = [router, repr(float(ttl)), str(len(runs))]
            for summary in (agg.delivery, agg.cost, agg.latency):
                if summary is None:
                    cols += ["", ""]
                else:
                    cols += [_fmt(summary.mean), _fmt(summary.ci_half_width)]
            aggregate_lines.append(",".join(cols))
    aggregate_path = cfg.out_dir / "aggregate.csv"
    aggregate_path.write_text("\n".join(aggregate_lines) + "\n")
    return results_path, aggregate_path


# -- comparison -------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    router: str
    ttl: float
    seed: int
    delivery: float | None
    cost: float | None
    latency: float | None


def parse_results_csv(text: str) -> list[ResultRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != RESULTS_HEADER:
        raise ValueError(f"expected results header {RESULTS_HEADER!r}")
    rows = []
    for ln in lines[1:]:
        router, ttl, seed, delivery, cost, latency = ln.split(",")
        opt = lambda s: None if s == "" else float(s)
        rows.append(
            ResultRow(router, float(ttl), int(seed), opt(delivery), opt(cost), opt(latency))
        )
    return rows


def _select_router(rows: list[ResultRow], router: str | None, label: str) -> str:
    routers = sorted({r.router for r in rows})
    if router is None:
        if len(routers) != 1:
            raise ValueError(
                f"{label}: result set contains routers {routers}; pick one with --router-{label}"
            )
        return routers[0]
    if router not in routers:
        raise ValueError(f"{label}: router {router!r} not in result set (has {routers})")
    return router


@dataclass(frozen=True)
class ComparisonRow:
    ttl: float
    metric: str
    a_mean: float
    b_mean: float
    delta: float
    delta_unit: str  # "pp" for delivery, "%" for cost/latency
    delta_ci: float | None


def compare_results(
    rows_a: list[ResultRow],
    rows_b: list[ResultRow],
    router_a: str | None = None,
    router_b: str | None = None,
) -> list[ComparisonRow]:
    """Per (TTL, metric) differences between two result sets over one plan.

    Delivery differences are percentage points (antisymmetric under swapping
    the inputs); cost and latency are percent change relative to side B.
    Confidence half-widths come from the seed-paired differences.
    """
    name_a = _select_router(rows_a, router_a, "a")
    name_b = _select_router(rows_b, router_b, "b")
    side_a = {(r.ttl, r.seed): r for r in rows_a if r.router == name_a}
    side_b = {(r.ttl, r.seed): r for r in rows_b if r.router == name_b}
    if set(side_a) != set(side_b):
        raise ValueError("result sets cover different (ttl, seed) plans; cannot compare")
    ttls = sorted({ttl for ttl, _ in side_a})

    out: list[ComparisonRow] = []
    for ttl in ttls:
        seeds = sorted(seed for t, seed in side_a if t == ttl)
        for metric in ("delivery", "cost", "latency"):
            pairs = []
            for seed in seeds:
                va = getattr(side_a[(ttl, seed)], metric)
                vb = getattr(side_b[(ttl, seed)], metric)
                if va is not None and vb is not None:
                    pairs.append((va, vb))
            if not pairs:
                continue
            mean_a = sum(a for a, _ in pairs) / len(pairs)
            mean_b = sum(b for _, b in pairs) / len(pairs)
            diffs = [a - b for a, b in pairs]
            diff_summary = summarize(diffs) if len(diffs) >= 2 else None
            if metric == "delivery":
                delta, unit = (mean_a - mean_b) * 100.0, "pp"
                ci = None if diff_summary is None else (
                    None if diff_summary.ci_half_width is None else diff_summary.ci_half_width * 100.0
                )
            else:
                if mean_b == 0:
                    continue
                delta, unit = (mean_a - mean_b) / mean_b * 100.0, "%"
                ci = None if diff_summary is None else (
                    None
                    if diff_summary.ci_half_width is None
                    else diff_summary.ci_half_width / mean_b * 100.0
                )
            out.append(ComparisonRow(ttl, metric, mean_a, mean_b, delta, unit, ci))
    return out


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    lines = [COMPARE_HEADER]
    for r in rows:
        ci = "" if r.delta_ci is None else repr(r.delta_ci)
        lines.append(
            f"{r.ttl!r},{r.metric},{r.a_mean!r},{r.b_mean!r},{r.delta!r},{r.delta_unit},{ci}"
        )
    return "\n".join(lines) + "\n"
