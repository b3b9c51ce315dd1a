"""Scenario orchestration: single runs with trace files, A/B sweeps, and the
invariant-checking ``verify`` run."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, ScenarioConfig, emit_config, override
from .dsdv import RouteFailure, RoutingLoop, trace_primary_path
from .link import FrameKind
from .network import Network
from .traffic import TRAFFIC_LOAD_DEFINITION, MetricsReport, report

FRAME_COLUMNS = ["time", "uid", "kind", "src", "dst", "size", "outcome", "pkt_id", "wait"]
MOBILITY_COLUMNS = ["time", "node", "x", "y"]
PACKET_COLUMNS = ["pkt_id", "flow", "src", "dst", "sent_at", "received_at", "hops", "dropped"]
FAILOVER_COLUMNS = ["time", "node", "dest", "dead_next_hop", "backup_next_hop"]
ROUTE_COLUMNS = ["node", "dest", "next_hop", "metric", "seq"]
BACKUP_COLUMNS = ["node", "dest", "backup_next_hop", "backup_hop_count", "recorded_path"]
LABEL_COLUMNS = ["node_count", "pause_time", "seed", "variant"]
REPORT_COLUMNS = LABEL_COLUMNS + MetricsReport.columns()[1:]

SWEEP_VARIABLES = {"node_count": "node_count", "nodes": "node_count",
                   "pause_time": "mobility.pause_time", "pause": "mobility.pause_time"}


def _cell(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    if isinstance(v, (tuple, list)):
        return " ".join(str(x) for x in v)
    return v


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def output_dir(default="out") -> Path:
    return Path(os.environ.get("DBRTSIM_OUTPUT_DIR") or default)


@dataclass
class RunResult:
    cfg: ScenarioConfig
    net: Network
    report: MetricsReport

    def report_row(self) -> list:
        c = self.cfg
        return [c.node_count, c.mobility.pause_time, c.seed, c.variant] + self.report.row()[1:]

    def frame_rows(self):
        for t, uid, kind, src, dst, size, outcome, pid, wait in self.net.frame_log:
            yield (t, uid, FrameKind(kind).name, src, dst, size, outcome, pid, wait)

    def packet_rows(self):
        flows = self.net.flows
        for r in self.net.packets.records:
            f = flows[r.flow]
            yield (r.pkt_id, r.flow, f.src, f.dst, r.sent_at,
                   "" if r.received_at is None else r.received_at, r.hops, r.dropped or "")


def measurement_window(cfg: ScenarioConfig) -> tuple[float, float]:
    return (cfg.traffic.start, cfg.duration)


def simulate(cfg: ScenarioConfig, monitors: bool = False, record_events: bool = False,
             trace_mobility: bool = True) -> RunResult:
    net = Network(cfg, record_events=record_events, monitors=monitors,
                  trace_mobility=trace_mobility).run()
    return RunResult(cfg, net, report(net.packets, net.frame_log, measurement_window(cfg),
                                      cfg.variant))


def route_rows(net: Network):
    for nd in net.nodes:
        for dest, nh, metric, seq in nd.table.dump_rows():
            yield (nd.id, dest, nh, metric, seq)


def backup_rows(net: Network):
    for nd in net.nodes:
        for dest, nh, hops, path in nd.backup.dump_rows():
            yield (nd.id, dest, nh, hops, path)


def write_run(res: RunResult, outdir) -> Path:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    net = res.net
    (out / "config.txt").write_text(emit_config(res.cfg))
    write_csv(out / "report.csv", REPORT_COLUMNS, [res.report_row()])
    lo, hi = measurement_window(res.cfg)
    write_csv(out / "metadata.csv", ["key", "value"], [
        ("traffic_load", TRAFFIC_LOAD_DEFINITION),
        ("window_start", lo), ("window_end", hi),
        ("variant", res.cfg.variant), ("seed", res.cfg.seed),
    ])
    write_csv(out / "frames.csv", FRAME_COLUMNS, res.frame_rows())
    write_csv(out / "mobility.csv", MOBILITY_COLUMNS, net.mobility_trace)
    write_csv(out / "packets.csv", PACKET_COLUMNS, res.packet_rows())
    write_csv(out / "failover.csv", FAILOVER_COLUMNS, net.failover_log)
    write_csv(out / "routes.csv", ROUTE_COLUMNS, route_rows(net))
    write_csv(out / "backups.csv", BACKUP_COLUMNS, backup_rows(net))
    if net.sim.record_events:
        net.sim.write_event_log(out / "events.csv")
    return out


def run_scenario(cfg: ScenarioConfig, outdir=None, record_events: bool = False) -> RunResult:
    """Run one scenario; with ``outdir`` also write the report and trace CSVs."""
    res = simulate(cfg, record_events=record_events)
    if outdir is not None:
        write_run(res, outdir)
    return res


# ------------------------------------------------------------------ sweeps
class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    variants: tuple = ("dsdv", "dbrt")
    seeds: tuple = (1, 2, 3, 4, 5)

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.variable!r}")
        if not self.values or not self.variants or not self.seeds:
            raise ValueError("sweep needs at least one value, variant and seed")
        bad = set(self.variants) - {"dsdv", "dbrt"}
        if bad:
            raise ValueError(f"unknown variants {sorted(bad)}")

    def points(self):
        """(value, variant, seed) in the order rows appear in the output."""
        return [(v, var, s) for v in self.values for var in self.variants for s in self.seeds]


def point_config(base: ScenarioConfig, spec: SweepSpec, value, variant, seed) -> ScenarioConfig:
    key = SWEEP_VARIABLES[spec.variable]
    value = int(value) if key == "node_count" else float(value)
    return override(base, **{key: value, "dbrt.enabled": variant == "dbrt", "seed": int(seed)})


def _run_point(cfg: ScenarioConfig) -> list:
    return simulate(cfg, trace_mobility=False).report_row()


def sweep(spec: SweepSpec, base_cfg: ScenarioConfig, workers: int = 1) -> list[list]:
    """One report row per (value, variant, seed), in point order regardless of
    which worker finishes first."""
    points = spec.points()
    cfgs = []
    for value, variant, seed in points:
        try:
            cfgs.append(point_config(base_cfg, spec, value, variant, seed))
        except ValueError as exc:
            raise ConfigError(f"{spec.variable}={value} {variant} seed={seed}: {exc}") from exc
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            futures = [ex.submit(_run_point, c) for c in cfgs]
            for (value, variant, seed), fut in zip(points, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:
                    for f in futures:
                        f.cancel()
                    raise SweepError(f"{spec.variable}={value} {variant} seed={seed}: {exc}") from exc
    else:
        for (value, variant, seed), c in zip(points, cfgs):
            try:
                rows.append(_run_point(c))
            except Exception as exc:
                raise SweepError(f"{spec.variable}={value} {variant} seed={seed}: {exc}") from exc
    return rows


def write_sweep(rows, path) -> None:
    write_csv(path, REPORT_COLUMNS, rows)


# ------------------------------------------------------------ verification
@dataclass
class InvariantResult:
    name: str
    checks: int = 0
    counterexamples: list = field(default_factory=list)
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return not self.counterexamples

    def fail(self, example) -> None:
        self.counterexamples.append(example)


@dataclass
class VerifyReport:
    results: dict
    notes: list
    run: RunResult

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def lines(self) -> list[str]:
        out = []
        for name, r in self.results.items():
            status = "PASS" if r.passed else "FAIL"
            extra = f", {r.skipped} skipped" if r.skipped else ""
            out.append(f"{status} {name}: {r.checks} checks, "
                       f"{len(r.counterexamples)} violations{extra}")
            for ex in r.counterexamples[:5]:
                out.append(f"    {ex}")
        out.extend(f"note: {n}" for n in self.notes)
        return out


INSTALL_INVARIANTS = ("endpoints", "loop", "next_hop_mismatch", "hop_count_mismatch",
                      "disjointness", "next_hop_exclusion", "soundness")


def _check_routes(net: Network, res: dict, static: bool) -> None:
    live = [i for i in range(len(net.nodes)) if net.alive[i]]
    loops = res["loop_freedom"]
    for s in live:
        for d in live:
            if s == d:
                continue
            loops.checks += 1
            try:
                trace_primary_path(net.tables, s, d)
            except RoutingLoop as exc:
                loops.fail((net.sim.now, s, d, str(exc)))
            except RouteFailure:
                pass
    settle = 3 * net.cfg.dsdv.update_interval
    if static and all(net.sim.now - t >= settle for t, _, _ in net.failures):
        oracle = res["dsdv_vs_bfs"]
        oracle.checks += len(live) * len(live)
        for bad in net.dsdv_bfs_mismatches():
            oracle.fail((net.sim.now,) + bad)


def verify(cfg: ScenarioConfig, checkpoints: int | None = None) -> VerifyReport:
    """Run ``cfg`` with every monitor armed.

    Routing-state checks happen at DSDV-quiescent points, one per update
    interval starting after three intervals.  The BFS comparison is only
    meaningful once the graph has stood still for three update intervals, so
    it runs for static scenarios only, skipping checkpoints too close to an
    injected failure; loop-freedom is checked everywhere.
    """
    names = ["frame_range", *INSTALL_INVARIANTS, "loop_freedom", "dsdv_vs_bfs",
             "conservation", "frame_accounting"]
    res = {n: InvariantResult(n) for n in names}
    net = Network(cfg, monitors=True)
    net.start()
    static = cfg.mobility.model == "static"
    interval = cfg.dsdv.update_interval
    t = 3 * interval
    n_done = 0
    while t < cfg.duration and (checkpoints is None or n_done < checkpoints):
        if net.run_until_quiescent(t, min(t + interval / 2, cfg.duration)):
            _check_routes(net, res, static)
        else:
            res["loop_freedom"].skipped += 1
            res["dsdv_vs_bfs"].skipped += static
        n_done += 1
        t = max(t + interval, net.sim.now)
    net.run()
    run = RunResult(cfg, net, report(net.packets, net.frame_log, measurement_window(cfg),
                                     cfg.variant))

    for when, what, detail in net.violations:
        res.setdefault(what, InvariantResult(what)).fail((when, detail))
    res["frame_range"].checks = len(net.frame_log)
    for name in INSTALL_INVARIANTS:
        res[name].checks = len(net.install_log)

    cons = res["conservation"]
    for k in range(len(net.flows)):
        b = net.packets.flow_balance(k)
        cons.checks += 1
        if b["in_flight"] < 0 or b["sent"] != b["delivered"] + b["dropped"] + b["in_flight"]:
            cons.fail((k, b))
    acct = res["frame_accounting"]
    kinds = {int(k) for k in FrameKind}
    r = run.report
    acct.checks = len(net.frame_log)
    for row in net.frame_log:
        if row[2] not in kinds:
            acct.fail(row)
    if r.control_overhead + r.data_frames != len(net.frame_log):
        acct.fail(("totals", r.control_overhead, r.data_frames, len(net.frame_log)))

    notes = []
    for when, node, dest, dead, nh in net.failover_log:
        if nh < 0:
            notes.append(f"t={when:.3f} node {node} lost {dead} towards {dest}: no backup available")
        else:
            notes.append(f"t={when:.3f} node {node} failed over towards {dest}: {dead} -> {nh}")
    if cfg.dbrt.enabled and not net.install_log:
        notes.append("no backup route was installed during the run")
    return VerifyReport(res, notes, run)


def dump_tables(cfg: ScenarioConfig, at: float) -> tuple[list, list]:
    """Routing and backup tables of every node at simulated time ``at``."""
    if not 0 <= at <= cfg.duration:
        raise ValueError("dump time must lie within the run")
    net = Network(cfg, trace_mobility=False)
    net.run(at)
    return list(route_rows(net)), list(backup_rows(net))
