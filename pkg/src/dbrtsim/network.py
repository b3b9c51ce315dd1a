"""Wires the engine, radio, mobility, link layer and routing agents together."""

from __future__ import annotations

import itertools
import logging
from collections import deque

import numpy as np

from . import dbrt as dbrt_ops
from .config import ScenarioConfig, parse_failures, parse_pairs, parse_positions
from .dbrt import BackupRoutingTable, DbrtCounters, RebuildTracker
from .dsdv import (INFINITY, RoutingTable, UpdateMessage, handle_link_break,
                   lookup_next_hop, originate_update, process_update, try_trace)
from .engine import RngStreams, Simulator
from .link import (BROADCAST, DELIVERED, Frame, FrameKind, NeighborLiveness,
                   detect_failures, hello_frame, transmit)
from .mobility import MobilityModel
from .oracles import backup_entry_problems, bfs_distances
from .radio import adjacency_matrix, in_range
from .traffic import FlowConfig, PacketLog, generate_cbr

log = logging.getLogger(__name__)

HELLO, UPDATE, QUERY, REPLY, DATA = (FrameKind.HELLO, FrameKind.DSDV_UPDATE,
                                     FrameKind.DBRT_QUERY, FrameKind.DBRT_REPLY,
                                     FrameKind.DATA)


class Packet:
    __slots__ = ("pid", "flow", "src", "dst", "size", "ttl", "hops", "route", "arrived_at")

    def __init__(self, pid, flow, src, dst, size, ttl, now):
        self.pid = pid
        self.flow = flow
        self.src = src
        self.dst = dst
        self.size = size
        self.ttl = ttl
        self.hops = 0
        self.route = None       # remaining source route while on a backup path
        self.arrived_at = now   # when the packet reached the node now holding it


class Round:
    __slots__ = ("qid", "primary", "replies")

    def __init__(self, qid, primary):
        self.qid = qid
        self.primary = primary
        self.replies = []


class Node:
    def __init__(self, nid: int, cfg: ScenarioConfig):
        self.id = nid
        self.alive = True
        self.table = RoutingTable(nid)
        self.liveness = NeighborLiveness(cfg.link.hello_interval, cfg.link.miss_threshold)
        self.view: set[int] = set()           # neighbors as of the last topology tick
        self.view_version = 0
        self.buffer: dict[int, deque] = {}    # packets waiting for a route, per destination
        self.trigger_pending = False
        self.backup = BackupRoutingTable(nid)
        self.tracker = RebuildTracker(cfg.dbrt.rebuild_interval)
        self.active: dict[int, float] = {}    # protected destination -> last traffic seen
        self.rounds: dict[int, Round] = {}
        self.round_pending: set[int] = set()
        self.seen_queries: set = set()


def place_nodes(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    explicit = parse_positions(cfg.topology.positions)
    if explicit:
        return np.array(explicit, dtype=float)
    m = cfg.mobility
    n = cfg.node_count
    for _ in range(10_000):
        xy = np.column_stack([rng.uniform(0, m.area_width, n), rng.uniform(0, m.area_height, n)])
        if cfg.topology.min_degree == 0:
            return xy
        if adjacency_matrix(xy, cfg.radio).sum(axis=1).min() >= cfg.topology.min_degree:
            return xy
    raise RuntimeError(f"could not place {n} nodes with degree >= {cfg.topology.min_degree}")


def make_flows(cfg: ScenarioConfig, rng: np.random.Generator) -> list[FlowConfig]:
    t = cfg.traffic
    interval = 1.0 / t.rate
    pairs = parse_pairs(t.pairs)
    if not pairs:
        for _ in range(t.flows):
            s, d = rng.choice(cfg.node_count, size=2, replace=False)
            pairs.append((int(s), int(d)))
    flows = []
    for s, d in pairs:
        start = t.start + float(rng.uniform(0, interval))
        flows.append(FlowConfig(s, d, t.packet_size, interval, min(start, cfg.traffic_stop - 1e-9),
                                cfg.traffic_stop))
    return flows


class Network:
    """One simulation run of a scenario.

    ``monitors`` arms the per-frame range check; backup-install checks are
    always on because they are cheap.
    """

    def __init__(self, cfg: ScenarioConfig, record_events: bool = False, monitors: bool = False,
                 trace_mobility: bool = True):
        self.cfg = cfg
        self.sim = Simulator(record_events)
        self.rng = RngStreams(cfg.seed)
        self.monitors = monitors
        self.dbrt_on = cfg.dbrt.enabled
        n = cfg.node_count
        self.nodes = [Node(i, cfg) for i in range(n)]
        self.tables = [nd.table for nd in self.nodes]
        initial = place_nodes(cfg, self.rng["placement"])
        self.mobility = MobilityModel(cfg.mobility, initial,
                                      [self.rng[f"mobility/{i}"] for i in range(n)])
        self.xy = np.array(initial, dtype=float)
        self.alive = np.ones(n, dtype=bool)
        self._adj = np.zeros((n, n), dtype=bool)
        self.phys: list[set[int]] = [set() for _ in range(n)]
        self._topology_dirty = True
        self.flows = make_flows(cfg, self.rng["traffic"])
        self.packets = PacketLog(self.flows)
        self.counters = DbrtCounters()
        self.frame_log: list[tuple] = []
        self.mobility_trace: list[tuple] = []
        self.trace_mobility = trace_mobility
        self.break_log: list[tuple] = []      # (time, node, neighbor, how)
        self.failover_log: list[tuple] = []   # (time, node, dest, dead, backup_next_hop or -1)
        self.install_log: list[tuple] = []    # (time, node, dest, recorded_path, primary)
        self.violations: list[tuple] = []     # (time, invariant, detail)
        self.failures: list[tuple] = []       # (time, killed node, reason)
        self.tx_counts = {k: 0 for k in FrameKind}
        self._uid = itertools.count()
        self._qid = itertools.count()
        self._updates_in_flight = 0
        self._triggers_pending = 0
        self._loss_rng = {"control": self.rng["loss/control"], "dbrt": self.rng["loss/dbrt"],
                          "data": self.rng["loss/data"]}
        self._dsdv_rng = self.rng["dsdv"]
        self._dbrt_rng = self.rng["dbrt"]
        self._started = False

    # ------------------------------------------------------------------ setup
    def start(self):
        if self._started:
            return
        self._started = True
        cfg = self.cfg
        sim = self.sim
        sim.schedule(0.0, self._tick, 0, target=-1, kind="tick")
        hello_rng = self.rng["hello"]
        for nd in self.nodes:
            phase = float(hello_rng.uniform(0, cfg.link.hello_interval))
            sim.schedule(phase, self._hello, nd.id, phase, 0, target=nd.id, kind="hello")
        for nd in self.nodes:
            phase = float(self._dsdv_rng.uniform(0, cfg.dsdv.update_interval))
            sim.schedule(phase, self._periodic_dump, nd.id, phase, 0, target=nd.id, kind="dump")
        for k, flow in enumerate(self.flows):
            times = generate_cbr(flow)
            if times:
                sim.schedule(times[0], self._send, k, times, 0, target=flow.src, kind="cbr")
        for what, ident, t in parse_failures(cfg.failure.events):
            sim.schedule(t, self._inject_failure, what, ident, target=ident, kind="failure")

    def run(self, until: float | None = None):
        self.start()
        self.sim.run_until(self.cfg.duration if until is None else until)
        return self

    # --------------------------------------------------------------- topology
    def _refresh_adjacency(self, t):
        if self.cfg.mobility.model != "static" or self._topology_dirty:
            if self.cfg.mobility.model != "static":
                self.xy = self.mobility.positions(t)
            adj = adjacency_matrix(self.xy, self.cfg.radio)
            dead = ~self.alive
            adj[dead, :] = False
            adj[:, dead] = False
            changed_rows = np.flatnonzero((adj != self._adj).any(axis=1))
            for i in changed_rows:
                self.phys[i] = set(np.flatnonzero(adj[i]).tolist())
            self._adj = adj
            self._topology_dirty = False

    def _tick(self, k):
        t = self.sim.now
        self._refresh_adjacency(t)
        if self.trace_mobility and k % max(1, round(1.0 / self.cfg.mobility.tick)) == 0:
            for i in range(len(self.nodes)):
                if self.alive[i]:
                    self.mobility_trace.append((t, i, float(self.xy[i, 0]), float(self.xy[i, 1])))
        for nd in self.nodes:
            if not nd.alive:
                continue
            new = self.phys[nd.id]
            if nd.view == new:
                continue
            lost = nd.view - new
            nd.view = set(new)
            nd.view_version += 1
            for j in sorted(lost):
                if nd.liveness.forget(j):
                    self._link_break(nd, j, "tick")
        if self.dbrt_on:
            for nd in self.nodes:
                if nd.alive and (nd.active or self.cfg.dbrt.all_pairs):
                    self._dbrt_check(nd)
        nxt = (k + 1) * self.cfg.mobility.tick
        if nxt <= self.cfg.duration:
            self.sim.schedule(nxt, self._tick, k + 1, target=-1, kind="tick")

    def graph(self) -> dict[int, set[int]]:
        """Current physical connectivity among live nodes."""
        return {i: set(self.phys[i]) for i in range(len(self.nodes)) if self.alive[i]}

    def _link_ok(self, a, b):
        return b in self.phys[a]

    # ------------------------------------------------------------- link layer
    def _emit(self, frame: Frame, stream: str, pkt: Packet | None = None):
        now = self.sim.now
        src = frame.src
        reach = self.phys[src]
        deliveries, outcome = transmit(frame, reach, self.cfg.link, now, self._loss_rng[stream])
        kind = frame.kind
        self.tx_counts[kind] += 1
        self.frame_log.append((now, frame.uid, int(kind), src, frame.dst, frame.size, outcome,
                               pkt.pid if pkt is not None else -1,
                               now - pkt.arrived_at if pkt is not None else 0.0))
        if self.monitors:
            p = self.xy[src]
            for r, _ in deliveries:
                if not in_range(self.cfg.radio, p, self.xy[r]):
                    self.violations.append((now, "frame_range", (frame.uid, src, r)))
        if not deliveries:
            return outcome
        at = deliveries[0][1]
        receivers = [r for r, _ in deliveries]
        if kind == UPDATE:
            self._updates_in_flight += 1
        self.sim.schedule(at, self._receive, frame, receivers, target=frame.dst, kind=kind.name)
        return outcome

    def _receive(self, frame: Frame, receivers):
        kind = frame.kind
        if kind == UPDATE:
            self._updates_in_flight -= 1
        now = self.sim.now
        src = frame.src
        for r in receivers:
            nd = self.nodes[r]
            if not nd.alive:
                if kind == DATA:
                    self.packets.drop(frame.payload.pid, "dead_node")
                continue
            nd.liveness.heard(src, now)
            if kind == HELLO:
                self._on_route_info(nd, UpdateMessage(src, [(src, 0, frame.payload)]), src)
            elif kind == UPDATE:
                self._on_route_info(nd, frame.payload, src)
            elif kind == DATA:
                pkt = frame.payload
                pkt.hops += 1
                pkt.arrived_at = now
                self._forward(nd, pkt)
            elif kind == QUERY:
                self._on_query(nd, frame.payload)
            elif kind == REPLY:
                self._on_reply(nd, *frame.payload)

    def _hello(self, i, phase, k):
        nd = self.nodes[i]
        if not nd.alive:
            return
        lcfg = self.cfg.link
        f = hello_frame(i, nd.table.own_seq, lcfg, next(self._uid))
        self._emit(f, "control")
        for j in sorted(detect_failures(nd.liveness, self.sim.now)):
            self._link_break(nd, j, "hello_timeout")
        self.sim.schedule(phase + (k + 1) * lcfg.hello_interval, self._hello, i, phase, k + 1,
                          target=i, kind="hello")

    def _link_break(self, nd: Node, j: int, how: str):
        now = self.sim.now
        self.break_log.append((now, nd.id, j, how))
        if self.dbrt_on:
            for dest, e in sorted(nd.table.entries.items()):
                if e.next_hop == j and e.metric < INFINITY and dest != nd.id and dest in nd.active:
                    nh = dbrt_ops.failover(nd.id, dest, j, nd.backup, nd.view, self.counters)
                    self.failover_log.append((now, nd.id, dest, j, -1 if nh is None else nh))
        changed = handle_link_break(nd.table, j, now)
        if changed:
            self._schedule_trigger(nd)

    # ------------------------------------------------------------------- DSDV
    def _on_route_info(self, nd: Node, msg: UpdateMessage, frm: int):
        changed = process_update(nd.table, msg, frm, self.sim.now)
        if not changed:
            return
        self._schedule_trigger(nd)
        if nd.buffer:
            for d in sorted(changed):
                if d in nd.buffer and nd.table.entries[d].metric < INFINITY:
                    self._flush(nd, d)
        if self.dbrt_on and nd.active:
            for d in sorted(changed):
                if d in nd.active:
                    self._dbrt_check_dest(nd, d)

    def _schedule_trigger(self, nd: Node):
        if nd.trigger_pending:
            return
        nd.trigger_pending = True
        self._triggers_pending += 1
        delay = float(self._dsdv_rng.uniform(0, self.cfg.dsdv.trigger_jitter))
        self.sim.schedule_in(delay, self._fire_trigger, nd.id, target=nd.id, kind="trigger")

    def _fire_trigger(self, i):
        nd = self.nodes[i]
        nd.trigger_pending = False
        self._triggers_pending -= 1
        if not nd.alive or not nd.table.dirty:
            return
        self._broadcast_update(nd, originate_update(nd.table, self.sim.now, full=False))

    def _periodic_dump(self, i, phase, k):
        nd = self.nodes[i]
        if not nd.alive:
            return
        self._broadcast_update(nd, originate_update(nd.table, self.sim.now, full=True))
        nxt = phase + (k + 1) * self.cfg.dsdv.update_interval
        self.sim.schedule(nxt, self._periodic_dump, i, phase, k + 1, target=i, kind="dump")

    def _broadcast_update(self, nd: Node, msg: UpdateMessage):
        f = Frame(UPDATE, nd.id, BROADCAST, self.cfg.link.update_size(len(msg.routes)), msg,
                  next(self._uid))
        self._emit(f, "control")

    def dsdv_quiescent(self) -> bool:
        return self._updates_in_flight == 0 and self._triggers_pending == 0

    def run_until_quiescent(self, t_min: float, t_max: float) -> bool:
        """Advance to ``t_min``, then step until no DSDV update is pending or in
        flight (or ``t_max`` is reached). Returns whether quiescence was hit."""
        self.start()
        self.sim.run_until(t_min)
        while not self.dsdv_quiescent():
            t = self.sim.peek_time()
            if t is None or t > t_max:
                return False
            self.sim.step()
        return True

    # ------------------------------------------------------------------- data
    def _send(self, k, times, idx):
        flow = self.flows[k]
        nd = self.nodes[flow.src]
        now = self.sim.now
        if nd.alive:
            pid = self.packets.send(k, now)
            pkt = Packet(pid, k, flow.src, flow.dst, flow.packet_size, self.cfg.dsdv.data_ttl, now)
            self._forward(nd, pkt)
        if idx + 1 < len(times):
            self.sim.schedule(times[idx + 1], self._send, k, times, idx + 1,
                              target=flow.src, kind="cbr")

    def _forward(self, nd: Node, pkt: Packet):
        now = self.sim.now
        if pkt.dst == nd.id:
            self.packets.record_delivery(pkt.pid, now, pkt.hops)
            return
        if self.dbrt_on:
            self._note_traffic(nd, pkt.dst)
        route = pkt.route
        if route:
            nh = route[0]
            if nh in nd.view:
                pkt.route = route[1:]
                self._send_data(nd, nh, pkt, backup=True)
                return
            pkt.route = None
        nh = lookup_next_hop(nd.table, pkt.dst)
        if nh is not None:
            pkt.route = None
            self._send_data(nd, nh, pkt)
            return
        if self.dbrt_on:
            e = nd.backup.get(pkt.dst)
            if e is not None and e.backup_next_hop in nd.view:
                pkt.route = list(e.recorded_path[2:])
                self._send_data(nd, e.backup_next_hop, pkt, backup=True)
                return
        self._hold(nd, pkt)

    def _send_data(self, nd: Node, nh: int, pkt: Packet, backup: bool = False):
        if pkt.ttl <= 0:
            self.packets.drop(pkt.pid, "ttl")
            return
        pkt.ttl -= 1
        f = Frame(DATA, nd.id, nh, pkt.size, pkt, next(self._uid))
        outcome = self._emit(f, "data", pkt)
        if outcome != DELIVERED:
            self.packets.drop(pkt.pid, outcome)
        elif backup:
            nd.backup.reliability[nh] = nd.backup.reliability.get(nh, 0) + 1

    def _hold(self, nd: Node, pkt: Packet):
        cap = self.cfg.dsdv.buffer_size
        q = nd.buffer.get(pkt.dst)
        if q is None:
            q = nd.buffer[pkt.dst] = deque()
        if len(q) >= cap:
            self.packets.drop(pkt.pid, "no_route")
            if not q:
                del nd.buffer[pkt.dst]
            return
        q.append(pkt)

    def _flush(self, nd: Node, dest: int):
        q = nd.buffer.pop(dest, None)
        if not q:
            return
        for pkt in q:
            self._forward(nd, pkt)

    # ------------------------------------------------------------------- DBRT
    def _note_traffic(self, nd: Node, dest: int):
        first = dest not in nd.active
        nd.active[dest] = self.sim.now
        if first:
            self._dbrt_check_dest(nd, dest)

    def _dbrt_check(self, nd: Node):
        now = self.sim.now
        if self.cfg.dbrt.all_pairs:
            for d in nd.table.entries:
                if d != nd.id:
                    nd.active.setdefault(d, now)
        timeout = self.cfg.dbrt.active_timeout
        for d in sorted(nd.active):
            if now - nd.active[d] > timeout and not self.cfg.dbrt.all_pairs:
                del nd.active[d]
                nd.tracker.forget(d)
                continue
            self._dbrt_check_dest(nd, d)

    def _dbrt_check_dest(self, nd: Node, dest: int):
        if dest in nd.round_pending:
            return
        path = try_trace(self.tables, nd.id, dest)
        backup_ok = dbrt_ops.backup_still_valid(nd.backup.get(dest), path, nd.view)
        if nd.tracker.due(dest, self.sim.now, path, nd.view_version, backup_ok) is None:
            return
        nd.round_pending.add(dest)
        delay = float(self._dbrt_rng.uniform(0, self.cfg.dbrt.round_jitter))
        self.sim.schedule_in(delay, self._start_round, nd.id, dest, target=nd.id, kind="dbrt_round")

    def request_backup(self, i: int, dest: int) -> bool:
        """Run one construction round for ``(i, dest)`` starting now, outside
        the rebuild schedule. Returns False if no query went out."""
        self._start_round(i, dest)
        return dest in self.nodes[i].rounds

    def round_open(self, i: int, dest: int) -> bool:
        return dest in self.nodes[i].rounds

    def _start_round(self, i, dest):
        nd = self.nodes[i]
        nd.round_pending.discard(dest)
        if not nd.alive:
            return
        now = self.sim.now
        path = try_trace(self.tables, i, dest)
        nd.tracker.record(dest, now, path, nd.view_version)
        self.counters.rounds += 1
        if path is None or len(path) < 2:
            return
        adj = dbrt_ops.build_adjacent_list(i, dest, nd.view, path)
        qid = next(self._qid)
        frames = dbrt_ops.issue_queries(i, dest, adj, path, self.cfg.dbrt.query_depth, qid,
                                        self.cfg.link, self._uid)
        if not frames:
            return
        nd.rounds[dest] = Round(qid, path)
        for f in frames:
            self.counters.queries_sent += 1
            self._emit(f, "dbrt")
        self.sim.schedule_in(self.cfg.dbrt.reply_timeout, self._collect, i, dest, qid,
                             target=i, kind="dbrt_collect")

    def _on_query(self, nd: Node, q):
        if not dbrt_ops.accepts_query(nd.id, q):
            return
        key = (q.query_id, q.origin)
        if key in nd.seen_queries:
            return
        if len(nd.seen_queries) > 4096:
            nd.seen_queries.clear()
        nd.seen_queries.add(key)
        res = dbrt_ops.evaluate_query(nd.id, q, self.tables, nd.view)
        if res is None:
            return
        lcfg = self.cfg.link
        if isinstance(res, dbrt_ops.ReplyMessage):
            back = list(reversed(res.chain))
            f = Frame(REPLY, nd.id, back[0], lcfg.dbrt_size(len(res.path) + len(res.chain)),
                      (res, back), next(self._uid))
            self._emit(f, "dbrt")
            return
        _, msg = res
        self.counters.queries_sent += 1
        f = Frame(QUERY, nd.id, BROADCAST, lcfg.dbrt_size(msg.carried_ids), msg, next(self._uid))
        self._emit(f, "dbrt")

    def _on_reply(self, nd: Node, reply, back):
        rest = back[1:]
        if rest:
            f = Frame(REPLY, nd.id, rest[0],
                      self.cfg.link.dbrt_size(len(reply.path) + len(reply.chain)),
                      (reply, rest), next(self._uid))
            self._emit(f, "dbrt")
            return
        self.counters.replies_received += 1
        rnd = nd.rounds.get(reply.for_dest)
        if rnd is not None and rnd.qid == reply.query_id:
            rnd.replies.append(reply)

    def _collect(self, i, dest, qid):
        nd = self.nodes[i]
        rnd = nd.rounds.get(dest)
        if rnd is None or rnd.qid != qid:
            return
        del nd.rounds[dest]
        if not nd.alive or not rnd.replies:
            return
        now = self.sim.now
        current = try_trace(self.tables, i, dest)
        primary = current or rnd.primary
        entry = dbrt_ops.select_backup(i, dest, rnd.replies, primary, now,
                                       link_ok=self._link_ok, counters=self.counters)
        if entry is None:
            return
        if entry.backup_next_hop not in nd.view:
            self.counters.stale_discards += 1
            return
        nd.backup.install(entry)
        # independent re-check against a fresh trace and the live graph
        problems = backup_entry_problems(i, entry, primary, self.graph())
        self.install_log.append((now, i, dest, entry.recorded_path, tuple(primary)))
        for p in problems:
            self.violations.append((now, p, (i, dest, entry.recorded_path, tuple(primary))))
        if dest in nd.buffer:
            self._flush(nd, dest)

    # -------------------------------------------------------------- failures
    def _inject_failure(self, what, ident):
        if what == "node":
            self.kill(ident, "node")
            return
        n_flows = len(self.flows)
        for off in range(n_flows):
            k = (ident + off) % n_flows
            flow = self.flows[k]
            path = try_trace(self.tables, flow.src, flow.dst)
            if path and len(path) > 2:
                inner = path[1:-1]
                self.kill(inner[(len(inner) - 1) // 2], f"flow:{k}")
                return
        log.warning("flow failure at %.3f found no primary-internal node", self.sim.now)

    def kill(self, k: int, reason: str = "node"):
        nd = self.nodes[k]
        if not nd.alive:
            return
        nd.alive = False
        self.alive[k] = False
        self.failures.append((self.sim.now, k, reason))
        for q in nd.buffer.values():
            for pkt in q:
                self.packets.drop(pkt.pid, "dead_node")
        nd.buffer.clear()
        self._topology_dirty = True
        self._refresh_adjacency(self.sim.now)

    # ------------------------------------------------------------- oracles
    def dsdv_bfs_mismatches(self) -> list[tuple]:
        """Pairs whose DSDV metric differs from the BFS hop count, or whose
        traced primary path fails."""
        g = self.graph()
        bad = []
        for i in sorted(g):
            dist = bfs_distances(g, i)
            ents = self.tables[i].entries
            for d in sorted(g):
                want = dist.get(d, INFINITY)
                e = ents.get(d)
                got = e.metric if e is not None else INFINITY
                if got != want:
                    bad.append((i, d, got, want))
                elif want < INFINITY and try_trace(self.tables, i, d) is None:
                    bad.append((i, d, "trace", want))
        return bad
