"""Driven backup routing table.

For every protected destination a node keeps one backup next hop whose path
to the destination shares no internal node with the node's primary (DSDV)
path.  Construction is a query/reply exchange with adjacent nodes that are
not on the primary path; an adjacent node with no usable route of its own
may widen the search to its own neighbors, up to a fixed depth.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .dsdv import try_trace
from .link import Frame, FrameKind, LinkConfig


def internal_nodes(path) -> set:
    return set(path[1:-1])


@dataclass
class AdjacentList:
    owner: int
    for_dest: int
    members: set


@dataclass(frozen=True)
class QueryMessage:
    origin: int
    for_dest: int
    primary_set: frozenset
    depth_remaining: int
    query_id: int
    chain: tuple = ()  # origin .. sender

    def __post_init__(self):
        if self.depth_remaining < 0:
            raise ValueError("depth_remaining must be >= 0")

    @property
    def carried_ids(self) -> int:
        return len(self.primary_set) + len(self.chain)


@dataclass(frozen=True)
class ReplyMessage:
    responder: int
    for_dest: int
    path: tuple       # responder .. for_dest
    hop_count: int
    query_id: int
    chain: tuple = ()  # origin .. last forwarder

    def __post_init__(self):
        if self.hop_count != len(self.path) - 1:
            raise ValueError("hop_count must equal len(path) - 1")
        if self.path[0] != self.responder or self.path[-1] != self.for_dest:
            raise ValueError("path must run from responder to for_dest")

    @property
    def recorded_path(self) -> tuple:
        return tuple(self.chain) + tuple(self.path)

    @property
    def total_hops(self) -> int:
        return len(self.chain) + self.hop_count


@dataclass
class BackupEntry:
    dest: int
    backup_next_hop: int
    backup_hop_count: int
    recorded_path: tuple
    built_at: float
    primary_at_install: tuple = ()


@dataclass
class DbrtCounters:
    queries_sent: int = 0
    replies_received: int = 0
    stale_discards: int = 0
    failovers: int = 0
    failover_drops: int = 0
    rounds: int = 0

    def merge(self, other: "DbrtCounters") -> None:
        for k in self.__dataclass_fields__:
            setattr(self, k, getattr(self, k) + getattr(other, k))


class BackupRoutingTable:
    def __init__(self, owner: int):
        self.owner = owner
        self.entries: dict[int, BackupEntry] = {}
        # per-neighbor count of frames delivered over backup routes; recorded
        # for a reliability-weighted selection, not used for ranking
        self.reliability: dict[int, int] = {}

    def get(self, dest: int) -> BackupEntry | None:
        return self.entries.get(dest)

    def install(self, entry: BackupEntry) -> None:
        self.entries[entry.dest] = entry

    def dump_rows(self):
        return [(e.dest, e.backup_next_hop, e.backup_hop_count, e.recorded_path)
                for _, e in sorted(self.entries.items())]


def build_adjacent_list(owner: int, dest: int, neighbors, primary) -> AdjacentList:
    excluded = internal_nodes(primary)
    return AdjacentList(owner, dest, {n for n in neighbors if n not in excluded and n != owner})


def issue_queries(owner: int, dest: int, adj: AdjacentList, primary, depth: int,
                  query_id: int, cfg: LinkConfig | None = None, uids=None) -> list[Frame]:
    cfg = cfg or LinkConfig()
    uids = uids if uids is not None else itertools.count()
    msg = QueryMessage(owner, dest, frozenset(primary), depth, query_id, (owner,))
    # the origin is part of primary_set already; size counts the primary set only
    size = cfg.dbrt_size(len(msg.primary_set))
    return [Frame(FrameKind.DBRT_QUERY, owner, m, size, msg, next(uids))
            for m in sorted(adj.members)]


def path_is_disjoint(path, primary_set, dest, chain=()) -> bool:
    """True when ``path`` avoids every primary node except ``dest`` and every
    node already on the query chain."""
    for n in path:
        if n != dest and n in primary_set:
            return False
        if n in chain:
            return False
    return True


def evaluate_query(responder: int, q: QueryMessage, tables, neighbors):
    """Answer, widen, or ignore a backup query.

    Returns a ReplyMessage, a ``(targets, QueryMessage)`` pair describing the
    widened query, or None.  ``targets`` are the responder's neighbors that
    are neither on the primary path nor already on the query chain.
    """
    if responder == q.for_dest:
        path = [responder]
    else:
        path = try_trace(tables, responder, q.for_dest)
        if path is None:
            return None
    if path_is_disjoint(path, q.primary_set, q.for_dest, q.chain):
        return ReplyMessage(responder, q.for_dest, tuple(path), len(path) - 1,
                            q.query_id, tuple(q.chain))
    if q.depth_remaining > 0:
        chain = tuple(q.chain) + (responder,)
        fwd = QueryMessage(q.origin, q.for_dest, q.primary_set, q.depth_remaining - 1,
                           q.query_id, chain)
        targets = [n for n in sorted(neighbors) if n not in q.primary_set and n not in chain]
        return (targets, fwd) if targets else None
    return None


def accepts_query(node: int, q: QueryMessage) -> bool:
    """Receivers of a widened (broadcast) query skip it when they sit on the
    primary path or on the chain already."""
    return node not in q.primary_set and node not in q.chain


def backup_violations(recorded_path, primary) -> list[str]:
    """Reasons a candidate backup path is not acceptable against ``primary``."""
    problems = []
    rp = tuple(recorded_path)
    if len(rp) < 2:
        problems.append("too_short")
        return problems
    if len(set(rp)) != len(rp):
        problems.append("repeated_node")
    if primary:
        if rp[0] != primary[0] or rp[-1] != primary[-1]:
            problems.append("endpoint_mismatch")
        inner = internal_nodes(primary)
        if inner & set(rp[1:-1]):
            problems.append("not_disjoint")
        if rp[1] in inner:
            problems.append("next_hop_on_primary")
    return problems


def select_backup(owner: int, dest: int, replies, primary, now: float,
                  link_ok=None, counters: DbrtCounters | None = None) -> BackupEntry | None:
    """Pick the fewest-hop valid candidate; ties go to the lowest first hop."""
    cands = []
    for r in replies:
        rp = r.recorded_path
        if rp[0] != owner or rp[-1] != dest:
            continue
        cands.append((len(rp) - 1, rp[1], rp))
    cands.sort()
    for total, first, rp in cands:
        bad = backup_violations(rp, primary)
        if not bad and link_ok is not None:
            if not all(link_ok(a, b) for a, b in zip(rp, rp[1:])):
                bad = ["stale_link"]
        if bad:
            if counters is not None:
                counters.stale_discards += 1
            continue
        return BackupEntry(dest, first, total, rp, now, tuple(primary or ()))
    return None


def failover(owner: int, dest: int, dead_next_hop: int, backup: BackupRoutingTable,
             alive_neighbors, counters: DbrtCounters | None = None) -> int | None:
    """Next hop to use for ``dest`` right after losing ``dead_next_hop``."""
    e = backup.get(dest)
    if e is not None and e.backup_next_hop != dead_next_hop and e.backup_next_hop in alive_neighbors:
        if counters is not None:
            counters.failovers += 1
        return e.backup_next_hop
    if counters is not None:
        counters.failover_drops += 1
    return None


def backup_still_valid(entry: BackupEntry | None, primary, neighbors) -> bool:
    """Whether an installed backup can keep protecting ``primary`` as is."""
    if entry is None or entry.backup_next_hop not in neighbors:
        return False
    if primary is None:
        return True
    inner = internal_nodes(primary)
    return not inner.intersection(entry.recorded_path[1:-1])


@dataclass
class RebuildTracker:
    """Decides when a destination's backup must be recomputed.

    A round runs at once for a new destination, or when the traced primary
    path changed in a way that invalidates the current backup.  Otherwise a
    refresh happens at most once per ``interval`` and only if the owner's
    neighborhood changed since the previous round.
    """
    interval: float = 10.0
    last_round: dict = field(default_factory=dict)
    last_path: dict = field(default_factory=dict)
    last_view: dict = field(default_factory=dict)

    def due(self, dest: int, now: float, path, view_version: int = 0,
            backup_ok: bool = True) -> str | None:
        if dest not in self.last_round:
            return "new"
        if path is not None and tuple(path) != self.last_path.get(dest):
            if not backup_ok:
                return "primary_changed"
            self.last_path[dest] = tuple(path)
        if now - self.last_round[dest] >= self.interval and view_version != self.last_view.get(dest):
            return "periodic"
        return None

    def record(self, dest: int, now: float, path, view_version: int = 0) -> None:
        self.last_round[dest] = now
        self.last_path[dest] = tuple(path) if path is not None else None
        self.last_view[dest] = view_version

    def forget(self, dest: int) -> None:
        self.last_round.pop(dest, None)
        self.last_path.pop(dest, None)
        self.last_view.pop(dest, None)
