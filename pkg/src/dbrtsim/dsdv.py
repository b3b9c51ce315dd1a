"""Destination-sequenced distance-vector tables.

Sequence numbers follow the usual DSDV convention: a destination only ever
advertises even numbers for itself, and a node that loses its next hop marks
the route with the next odd number and an infinite metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

INFINITY = 16


class RouteEntry:
    __slots__ = ("dest", "next_hop", "metric", "seq", "installed_at")

    def __init__(self, dest: int, next_hop: int, metric: int, seq: int, installed_at: float = 0.0):
        self.dest = dest
        self.next_hop = next_hop
        self.metric = metric
        self.seq = seq
        self.installed_at = installed_at

    @property
    def reachable(self) -> bool:
        return self.metric < INFINITY

    def as_tuple(self):
        return (self.dest, self.next_hop, self.metric, self.seq)

    def __repr__(self):
        return "RouteEntry(dest=%d, next_hop=%d, metric=%d, seq=%d)" % self.as_tuple()


class RoutingTable:
    def __init__(self, owner: int):
        self.owner = owner
        self.own_seq = 0
        self.entries: dict[int, RouteEntry] = {owner: RouteEntry(owner, owner, 0, 0)}
        # destinations whose entry changed since the last advertisement
        self.dirty: set[int] = set()

    def __getitem__(self, dest: int) -> RouteEntry:
        return self.entries[dest]

    def __contains__(self, dest: int) -> bool:
        return dest in self.entries

    def dump_rows(self):
        return [self.entries[d].as_tuple() for d in sorted(self.entries)]


@dataclass
class UpdateMessage:
    origin: int
    routes: list = field(default_factory=list)  # (dest, metric, seq)
    full_dump: bool = False


def originate_update(table: RoutingTable, now: float, full: bool) -> UpdateMessage:
    """Build an advertisement.

    Full dumps advance the owner's sequence number by 2 and carry every entry;
    incremental updates carry the owner's entry plus whatever changed since the
    previous emission.
    """
    own = table.entries[table.owner]
    if full:
        table.own_seq += 2
        own.seq = table.own_seq
        dests = sorted(table.entries)
    else:
        dests = sorted(table.dirty | {table.owner})
    table.dirty.clear()
    ents = table.entries
    routes = [(d, ents[d].metric, ents[d].seq) for d in dests]
    return UpdateMessage(table.owner, routes, full)


def process_update(table: RoutingTable, msg: UpdateMessage, frm: int, now: float) -> set[int]:
    """Apply a neighbor's advertisement. Returns the destinations that changed."""
    owner = table.owner
    ents = table.entries
    changed = set()
    for dest, m, s in msg.routes:
        if dest == owner:
            continue
        cand = m + 1 if m + 1 < INFINITY else INFINITY
        e = ents.get(dest)
        if e is None:
            if cand >= INFINITY:
                continue
            ents[dest] = RouteEntry(dest, frm, cand, s, now)
            changed.add(dest)
        elif s > e.seq or (s == e.seq and cand < e.metric):
            e.next_hop = frm
            e.metric = cand
            e.seq = s
            e.installed_at = now
            changed.add(dest)
    if changed:
        table.dirty |= changed
    return changed


def handle_link_break(table: RoutingTable, dead: int, now: float) -> set[int]:
    changed = set()
    for e in table.entries.values():
        if e.next_hop == dead and e.dest != table.owner and e.metric < INFINITY:
            e.metric = INFINITY
            e.seq += 1
            e.installed_at = now
            changed.add(e.dest)
    if changed:
        table.dirty |= changed
    return changed


def lookup_next_hop(table: RoutingTable, dest: int) -> int | None:
    e = table.entries.get(dest)
    if e is None or e.metric >= INFINITY:
        return None
    return e.next_hop


class RouteFailure(Exception):
    reason = "route_failure"


class NoRoute(RouteFailure):
    reason = "no_route"


class RoutingLoop(RouteFailure):
    reason = "loop_detected"


def trace_primary_path(tables, src: int, dest: int) -> list[int]:
    """Follow next hops from ``src`` to ``dest`` through every node's table."""
    path = [src]
    seen = {src}
    node = src
    while node != dest:
        nh = lookup_next_hop(tables[node], dest)
        if nh is None:
            raise NoRoute(f"{node} has no route to {dest}")
        if nh in seen:
            raise RoutingLoop(f"loop at {nh} while tracing {src}->{dest}")
        path.append(nh)
        seen.add(nh)
        node = nh
    return path


def try_trace(tables, src: int, dest: int) -> list[int] | None:
    try:
        return trace_primary_path(tables, src, dest)
    except RouteFailure:
        return None
