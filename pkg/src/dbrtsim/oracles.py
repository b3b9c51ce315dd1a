"""Graph oracles used by the verification monitors and the test-suite.

These work on plain adjacency mappings ``{node: set(neighbors)}`` and share
no code with the routing agents they check.
"""

from __future__ import annotations

from collections import deque


def bfs_distances(graph, src) -> dict:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in graph.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def shortest_path(graph, src, dest, banned=frozenset()):
    """Shortest path avoiding ``banned`` nodes (endpoints are never banned).

    Ties are resolved towards lower node ids so the answer is reproducible.
    """
    if src == dest:
        return [src]
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in sorted(graph.get(u, ())):
            if v in prev or (v in banned and v != dest):
                continue
            prev[v] = u
            if v == dest:
                path = [v]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            queue.append(v)
    return None


def oracle_disjoint_path(graph, src, dest, primary):
    """Shortest ``src -> dest`` path sharing no internal node with ``primary``."""
    return shortest_path(graph, src, dest, banned=frozenset(primary[1:-1]))


def is_graph_path(graph, path) -> bool:
    return all(b in graph.get(a, ()) for a, b in zip(path, path[1:]))


def connected(graph) -> bool:
    if not graph:
        return True
    start = next(iter(graph))
    return len(bfs_distances(graph, start)) == len(graph)


def backup_entry_problems(owner, entry, primary, graph=None) -> list[str]:
    """Invariant check for one installed backup entry.

    ``primary`` is the primary path traced at install time (may be None when
    the primary had already collapsed); ``graph`` is the connectivity at
    install time when soundness should be checked.
    """
    out = []
    rp = list(entry.recorded_path)
    if not rp or rp[0] != owner or rp[-1] != entry.dest:
        out.append("endpoints")
    if len(set(rp)) != len(rp):
        out.append("loop")
    if len(rp) < 2 or rp[1] != entry.backup_next_hop:
        out.append("next_hop_mismatch")
    if entry.backup_hop_count != len(rp) - 1:
        out.append("hop_count_mismatch")
    if primary:
        inner = set(primary[1:-1])
        if inner.intersection(rp[1:-1]):
            out.append("disjointness")
        if entry.backup_next_hop in inner:
            out.append("next_hop_exclusion")
    if graph is not None and not is_graph_path(graph, rp):
        out.append("soundness")
    return out
