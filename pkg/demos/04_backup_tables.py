"""Peek at the routing and backup tables mid-run.

Backups are disjoint from the primary path at the moment they are
installed.  Routes keep shifting afterwards, so here each entry is checked
against the current graph and the current primary: an entry that now
overlaps is stale and gets replaced on the next round for that destination.
"""

from dbrtsim import Network, override
from dbrtsim.config import ScenarioConfig
from dbrtsim.dsdv import try_trace
from dbrtsim.oracles import backup_entry_problems, oracle_disjoint_path

cfg = override(ScenarioConfig(), **{"dbrt.enabled": True, "dbrt.all_pairs": True,
                                    "mobility.model": "static", "topology.min_degree": 2,
                                    "node_count": 30, "seed": 7})
net = Network(cfg).run(60.0)
g = net.graph()

protected = stale = unprotected = 0
for nd in net.nodes:
    for dest, nh, hops, path in nd.backup.dump_rows():
        primary = try_trace(net.tables, nd.id, dest)
        problems = backup_entry_problems(nd.id, nd.backup.get(dest), primary, g)
        if problems:
            stale += 1
        else:
            protected += 1
    for dest in sorted(nd.table.entries):
        primary = try_trace(net.tables, nd.id, dest)
        if dest == nd.id or primary is None or len(primary) < 3 or nd.backup.get(dest):
            continue
        if oracle_disjoint_path(g, nd.id, dest, primary) is not None:
            unprotected += 1

print(f"{protected} backups still disjoint from the current primary, {stale} stale")
print(f"{unprotected} pairs with no backup although the graph holds a disjoint path (usually longer than the query depth reaches)")
node = net.nodes[0]
print("node 0 backups (dest, next hop, hops, recorded path):")
for row in node.backup.dump_rows()[:8]:
    print("  ", row)
