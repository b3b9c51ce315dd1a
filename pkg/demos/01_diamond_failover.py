"""Four nodes in a diamond: S reaches D through A or B.

Kill whichever relay carries the flow at t=100 s and compare what S does
with and without a backup table.
"""

from dbrtsim import override, verify
from dbrtsim.config import ScenarioConfig, format_positions
from dbrtsim.link import FrameKind

# S=0, A=1, B=2, D=3. A and B cannot hear each other, S cannot hear D.
points = [(100.0, 400.0), (250.0, 250.0), (250.0, 560.0), (400.0, 400.0)]

base = override(ScenarioConfig(), **{
    "node_count": 4,
    "duration": 200.0,
    "mobility.model": "static",
    "topology.positions": format_positions(points),
    "traffic.pairs": "0>3",
    "traffic.flows": 1,
    "failure.events": "flow:0@100",
})

for enabled in (False, True):
    rep = verify(override(base, **{"dbrt.enabled": enabled}))
    net = rep.run.net
    r = rep.run.report
    print(f"--- {r.variant}: invariants {'all pass' if rep.passed else 'FAILED'}")
    print(f"killed: {net.failures}")
    for line in rep.notes:
        print(" ", line)

    # the first few DATA frames S sends after the relay died
    t_fail = net.failures[0][0]
    after = [row for row in net.frame_log
             if row[2] == int(FrameKind.DATA) and row[3] == 0 and row[0] >= t_fail][:4]
    for t, uid, kind, src, dst, size, outcome, pid, wait in after:
        print(f"  t={t:8.3f}  pkt {pid:3d} -> {dst}  waited {wait * 1000:7.1f} ms")
    print(f"  delivered {r.delivered}/{r.sent}, mean delay {r.avg_delay * 1000:.2f} ms")
