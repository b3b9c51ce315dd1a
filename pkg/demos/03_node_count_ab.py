"""Delay, loss, throughput and overhead as the network grows.

Same seed means same placement, motion and flows for both variants, so
every difference in a row pair comes from routing alone.
"""

import statistics
import sys

from dbrtsim import ScenarioConfig, SweepSpec, override, sweep
from dbrtsim.experiments import REPORT_COLUMNS, write_sweep

workers = int(sys.argv[1]) if len(sys.argv) > 1 else 1
base = override(ScenarioConfig(), **{"mobility.pause_time": 10.0})
spec = SweepSpec("nodes", (10, 20, 30, 40, 50), ("dsdv", "dbrt"), (1, 2, 3))
rows = sweep(spec, base, workers=workers)
write_sweep(rows, "node_sweep.csv")

col = {name: i for i, name in enumerate(REPORT_COLUMNS)}
metrics = ("avg_delay", "lost", "throughput", "control_overhead")
print("nodes variant " + " ".join(f"{m:>16}" for m in metrics))
for n in spec.values:
    for variant in spec.variants:
        sel = [r for r in rows if r[col["node_count"]] == n and r[col["variant"]] == variant]
        meds = [statistics.median(r[col[m]] for r in sel) for m in metrics]
        print(f"{n:5g} {variant:>7} " + " ".join(f"{v:16.4f}" for v in meds))
