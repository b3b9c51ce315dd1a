"""Traffic load against pause time for a 50-node network.

Longer pauses mean a calmer topology, so both DSDV and the backup table
spend fewer transmissions keeping up.  Three seeds per point keep this
under a few minutes; the acceptance suite uses ten.
"""

import statistics
import sys

from dbrtsim import ScenarioConfig, SweepSpec, sweep
from dbrtsim.experiments import REPORT_COLUMNS, write_sweep

workers = int(sys.argv[1]) if len(sys.argv) > 1 else 1
spec = SweepSpec("pause", (10, 30, 60, 90), ("dsdv", "dbrt"), (1, 2, 3))
rows = sweep(spec, ScenarioConfig(), workers=workers)
write_sweep(rows, "pause_sweep.csv")

col = {name: i for i, name in enumerate(REPORT_COLUMNS)}
print(f"{'pause':>6} {'variant':>8} {'load/s':>8} {'control':>8} {'PDR':>6}")
for pause in spec.values:
    for variant in spec.variants:
        sel = [r for r in rows if r[col["pause_time"]] == pause and r[col["variant"]] == variant]
        load = statistics.median(r[col["traffic_load"]] for r in sel)
        ctrl = statistics.median(r[col["control_overhead"]] for r in sel)
        pdr = statistics.median(r[col["delivery_ratio"]] for r in sel)
        print(f"{pause:6g} {variant:>8} {load:8.1f} {ctrl:8.0f} {pdr:6.3f}")
