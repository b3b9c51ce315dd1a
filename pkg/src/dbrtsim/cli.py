"""Command line front end.

Exit codes: 0 success, 1 configuration error, 2 invariant violation,
3 internal error.  Output goes under ``--out``, else ``$DBRTSIM_OUTPUT_DIR``,
else ``./out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import (BACKUP_COLUMNS, ROUTE_COLUMNS, REPORT_COLUMNS, SweepSpec, dump_tables,
                          output_dir, run_scenario, sweep, verify, write_csv, write_sweep)

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_INTERNAL = 0, 1, 2, 3


def _csv_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbrtsim", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="scenario file (flat 'section.key = value' lines)")
        sp.add_argument("--out", help="output directory")
        return sp

    r = add("run", "run one scenario and write report and trace CSVs")
    r.add_argument("--events", action="store_true", help="also write the dispatched-event log")

    s = add("sweep", "A/B sweep over node count or pause time")
    s.add_argument("--var", required=True, choices=["nodes", "pause"])
    s.add_argument("--values", required=True, help="comma separated values")
    s.add_argument("--variants", default="dsdv,dbrt")
    s.add_argument("--seeds", type=int, default=5, help="number of seeds, counted up from the config seed")
    s.add_argument("--workers", type=int, default=1)

    add("verify", "run with every invariant monitor armed")

    d = add("dump-tables", "routing and backup tables at a given time")
    d.add_argument("--at", type=float, required=True, help="simulated time in seconds")
    return p


def _out(args) -> Path:
    return Path(args.out) if args.out else output_dir()


def cmd_run(args, cfg) -> int:
    out = _out(args)
    res = run_scenario(cfg, out, record_events=args.events)
    r = res.report
    print(f"{cfg.variant}: sent {r.sent} delivered {r.delivered} "
          f"ratio {r.delivery_ratio:.4f} delay {r.avg_delay:.4f}s "
          f"control {r.control_overhead} load {r.traffic_load:.2f}/s -> {out}")
    return EXIT_OK


def cmd_sweep(args, cfg) -> int:
    try:
        values = [float(v) for v in _csv_list(args.values)]
        if args.seeds < 1:
            raise ValueError("--seeds must be >= 1")
        spec = SweepSpec(args.var, tuple(values), tuple(_csv_list(args.variants)),
                         tuple(range(cfg.seed, cfg.seed + args.seeds)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows = sweep(spec, cfg, workers=args.workers)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sweep_{args.var}.csv"
    write_sweep(rows, path)
    print(f"{len(rows)} rows ({', '.join(REPORT_COLUMNS[:4])} keyed) -> {path}")
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    rep = verify(cfg)
    for line in rep.lines():
        print(line)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    rows = [(name, "pass" if r.passed else "fail", r.checks, len(r.counterexamples), r.skipped,
             "; ".join(map(str, r.counterexamples[:20])))
            for name, r in rep.results.items()]
    write_csv(out / "verify.csv", ["invariant", "status", "checks", "violations", "skipped",
                                   "counterexamples"], rows)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_dump(args, cfg) -> int:
    try:
        routes, backups = dump_tables(cfg, args.at)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "routes.csv", ROUTE_COLUMNS, routes)
    write_csv(out / "backups.csv", BACKUP_COLUMNS, backups)
    print(f"{len(routes)} route rows, {len(backups)} backup rows at t={args.at} -> {out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "dump-tables": cmd_dump}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
