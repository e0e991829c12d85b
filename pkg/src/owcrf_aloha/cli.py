"""Command line entry point (``owcrf-aloha``).

Exit codes: 0 success, 1 usage or parse error, 2 configuration invalid,
3 a statistical validation check failed.
"""

import argparse
import dataclasses
import json
import logging
import sys

from ._validation import ConfigError
from .engine import iter_slot_traces, run_simulation
from .scenario import ScenarioParseError, parse_scenario
from .sweep import (CapExceededError, MissingAxisError, build_adaptive_m_table,
                    parse_sweep_spec, read_results, rows_to_csv, rows_to_json, run_sweep)
from .validate import run_validation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_STATS = 3

log = logging.getLogger("owcrf_aloha")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _validation_ok(seed):
    results = run_validation(seed)
    for r in results:
        print(r.line(), file=sys.stderr)
    return all(r.passed for r in results)


def cmd_simulate(args):
    scenario = parse_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, master_seed=args.seed)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for tr in iter_slot_traces(scenario, 0, num_slots=min(args.trace_slots,
                                                                  scenario.num_owc_slots)):
                fh.write(tr.to_json() + "\n")
    stats = run_simulation(scenario)
    _write(json.dumps(stats.as_dict(), indent=1) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args):
    spec = parse_sweep_spec(args.spec)
    fmt = args.format or spec.output_format
    if args.validate or spec.validate:
        if not _validation_ok(0 if args.seed is None else args.seed):
            return EXIT_STATS
    rows = run_sweep(spec, workers=args.workers, seed=args.seed,
                     progress=lambda r: log.info("point done: %s", r))
    _write(rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows), args.out)
    return EXIT_OK


def cmd_validate(args):
    return EXIT_OK if _validation_ok(args.seed) else EXIT_STATS


def cmd_adaptive_m(args):
    table = build_adaptive_m_table(read_results(args.results))
    _write(table.to_csv(), args.out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="owcrf-aloha", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one scenario and print ThroughputStats as JSON")
    s.add_argument("scenario")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--trace", help="write per-slot traces (NDJSON) of replication 0 here")
    s.add_argument("--trace-slots", type=int, default=1000)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("spec")
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.add_argument("--validate", action="store_true",
                   help="run the oracle suite first; exit 3 if any check fails")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("validate", help="run the statistical oracle suite")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("adaptive-m", help="best M per (SF, p_a) from sweep results")
    s.add_argument("results")
    s.add_argument("--out")
    s.set_defaults(func=cmd_adaptive_m)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ScenarioParseError, MissingAxisError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapExceededError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
