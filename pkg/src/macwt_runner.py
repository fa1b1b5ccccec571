#!/usr/bin/env python3
"""
MAC wiretap laboratory - command-line interface for rate regions, ramp
schedules, protocol simulation and leakage audits.
Usage:
    python src/macwt_runner.py region --channel CH-BSC-EVE --out results
    python src/macwt_runner.py region --channel channel.json --sweep 10 --out results
    python src/macwt_runner.py schedule --channel CH-BSC-EVE --slots 6 --l 1 --out results
    python src/macwt_runner.py simulate --channel CH-ID --n1 2 --l 1 --slots 5 --trials 100 --seed 7
    python src/macwt_runner.py leakage --channel CH-BSC-EVE --n1 2 --slots 2 --seed 7
    python src/macwt_runner.py fixtures list
    python src/macwt_runner.py fixtures emit --out channels
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from models.channel import ChannelSpec, InputPair, dump_channel, load_channel, parse_inputs
from models.errors import InputError, InvalidConfig, MacWtError, default_budget
from models.fixtures import FIXTURES, fixture_names, get_fixture
from models.key_protocol import error_rate, plan
from models.leakage_audit import audit, report_rows
from models.rate_regions import (
    channel_terms,
    convex_closure,
    pentagons_from_terms,
    region_sweep,
    slot_schedule,
)
from utility.exporter import check_targets, write_atomic, write_csv, write_json
from utility.runner import run_trials

logger = logging.getLogger("macwt_runner")

CAPS_COLUMNS = ["region_kind", "cap1", "cap2", "cap_sum"]
VERTEX_COLUMNS = ["region_kind", "vertex", "r1", "r2"]
SWEEP_COLUMNS = ["point", "p1", "p2", "region_kind", "cap1", "cap2", "cap_sum"]
SCHEDULE_COLUMNS = ["k", "R1", "R2", "sum", "overall_R1", "overall_R2"]
SIMULATE_COLUMNS = ["slot", "realized_R1", "realized_R2", "Pe", "ci_low", "ci_high", "errors",
                    "trials"]
LEAKAGE_COLUMNS = ["l", "k", "bits", "method", "enumeration_or_samples", "epsilon_hat",
                   "leakage_rate", "entropy_bound", "bound", "within_bound", "spread"]


@dataclass(frozen=True)
class RunConfig:
    """Everything one command invocation depends on."""
    command: str
    channel: Optional[str] = None
    inputs: Optional[str] = None
    n1: Optional[int] = None
    l: int = 1
    slots: int = 1
    trials: int = 1
    seed: Optional[int] = None
    budget: Optional[int] = None
    out: str = "results"
    dump_trace: bool = False
    force: bool = False
    max_width: Optional[int] = None
    samples: int = 100_000
    sweep: Optional[int] = None
    processes: Optional[int] = None
    action: Optional[str] = None

    def __post_init__(self):
        if self.budget is not None and self.budget < 1:
            raise InvalidConfig(f"--budget must be positive, got {self.budget}")

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "RunConfig":
        fields = {name: getattr(args, name) for name in cls.__dataclass_fields__
                  if hasattr(args, name)}
        return cls(**fields)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def resolved_budget(self) -> int:
        return default_budget() if self.budget is None else self.budget


def resolve_channel(name_or_path: str) -> ChannelSpec:
    """A fixture name unless a file of that name exists."""
    if name_or_path in FIXTURES and not Path(name_or_path).exists():
        return get_fixture(name_or_path)
    return load_channel(name_or_path)


def _load(config: RunConfig):
    spec = resolve_channel(config.channel)
    inputs = parse_inputs(config.inputs, spec)
    return spec, inputs


def _caps_row(kind: str, pentagon) -> dict:
    return {"region_kind": kind, "cap1": pentagon.cap1, "cap2": pentagon.cap2,
            "cap_sum": pentagon.cap_sum}


def _vertex_rows(kind: str, vertices) -> List[dict]:
    return [{"region_kind": kind, "vertex": index, "r1": float(r1), "r2": float(r2)}
            for index, (r1, r2) in enumerate(vertices)]


def _law(p) -> str:
    return " ".join("%.12g" % value for value in p)


def cmd_region(config: RunConfig) -> List[Path]:
    spec, inputs = _load(config)
    caps_path = config.out_dir / "region_caps.csv"
    vertex_path = config.out_dir / "region_vertices.csv"
    targets = [caps_path, vertex_path]
    if config.sweep is not None:
        targets.append(config.out_dir / "region_sweep.csv")
    check_targets(targets, config.force)

    secrecy, mac = pentagons_from_terms(channel_terms(spec, inputs))
    caps = [_caps_row("secrecy", secrecy), _caps_row("mac", mac)]
    vertices = _vertex_rows("secrecy", secrecy.vertices()) + _vertex_rows("mac", mac.vertices())

    written = []
    if config.sweep is not None:
        sweep = region_sweep(spec, config.sweep)
        rows = []
        for point, (point_inputs, point_secrecy, point_mac) in enumerate(sweep):
            for kind, pentagon in (("secrecy", point_secrecy), ("mac", point_mac)):
                rows.append({"point": point, "p1": _law(point_inputs.p1),
                             "p2": _law(point_inputs.p2), **_caps_row(kind, pentagon)})
        vertices += _vertex_rows("secrecy_hull",
                                 convex_closure([s for _, s, _ in sweep]).vertices)
        vertices += _vertex_rows("mac_hull", convex_closure([m for _, _, m in sweep]).vertices)
        written.append(write_csv(targets[2], rows, SWEEP_COLUMNS, force=config.force))

    header = {"channel": spec.name or config.channel, "p1": _law(inputs.p1),
              "p2": _law(inputs.p2)}
    written.insert(0, write_csv(caps_path, caps, CAPS_COLUMNS, header, force=config.force))
    written.insert(1, write_csv(vertex_path, vertices, VERTEX_COLUMNS, header,
                                force=config.force))
    return written


def cmd_schedule(config: RunConfig) -> List[Path]:
    spec, inputs = _load(config)
    path = config.out_dir / "schedule.csv"
    check_targets([path], config.force)
    schedule = slot_schedule(spec, inputs, config.slots, config.l)
    rows = [{"k": rate.slot, "R1": rate.keyed[0], "R2": rate.keyed[1], "sum": rate.keyed_sum,
             "overall_R1": rate.overall[0], "overall_R2": rate.overall[1]}
            for rate in schedule.per_slot]
    header = {"lambda1": schedule.lambda1, "lambda2": schedule.lambda2, "lambda": schedule.lam,
              "lambda_star": schedule.lambda_star, "l": schedule.l}
    return [write_csv(path, rows, SCHEDULE_COLUMNS, header, force=config.force)]


def _plan(config: RunConfig, spec: ChannelSpec, inputs: InputPair):
    if config.n1 is None:
        raise InputError("--n1 is required")
    return plan(spec, inputs, n1=config.n1, l=config.l, num_slots=config.slots,
                seed=config.seed, budget=config.resolved_budget(), max_width=config.max_width)


def cmd_simulate(config: RunConfig) -> List[Path]:
    spec, inputs = _load(config)
    path = config.out_dir / "simulate.csv"
    trace_path = config.out_dir / "trace.json"
    check_targets([path, trace_path] if config.dump_trace else [path], config.force)
    slot_config = _plan(config, spec, inputs)

    print(f"Running {config.trials} trials of {config.slots} slots "
          f"(n1={slot_config.n1}, n2={slot_config.n2})")
    traces = run_trials(spec, inputs, slot_config, config.trials, config.processes)
    rates = error_rate(traces)
    rows = []
    for rate, record in zip(rates, traces[0].slots):
        rows.append({"slot": rate.slot, "realized_R1": record.realized_rates[0],
                     "realized_R2": record.realized_rates[1], "Pe": rate.pe,
                     "ci_low": rate.low, "ci_high": rate.high, "errors": rate.errors,
                     "trials": rate.trials})
    header = {"fingerprint": slot_config.fingerprint(), "seed": slot_config.seed,
              "deficits": len(slot_config.deficits)}
    written = [write_csv(path, rows, SIMULATE_COLUMNS, header, force=config.force)]
    if config.dump_trace:
        document = {"traces": [trace.to_dict() for trace in traces]}
        written.append(write_json(trace_path, document, force=config.force))
    return written


def cmd_leakage(config: RunConfig) -> List[Path]:
    spec, inputs = _load(config)
    path = config.out_dir / "leakage.csv"
    check_targets([path], config.force)
    slot_config = _plan(config, spec, inputs)
    reports = audit(spec, inputs, slot_config, budget=config.resolved_budget(),
                    samples=config.samples, seed=config.seed)
    rows = report_rows(reports)
    for row, report in zip(rows, reports):
        row["within_bound"] = report.within_bound
    header = {"fingerprint": slot_config.fingerprint(), "seed": slot_config.seed}
    return [write_csv(path, rows, LEAKAGE_COLUMNS, header, force=config.force)]


def cmd_fixtures(config: RunConfig) -> List[Path]:
    if config.action == "list":
        for name in fixture_names():
            print(name)
        return []
    targets = check_targets([config.out_dir / f"{name}.json" for name in fixture_names()],
                            config.force)
    return [write_atomic(target, dump_channel(get_fixture(name)), force=config.force)
            for name, target in zip(fixture_names(), targets)]


COMMANDS = {
    "region": cmd_region,
    "schedule": cmd_schedule,
    "simulate": cmd_simulate,
    "leakage": cmd_leakage,
    "fixtures": cmd_fixtures,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Two-user MAC wiretap rate and secrecy laboratory')
    parser.add_argument('--verbose', action='store_true', help='Log debug detail to stderr')
    commands = parser.add_subparsers(dest='command', required=True)

    def common(sub, stochastic=False):
        sub.add_argument('--channel', required=True,
                         help='Channel-spec JSON file or fixture name (see "fixtures list")')
        sub.add_argument('--inputs', default=None,
                         help='Input laws "p1_0,p1_1;p2_0,p2_1" or a JSON file (default: uniform)')
        sub.add_argument('--out', default='results', help='Output directory (default: results)')
        sub.add_argument('--force', action='store_true', help='Overwrite existing outputs')
        if stochastic:
            sub.add_argument('--n1', type=int, required=True, help='Wiretap block length')
            sub.add_argument('--seed', type=int, required=True, help='Root random seed')
            sub.add_argument('--budget', type=int, default=None,
                             help='Enumeration budget in joint states '
                                  '(default: MACWT_BUDGET or 2^24)')
            sub.add_argument('--max-width', dest='max_width', type=int, default=None,
                             help='Cap on every realized message width in bits')
        sub.add_argument('--l', type=int, default=1, help='Keyed length ratio n2/n1 (default: 1)')
        sub.add_argument('--slots', type=int, default=1, help='Number of slots K (default: 1)')

    region = commands.add_parser('region', help='Secrecy and MAC pentagons with vertex lists')
    common(region)
    region.add_argument('--sweep', type=int, default=None,
                        help='Also sweep input laws on a grid of this resolution')

    schedule = commands.add_parser('schedule', help='Per-slot rate ramp and lambda constants')
    common(schedule)

    simulate = commands.add_parser('simulate', help='Monte Carlo runs of the slotted scheme')
    common(simulate, stochastic=True)
    simulate.add_argument('--trials', type=int, default=100, help='Number of trials (default: 100)')
    simulate.add_argument('--processes', type=int, default=None,
                          help='Worker processes (default: CPUs - 1)')
    simulate.add_argument('--dump-trace', dest='dump_trace', action='store_true',
                          help='Also write every trace to trace.json')

    leakage = commands.add_parser('leakage', help='Leakage audit over every slot pair l <= k')
    common(leakage, stochastic=True)
    leakage.add_argument('--samples', type=int, default=100_000,
                         help='Monte Carlo samples when enumeration exceeds the budget')

    fixtures = commands.add_parser('fixtures', help='List or emit the reference channels')
    fixtures.add_argument('action', choices=['list', 'emit'])
    fixtures.add_argument('--out', default='channels', help='Output directory for emit')
    fixtures.add_argument('--force', action='store_true', help='Overwrite existing outputs')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    try:
        config = RunConfig.from_namespace(args)
        written = COMMANDS[config.command](config)
    except MacWtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_status
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return InputError.exit_status
    except json.JSONDecodeError as exc:
        print(f"error: not valid JSON ({exc})", file=sys.stderr)
        return InputError.exit_status
    for path in written:
        print(f"Results saved to: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
