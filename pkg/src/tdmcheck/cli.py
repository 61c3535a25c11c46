"""Command-line front end.

Three subcommands: ``gen`` writes schedule files for the stock topologies,
``verify`` runs all three correctness checks on a schedule file, and
``simulate`` runs seeded random interleavings (or replays a trace file).
Output meant for CI is single-line key=value records (RESULT, RUN, SIM,
REPLAY); exit codes are the only success/failure channel:

    0  all checks passed / all runs terminated and delivered
    1  a property failed / a run deadlocked or misdelivered
    2  usage, parse, or validation error
    3  verification inconclusive (state budget exhausted)
"""

from __future__ import annotations

import argparse
import sys

from tdmcheck import checker, simulator, topology, traces
from tdmcheck.model import (
    CheckResult,
    IllegalAction,
    InvalidArg,
    InvalidConfig,
    ParseError,
    PropertyKind,
    make_config,
)
from tdmcheck.semantics import SemanticsMode, replay_trace
from tdmcheck.simulator import RunOutcome

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

_GENERATORS = {
    "clique": topology.gen_clique,
    "ring": topology.gen_ring,
    "bus": topology.gen_bus,
}


def _parse_idata(spec: str, n: int):
    if spec == "seq":
        return [i + 1 for i in range(n)]
    try:
        values = [int(tok) for tok in spec.split(",")]
    except ValueError:
        raise InvalidArg("idata must be 'seq' or comma-separated integers")
    return values


def _mode(name: str) -> SemanticsMode:
    return SemanticsMode.REDUCED if name == "reduced" else SemanticsMode.FAITHFUL


def _load_config(path: str, allow_invalid: bool):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError("cannot read %s: %s" % (path, exc))
    return topology.parse_schedule(text, allow_invalid=allow_invalid)


def cmd_gen(args) -> int:
    gen = _GENERATORS[args.topology]
    try:
        schedule = gen(args.nodes, args.slots)
        idata = _parse_idata(args.idata, args.nodes)
        config = make_config(schedule, idata, args.capacity)
    except (InvalidArg, InvalidConfig) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    text = topology.serialize_schedule(config)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        config = _load_config(args.file, args.allow_invalid)
    except ParseError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except InvalidConfig as exc:
        print("error: invalid schedule: %s" % exc, file=sys.stderr)
        print("(use --allow-invalid to check it anyway)", file=sys.stderr)
        return EXIT_USAGE
    for v in topology.validate_config(config):
        print("warning: %s" % v, file=sys.stderr)

    mode = _mode(args.mode)
    verdicts, stats = checker.check_all(config, mode, args.max_states)
    line = (
        "RESULT deadlockfree=%s reaches=%s always_eventually=%s "
        "states=%d transitions=%d mode=%s"
        % (
            verdicts[PropertyKind.DEADLOCK_FREE].result.value,
            verdicts[PropertyKind.REACHES_TERMINATED].result.value,
            verdicts[PropertyKind.ALWAYS_EVENTUALLY_TERMINATED].result.value,
            stats.states,
            stats.transitions,
            args.mode,
        )
    )
    print(line)

    failing = [v for v in verdicts.values() if v.result is CheckResult.FAIL]
    if args.trace_out:
        with_trace = [v for v in failing if v.trace is not None]
        if with_trace:
            verdict = with_trace[0]
            meta = {"property": verdict.prop.value}
            if verdict.cycle_start is not None:
                meta["cycle_start"] = verdict.cycle_start
            text = traces.format_trace(verdict.trace, config, mode, meta)
            with open(args.trace_out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print("counterexample written to %s" % args.trace_out, file=sys.stderr)

    if failing:
        return EXIT_FAIL
    if any(v.result is CheckResult.INCONCLUSIVE for v in verdicts.values()):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _replay(args, config, mode) -> int:
    with open(args.replay, "r", encoding="utf-8") as fh:
        actions, meta = traces.parse_trace(fh.read())
    mode = traces.trace_mode(meta, mode)
    try:
        final = replay_trace(config, actions, mode, allow_invalid=True)
    except IllegalAction as exc:
        print("REPLAY steps=%d outcome=illegal delivery=-" % len(actions))
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_FAIL
    delivery = "-"
    if final.terminated:
        result = simulator.RunResult(
            outcome=RunOutcome.TERMINATED, trace=actions, final_state=final,
            steps=len(actions), seed=-1, mode=mode,
        )
        violations = simulator.check_delivery(result, config)
        delivery = "ok" if not violations else "fail"
        for v in violations:
            print("delivery violation: %s" % v, file=sys.stderr)
    outcome = "terminated" if final.terminated else "incomplete"
    print("REPLAY steps=%d outcome=%s delivery=%s" % (len(actions), outcome, delivery))
    return EXIT_OK if final.terminated and delivery == "ok" else EXIT_FAIL


def cmd_simulate(args) -> int:
    try:
        config = _load_config(args.file, args.allow_invalid)
    except ParseError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except InvalidConfig as exc:
        print("error: invalid schedule: %s" % exc, file=sys.stderr)
        print("(use --allow-invalid to simulate it anyway)", file=sys.stderr)
        return EXIT_USAGE
    mode = _mode(args.mode)

    if args.replay:
        return _replay(args, config, mode)

    terminated = 0
    delivered = 0
    for run_idx in range(args.runs):
        seed = args.seed + run_idx
        result = simulator.run_random(
            config, mode, seed, allow_invalid=args.allow_invalid
        )
        delivery = "-"
        if result.outcome is RunOutcome.TERMINATED:
            terminated += 1
            violations = simulator.check_delivery(result, config)
            delivery = "ok" if not violations else "fail"
            if not violations:
                delivered += 1
            for v in violations:
                print("delivery violation: %s" % v, file=sys.stderr)
        print(
            "RUN seed=%d outcome=%s steps=%d delivery=%s"
            % (seed, result.outcome.value, result.steps, delivery)
        )
        if args.trace_out and run_idx == 0:
            text = traces.format_trace(
                result.trace, config, mode, {"seed": seed}
            )
            with open(args.trace_out, "w", encoding="utf-8") as fh:
                fh.write(text)
    print(
        "SIM runs=%d terminated=%d delivery_ok=%d"
        % (args.runs, terminated, delivered)
    )
    return EXIT_OK if terminated == args.runs == delivered else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdmcheck",
        description="verify and simulate slot-scheduled peer-exchange protocols",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="write a schedule file")
    p_gen.add_argument("--topology", choices=sorted(_GENERATORS), required=True)
    p_gen.add_argument("--nodes", type=int, required=True)
    p_gen.add_argument("--slots", type=int, required=True)
    p_gen.add_argument(
        "--idata", default="seq",
        help="'seq' (node i gets i+1) or comma-separated values",
    )
    p_gen.add_argument("--capacity", type=int, default=None)
    p_gen.add_argument("--out", default="-", help="output path, '-' for stdout")
    p_gen.set_defaults(func=cmd_gen)

    p_ver = sub.add_parser("verify", help="run all three correctness checks")
    p_ver.add_argument("file")
    p_ver.add_argument("--mode", choices=("reduced", "faithful"), default="reduced")
    p_ver.add_argument(
        "--max-states", type=int, default=checker.DEFAULT_MAX_STATES
    )
    p_ver.add_argument("--allow-invalid", action="store_true")
    p_ver.add_argument("--trace-out", default=None)
    p_ver.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="seeded random runs or trace replay")
    p_sim.add_argument("file")
    p_sim.add_argument("--runs", type=int, default=1)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--mode", choices=("reduced", "faithful"), default="reduced")
    p_sim.add_argument("--allow-invalid", action="store_true")
    p_sim.add_argument("--trace-out", default=None)
    p_sim.add_argument("--replay", default=None, help="replay a trace file")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not args.replay:
        if args.runs < 1:
            parser.error("--runs must be >= 1")
        if args.trace_out and args.runs != 1:
            parser.error("--trace-out requires --runs 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
