#!/usr/bin/env python3
"""Benchmark the compiled exploration kernel against the interpreted one.

Both variants come from the same source (tdmcheck/_stepcore.py); this script
loads them side by side and times a full exhaustive sweep on the same
fixture, reporting states per second and the speedup.

    python3 benchmarks/bench_kernel.py
    python3 benchmarks/bench_kernel.py --topology clique --nodes 4 --slots 1
"""

import argparse
import sys
import time

from tdmcheck import engine, gen_bus, gen_clique, gen_ring, make_config
from tdmcheck.checker import explore
from tdmcheck.semantics import SemanticsMode

GENERATORS = {"clique": gen_clique, "ring": gen_ring, "bus": gen_bus}


def time_kernel(label, kernel, config, mode, repeats):
    best = None
    stats = None
    for _ in range(repeats):
        start = time.perf_counter()
        stats = explore(config, mode, kernel=kernel)
        elapsed = time.perf_counter() - start
        best = elapsed if best is None else min(best, elapsed)
    rate = stats.states / best if best else float("inf")
    print(
        "%-12s %8d states %9d transitions %8.3fs %10.0f states/s"
        % (label, stats.states, stats.transitions, best, rate)
    )
    return best, stats


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--topology", choices=sorted(GENERATORS), default="clique")
    parser.add_argument("--nodes", type=int, default=3)
    parser.add_argument("--slots", type=int, default=2)
    parser.add_argument("--mode", choices=("reduced", "faithful"), default="reduced")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    schedule = GENERATORS[args.topology](args.nodes, args.slots)
    config = make_config(schedule, [10 * (i + 1) for i in range(args.nodes)])
    mode = (
        SemanticsMode.REDUCED if args.mode == "reduced" else SemanticsMode.FAITHFUL
    )

    info = engine.kernel_info()
    print(
        "fixture: %s %dx%d, %s mode; default kernel compiled=%s"
        % (args.topology, args.nodes, args.slots, args.mode, info["compiled"])
    )

    pure = engine.load_pure_kernel()
    t_pure, s_pure = time_kernel("interpreted", pure, config, mode, args.repeats)

    if not engine.get_kernel().COMPILED:
        print("compiled kernel not built (pip install -e . compiles it); "
              "nothing to compare")
        return 0

    t_comp, s_comp = time_kernel(
        "compiled", engine.get_kernel(), config, mode, args.repeats
    )
    assert (s_pure.states, s_pure.transitions) == (s_comp.states, s_comp.transitions)
    print("speedup: %.1fx" % (t_pure / t_comp))
    return 0


if __name__ == "__main__":
    sys.exit(main())
