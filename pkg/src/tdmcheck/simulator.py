"""Seeded random-interleaving runs with a data-delivery oracle.

The simulator is a strict client of the protocol semantics: every step it
asks :func:`tdmcheck.semantics.enabled_actions` for the legal moves and
picks one uniformly with a seeded generator, then applies it through
:func:`tdmcheck.semantics.apply_action`.  It never reimplements a transition.

The generator is Python's :class:`random.Random` (Mersenne Twister,
MT19937) consumed only through ``randrange``; identical (config, mode,
seed) therefore reproduce identical traces across machines and runs, which
the trace-replay and CLI byte-identity checks rely on.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Optional

from tdmcheck.model import (
    NO_DATA,
    ActionKind,
    GlobalState,
    PreconditionViolated,
    SystemConfig,
    initial_state,
)
from tdmcheck.semantics import (
    SemanticsMode,
    apply_action,
    enabled_actions,
    is_terminal_success,
    replay_trace,
)


class RunOutcome(enum.Enum):
    TERMINATED = "terminated"
    DEADLOCKED = "deadlocked"
    STEP_LIMIT = "step-limit"


@dataclass
class RunResult:
    outcome: RunOutcome
    trace: list  # of Action
    final_state: GlobalState
    steps: int
    seed: int
    mode: SemanticsMode


@dataclass(frozen=True)
class DeliveryViolation:
    node: int
    slot: int
    position: int
    expected: int
    actual: int

    def __str__(self):
        return (
            "node %d slot %d position %d: stored %d, peers' input was %d"
            % (self.node, self.slot, self.position, self.actual, self.expected)
        )


def default_max_steps(config: SystemConfig) -> int:
    """Ten times a generous per-run action bound.

    One node needs at most 2*(nodes-1) shared steps plus a handful of local
    ones per slot, so nodes * slots * (2*nodes + 6) over-counts any run;
    hitting ten times that on a fixture the checker passed would mean the
    simulator and checker disagree, which run_random flags as STEP_LIMIT.
    """
    n, k = config.no_nodes, config.no_time_slots
    return 10 * (n * k * (2 * n + 6))


def run_random(
    config: SystemConfig,
    mode: SemanticsMode = SemanticsMode.REDUCED,
    seed: int = 0,
    max_steps: Optional[int] = None,
    allow_invalid: bool = False,
) -> RunResult:
    """One interleaving sampled uniformly at each step from the enabled set."""
    if max_steps is None:
        max_steps = default_max_steps(config)
    rng = random.Random(seed)
    state = initial_state(config, allow_invalid=allow_invalid)
    trace = []
    outcome = RunOutcome.STEP_LIMIT
    for _ in range(max_steps):
        actions = enabled_actions(state, config, mode)
        if not actions:
            outcome = (
                RunOutcome.TERMINATED
                if is_terminal_success(state)
                else RunOutcome.DEADLOCKED
            )
            break
        action = actions[rng.randrange(len(actions))]
        state = apply_action(state, action, config, mode)
        trace.append(action)
    return RunResult(
        outcome=outcome,
        trace=trace,
        final_state=state,
        steps=len(trace),
        seed=seed,
        mode=mode,
    )


def check_delivery(result: RunResult, config: SystemConfig) -> list:
    """Replay a terminated run and audit every slot boundary.

    At each finish_slot(i) the node's received-data row must hold exactly
    its peers' input values for that slot, in peer-list (ascending) order.
    Returns the violations found; an empty list means the run delivered
    correctly.  Nodes with nothing to send skip the exchange and are not
    audited.
    """
    if result.outcome is not RunOutcome.TERMINATED:
        raise PreconditionViolated(
            "delivery is only defined for terminated runs, got %s"
            % result.outcome.value
        )
    violations = []

    def on_state(step, action, before, after):
        if action.kind is not ActionKind.FINISH_SLOT:
            return
        i = action.node
        if config.idata[i] == NO_DATA:
            return
        node = before.nodes[i]
        slot = node.time_slot
        for j, q in enumerate(config.schedule.peers(i, slot)):
            expected = config.idata[q]
            actual = node.odata_row[j]
            if actual != expected:
                violations.append(
                    DeliveryViolation(i, slot, j, expected, actual)
                )

    final = replay_trace(
        config, result.trace, result.mode, allow_invalid=True, on_state=on_state
    )
    if final != result.final_state:
        raise PreconditionViolated("trace does not replay to its final state")
    return violations
