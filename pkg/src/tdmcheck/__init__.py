"""Verifier and simulator for slot-scheduled (TDM) peer-exchange protocols.

The package models a system of nodes that, in each numbered time slot,
exchange data with the peers a schedule assigns them, over bounded FIFO
mailboxes.  It ships an exhaustive explicit-state checker for deadlock
freedom, reachability of termination, and always-eventually termination; a
seeded random-interleaving simulator with a delivery oracle; generators and
a file format for per-slot communication graphs; and a CLI tying it all
together.
"""

from tdmcheck.model import (
    Action,
    ActionKind,
    CheckResult,
    GlobalState,
    IllegalAction,
    InvalidArg,
    InvalidConfig,
    Message,
    NodeState,
    ParseError,
    PeerSchedule,
    Phase,
    PreconditionViolated,
    PropertyKind,
    SystemConfig,
    Verdict,
    decode_state,
    encode_state,
    initial_state,
    make_config,
)
from tdmcheck.semantics import (
    SemanticsMode,
    apply_action,
    enabled_actions,
    is_key_in_map,
    is_terminal_success,
    normalize,
    replay_trace,
)
from tdmcheck.topology import (
    gen_bus,
    gen_clique,
    gen_ring,
    parse_schedule,
    serialize_schedule,
    validate,
    validate_config,
)
from tdmcheck.checker import (
    StateGraphStats,
    check_all,
    check_always_eventually_terminated,
    check_deadlock_free,
    check_reaches_terminated,
    explore,
)
from tdmcheck.simulator import RunOutcome, RunResult, check_delivery, run_random

__version__ = "0.1.0"
