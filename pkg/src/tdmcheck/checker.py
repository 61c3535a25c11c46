"""Exhaustive explicit-state checking of the peer-exchange semantics.

A breadth-first sweep enumerates every reachable state (visited set keyed on
the kernel's canonical state encoding) and records, per state, one parent
edge - enough to rebuild a shortest action trace to any state - plus the
full edge list in compressed sparse rows, so the liveness pass can walk the
graph without re-expanding states.  The three properties are decided from
one shared sweep:

* deadlock freedom - no reachable state other than terminal success has an
  empty enabled-action set;
* reaches termination - some reachable state has the terminated flag up;
* always-eventually termination - no deadlock, and the subgraph of
  non-terminated states is acyclic.  Termination is absorbing and the state
  space is finite, so acyclicity is exactly what makes every maximal run end
  terminated; no general temporal-logic machinery is needed.

Exploration is single-threaded and deterministic: given (config, mode,
max_states) the state count, transition count, verdicts, and traces are
reproducible bit for bit.
"""

from __future__ import annotations

import time
from array import array
from dataclasses import dataclass
from typing import Optional

from tdmcheck import engine
from tdmcheck.model import (
    NO_DATA,
    ActionKind,
    CheckResult,
    Phase,
    PropertyKind,
    SystemConfig,
    Verdict,
    decode_state,
)
from tdmcheck.semantics import SemanticsMode

DEFAULT_MAX_STATES = 5_000_000


class MaxStatesExceeded(RuntimeError):
    """Exploration hit the state budget before exhausting the space."""


class InvariantViolation(AssertionError):
    """A state invariant failed during exploration (checker self-audit)."""


@dataclass
class StateGraphStats:
    states: int
    transitions: int
    max_frontier: int
    elapsed: float


def _pack_action(triple) -> int:
    kind, node, arg = triple
    return (kind << 20) | ((node + 1) << 10) | (arg + 1)


def _unpack_action(code: int):
    return (code >> 20, ((code >> 10) & 0x3FF) - 1, (code & 0x3FF) - 1)


@dataclass
class _Exploration:
    """Everything the property checks need from one BFS sweep."""

    states: int
    transitions: int
    max_frontier: int
    elapsed: float
    complete: bool
    deadlock_id: Optional[int]
    witness_id: Optional[int]  # first discovered terminated state
    parent_id: array  # state id -> parent state id (-1 at the root)
    parent_act: array  # state id -> packed action taken from the parent
    row_ptr: array  # CSR: edges of expanded state s are [row_ptr[s], row_ptr[s+1])
    edge_child: array
    edge_act: array
    term_flags: bytearray  # 1 per state id with the terminated flag up
    kernel: object

    def trace_to(self, sid: int) -> list:
        out = []
        while sid != 0:
            out.append(
                engine.action_from_triple(_unpack_action(self.parent_act[sid]))
            )
            sid = self.parent_id[sid]
        out.reverse()
        return out


def _sweep(
    config: SystemConfig,
    mode: SemanticsMode,
    max_states: int,
    kernel=None,
    check_invariants: bool = False,
) -> _Exploration:
    kernel = kernel or engine.get_kernel()
    ctx = engine.build_step_context(config, mode)
    started = time.perf_counter()
    audit = _state_auditor(config, mode, kernel, ctx) if check_invariants else None
    (
        states, transitions, max_frontier, complete,
        deadlock_id, witness_id,
        parent_id, parent_act, row_ptr, edge_child, edge_act, term_flags,
    ) = kernel.sweep(ctx, max_states, audit)

    return _Exploration(
        states=states,
        transitions=transitions,
        max_frontier=max_frontier,
        elapsed=time.perf_counter() - started,
        complete=complete,
        deadlock_id=None if deadlock_id < 0 else deadlock_id,
        witness_id=None if witness_id < 0 else witness_id,
        parent_id=parent_id,
        parent_act=parent_act,
        row_ptr=row_ptr,
        edge_child=edge_child,
        edge_act=edge_act,
        term_flags=term_flags,
        kernel=kernel,
    )


def _find_lasso(exp: _Exploration):
    """Cycle among non-terminated states, as (stem, cycle) action lists.

    The search itself runs in the kernel over the recorded edge rows; on a
    truncated sweep unexpanded frontier states simply have no outgoing
    edges, so a cycle reported there is still a real cycle.
    """
    found = exp.kernel.find_cycle(
        exp.states, exp.row_ptr, exp.edge_child, exp.edge_act, exp.term_flags
    )
    if found is None:
        return None
    stem_codes, cycle_codes = found
    stem = [engine.action_from_triple(_unpack_action(c)) for c in stem_codes]
    cycle = [engine.action_from_triple(_unpack_action(c)) for c in cycle_codes]
    return stem, cycle


def _verdict(prop, result, exp, trace=None, cycle_start=None, witness=None):
    return Verdict(
        prop=prop,
        result=result,
        trace=trace,
        cycle_start=cycle_start,
        states_explored=exp.states,
        transitions_explored=exp.transitions,
        witness=witness,
    )


def check_all(
    config: SystemConfig,
    mode: SemanticsMode = SemanticsMode.REDUCED,
    max_states: int = DEFAULT_MAX_STATES,
    kernel=None,
    check_invariants: bool = False,
    want_witness: bool = False,
):
    """Decide all three properties from one shared sweep.

    Returns ``(verdicts, stats)`` with ``verdicts`` keyed by PropertyKind.
    A definite violation found before the state budget runs out is reported
    as FAIL even on a truncated sweep; a PASS needs the full space.
    """
    exp = _sweep(config, mode, max_states, kernel, check_invariants)
    verdicts = {}

    if exp.deadlock_id is not None:
        deadlock_trace = exp.trace_to(exp.deadlock_id)
        verdicts[PropertyKind.DEADLOCK_FREE] = _verdict(
            PropertyKind.DEADLOCK_FREE, CheckResult.FAIL, exp, trace=deadlock_trace
        )
    elif exp.complete:
        verdicts[PropertyKind.DEADLOCK_FREE] = _verdict(
            PropertyKind.DEADLOCK_FREE, CheckResult.PASS, exp
        )
    else:
        verdicts[PropertyKind.DEADLOCK_FREE] = _verdict(
            PropertyKind.DEADLOCK_FREE, CheckResult.INCONCLUSIVE, exp
        )

    if exp.witness_id is not None:
        witness = exp.trace_to(exp.witness_id) if want_witness else None
        verdicts[PropertyKind.REACHES_TERMINATED] = _verdict(
            PropertyKind.REACHES_TERMINATED, CheckResult.PASS, exp, witness=witness
        )
    elif exp.complete:
        # No finite trace can witness that nothing reaches termination, so
        # this is the one failing verdict without a replayable trace.
        verdicts[PropertyKind.REACHES_TERMINATED] = _verdict(
            PropertyKind.REACHES_TERMINATED, CheckResult.FAIL, exp
        )
    else:
        verdicts[PropertyKind.REACHES_TERMINATED] = _verdict(
            PropertyKind.REACHES_TERMINATED, CheckResult.INCONCLUSIVE, exp
        )

    if exp.deadlock_id is not None:
        verdicts[PropertyKind.ALWAYS_EVENTUALLY_TERMINATED] = _verdict(
            PropertyKind.ALWAYS_EVENTUALLY_TERMINATED, CheckResult.FAIL, exp,
            trace=verdicts[PropertyKind.DEADLOCK_FREE].trace,
        )
    else:
        lasso = _find_lasso(exp)
        if lasso is not None:
            stem, cycle = lasso
            verdicts[PropertyKind.ALWAYS_EVENTUALLY_TERMINATED] = _verdict(
                PropertyKind.ALWAYS_EVENTUALLY_TERMINATED, CheckResult.FAIL,
                exp, trace=stem + cycle, cycle_start=len(stem),
            )
        elif exp.complete:
            verdicts[PropertyKind.ALWAYS_EVENTUALLY_TERMINATED] = _verdict(
                PropertyKind.ALWAYS_EVENTUALLY_TERMINATED, CheckResult.PASS, exp
            )
        else:
            verdicts[PropertyKind.ALWAYS_EVENTUALLY_TERMINATED] = _verdict(
                PropertyKind.ALWAYS_EVENTUALLY_TERMINATED,
                CheckResult.INCONCLUSIVE, exp,
            )

    stats = StateGraphStats(
        states=exp.states,
        transitions=exp.transitions,
        max_frontier=exp.max_frontier,
        elapsed=exp.elapsed,
    )
    return verdicts, stats


def check_deadlock_free(
    config, mode=SemanticsMode.REDUCED, max_states=DEFAULT_MAX_STATES, **kw
) -> Verdict:
    """No reachable state, terminal success aside, lacks a next action."""
    verdicts, _ = check_all(config, mode, max_states, **kw)
    return verdicts[PropertyKind.DEADLOCK_FREE]


def check_reaches_terminated(
    config, mode=SemanticsMode.REDUCED, max_states=DEFAULT_MAX_STATES, **kw
) -> Verdict:
    """Some execution raises the terminated flag."""
    verdicts, _ = check_all(config, mode, max_states, **kw)
    return verdicts[PropertyKind.REACHES_TERMINATED]


def check_always_eventually_terminated(
    config, mode=SemanticsMode.REDUCED, max_states=DEFAULT_MAX_STATES, **kw
) -> Verdict:
    """Every maximal execution reaches (and stays at) termination."""
    verdicts, _ = check_all(config, mode, max_states, **kw)
    return verdicts[PropertyKind.ALWAYS_EVENTUALLY_TERMINATED]


def explore(
    config, mode=SemanticsMode.REDUCED, max_states=DEFAULT_MAX_STATES, **kw
) -> StateGraphStats:
    """Reachable-set statistics; raises MaxStatesExceeded on a truncated sweep."""
    exp = _sweep(config, mode, max_states, **kw)
    if not exp.complete:
        raise MaxStatesExceeded(
            "state budget %d exhausted with frontier non-empty" % max_states
        )
    return StateGraphStats(
        states=exp.states,
        transitions=exp.transitions,
        max_frontier=exp.max_frontier,
        elapsed=exp.elapsed,
    )


def _state_auditor(config: SystemConfig, mode: SemanticsMode, kernel, ctx):
    """Per-state invariant assertions, run when exploration audits itself.

    The cross-node guarantees (a scheduled send never blocks, stashes never
    hold stale slots, rows are exactly the peers' inputs at slot finish)
    hold only on validator-clean schedules without dead peers, so they are
    skipped when the config does not qualify.
    """
    from tdmcheck import topology

    n, k = config.no_nodes, config.no_time_slots
    cap = config.mailbox_capacity
    clean = not topology.validate_config(config)  # no errors and no warnings

    def fail(msg, key):
        raise InvariantViolation("%s in state %r" % (msg, key))

    def audit(key, succ):
        gs = decode_state(kernel.key_to_tuple(key, ctx))
        if gs.terminated and any(nd.phase is not Phase.DONE for nd in gs.nodes):
            fail("terminated with a node not done", key)
        for i, nd in enumerate(gs.nodes):
            if nd.appts > k:
                fail("node %d overran the frame" % i, key)
            if (nd.phase is Phase.DONE) != (nd.appts == k):
                fail("node %d done-phase/appts mismatch" % i, key)
            if nd.phase in (Phase.SLOT_START, Phase.SLOT_FINISH, Phase.DONE):
                if nd.time_slot != nd.appts:
                    fail("node %d slot counter out of lockstep" % i, key)
            if len(gs.mailboxes[i]) > cap:
                fail("mailbox %d over capacity" % i, key)
            if len(nd.stash) > cap:
                fail("stash %d over capacity" % i, key)
            if not clean:
                continue
            if any(m.slot < nd.time_slot for m in nd.stash):
                fail("node %d stashed a stale slot" % i, key)
            peers = config.schedule.peers(i, nd.time_slot) if nd.appts < k else ()
            if nd.phase is Phase.SENDING and nd.peer_idx < len(peers):
                target = peers[nd.peer_idx]
                if len(gs.mailboxes[target]) >= cap:
                    fail("node %d's scheduled send is blocked" % i, key)
        if clean:
            for triple, _child in succ:
                kind, i, _arg = triple
                if kind != int(ActionKind.FINISH_SLOT) or config.idata[i] == NO_DATA:
                    continue
                nd = gs.nodes[i]
                peers = config.schedule.peers(i, nd.time_slot)
                got = nd.odata_row[: len(peers)]
                want = tuple(config.idata[q] for q in peers)
                if got != want:
                    fail(
                        "node %d finishing slot %d holds %r, wanted %r"
                        % (i, nd.time_slot, got, want),
                        key,
                    )

    return audit
