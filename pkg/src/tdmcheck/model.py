"""Core value types for the slot-scheduled peer-exchange model.

Everything here is an immutable value: node states, global states, actions,
verdicts.  The transition semantics live in :mod:`tdmcheck.semantics`; the
schedule generators and the file format live in :mod:`tdmcheck.topology`.

Conventions carried throughout the package:

* peer lists are sentinel-terminated with ``-1`` (``SENTINEL``),
* an input value of ``-1`` (``NO_DATA``) means "this node has nothing to
  send this frame" and makes the node skip its send/receive work entirely,
* received-data cells start at ``-2`` (``UNSET``), a marker outside the
  payload domain, so a read-before-write is detectable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

SENTINEL = -1  # end-of-peer-list marker in schedule tables
NO_DATA = -1  # input value for "nothing to send"
UNSET = -2  # never-written cell in a node's received-data row


class InvalidArg(ValueError):
    """A generator or API argument is out of its allowed domain."""


class InvalidConfig(ValueError):
    """A system configuration failed validation.

    Carries the validator findings and, when available, the parsed config so
    callers that explicitly allow invalid schedules can still run them.
    """

    def __init__(self, message, violations=(), config=None):
        super().__init__(message)
        self.violations = list(violations)
        self.config = config


class ParseError(ValueError):
    """Malformed schedule or trace text. ``line`` is 1-based, or None at EOF."""

    def __init__(self, message, line=None):
        where = "end of input" if line is None else "line %d" % line
        super().__init__("%s: %s" % (where, message))
        self.line = line


class IllegalAction(RuntimeError):
    """An action was applied in a state where it is not enabled."""


class PreconditionViolated(RuntimeError):
    """An operation was called outside its stated precondition."""


class Phase(enum.IntEnum):
    """Control location of one node within its current time slot."""

    SLOT_START = 0
    SENDING = 1
    SCAN_BUFFER = 2
    AWAIT_MAILBOX = 3
    STORE_DATA = 4
    SLOT_FINISH = 5
    DONE = 6


class ActionKind(enum.IntEnum):
    """Alphabet of scheduler-visible steps. Enum order is the sort rank."""

    SEND = 0
    RECEIVE = 1
    LOCAL_SCAN = 2
    LOCAL_STEP = 3
    FINISH_SLOT = 4
    SET_TERMINATED = 5


class PropertyKind(enum.Enum):
    DEADLOCK_FREE = "deadlockfree"
    REACHES_TERMINATED = "reaches"
    ALWAYS_EVENTUALLY_TERMINATED = "always_eventually"


class CheckResult(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, order=True)
class Message:
    """One in-flight datum: (slot it was sent in, sender id, payload)."""

    slot: int
    sender: int
    payload: int

    def __post_init__(self):
        if self.slot < 0:
            raise InvalidArg("message slot must be >= 0, got %d" % self.slot)
        if self.sender < 0:
            raise InvalidArg("message sender must be >= 0, got %d" % self.sender)
        if self.payload == NO_DATA:
            raise InvalidArg("payload -1 is reserved and never sent")


@dataclass(frozen=True)
class PeerSchedule:
    """Per-node, per-slot peer lists as a sentinel-terminated 3D table.

    ``peer_ids[i][j][k]`` is the j-th peer of node ``i`` in slot ``k``, or
    ``-1`` from the first unused position onward.  The position axis has
    ``no_nodes`` entries so a full list of ``no_nodes - 1`` peers still has
    room for its sentinel.
    """

    no_nodes: int
    no_time_slots: int
    peer_ids: tuple  # [node][position][slot] -> peer id or SENTINEL

    def peers(self, node: int, slot: int) -> tuple:
        """Peer ids of ``node`` in ``slot``: the prefix before the sentinel."""
        out = []
        for j in range(self.no_nodes):
            p = self.peer_ids[node][j][slot]
            if p == SENTINEL:
                break
            out.append(p)
        return tuple(out)

    @classmethod
    def from_lists(cls, no_nodes, no_time_slots, lists) -> "PeerSchedule":
        """Build the canonical table from ``lists[node][slot] -> iterable``.

        Lists are stored in the given order (callers sort ascending for the
        canonical form) and padded with sentinels.
        """
        if no_nodes < 1:
            raise InvalidArg("node count must be >= 1, got %d" % no_nodes)
        if no_time_slots < 1:
            raise InvalidArg("slot count must be >= 1, got %d" % no_time_slots)
        table = []
        for i in range(no_nodes):
            rows = []
            for j in range(no_nodes):
                row = []
                for k in range(no_time_slots):
                    peers = list(lists[i][k])
                    if len(peers) > no_nodes - 1:
                        raise InvalidArg(
                            "node %d has %d peers in slot %d; at most %d fit"
                            % (i, len(peers), k, no_nodes - 1)
                        )
                    row.append(peers[j] if j < len(peers) else SENTINEL)
                rows.append(tuple(row))
            table.append(tuple(rows))
        return cls(no_nodes, no_time_slots, tuple(table))


@dataclass(frozen=True)
class SystemConfig:
    """A schedule plus everything needed to run it.

    ``no_neighbors`` is always recomputed from the schedule (the maximum
    peer-list length over all node/slot pairs), never taken on trust.
    """

    schedule: PeerSchedule
    idata: tuple  # one input value per node, each >= 0 or NO_DATA
    mailbox_capacity: int
    no_neighbors: int

    @property
    def no_nodes(self) -> int:
        return self.schedule.no_nodes

    @property
    def no_time_slots(self) -> int:
        return self.schedule.no_time_slots


def default_capacity(no_nodes: int, no_time_slots: int) -> int:
    """Mailbox bound: (nodes - 1) x slots messages, and never below 1."""
    return max(1, (no_nodes - 1) * no_time_slots)


def make_config(
    schedule: PeerSchedule,
    idata: Sequence[int],
    mailbox_capacity: Optional[int] = None,
) -> SystemConfig:
    """Assemble a :class:`SystemConfig`, recomputing derived fields."""
    n, k = schedule.no_nodes, schedule.no_time_slots
    idata = tuple(idata)
    if len(idata) != n:
        raise InvalidConfig(
            "idata has %d values for %d nodes" % (len(idata), n)
        )
    for i, v in enumerate(idata):
        if v < NO_DATA:
            raise InvalidConfig("idata[%d] = %d; values must be >= 0 or -1" % (i, v))
    if mailbox_capacity is None:
        mailbox_capacity = default_capacity(n, k)
    if mailbox_capacity < 1:
        raise InvalidConfig(
            "mailbox capacity must be >= 1, got %d" % mailbox_capacity
        )
    no_neighbors = max(
        (len(schedule.peers(i, s)) for i in range(n) for s in range(k)),
        default=0,
    )
    return SystemConfig(schedule, idata, mailbox_capacity, no_neighbors)


@dataclass(frozen=True)
class NodeState:
    """One node's control location and local buffers.

    ``appts`` counts completed slots; ``time_slot`` is kept in lockstep but
    housed separately because the per-slot exchange advances it on its own.
    ``stash`` buffers messages that arrived before they were expected; the
    receive logic scans it by FIFO rotation.  ``ret_slot`` is the one-message
    hand-off cell between the scan/receive steps and the store step.
    """

    phase: Phase
    appts: int
    time_slot: int
    peer_idx: int
    ret_val: bool
    ret_slot: Optional[Message]
    stash: tuple  # of Message, FIFO order
    odata_row: tuple  # received payload per peer position, UNSET if unwritten


@dataclass(frozen=True)
class GlobalState:
    """All node states, all mailboxes, and the global termination flag."""

    nodes: tuple  # of NodeState
    mailboxes: tuple  # of tuple of Message, FIFO order
    terminated: bool


@dataclass(frozen=True)
class Action:
    """One scheduler-visible step.

    ``node`` is None only for SET_TERMINATED; ``peer_idx`` is set only for
    SEND (the position in the sender's peer list).
    """

    kind: ActionKind
    node: Optional[int] = None
    peer_idx: Optional[int] = None

    def sort_key(self):
        return (
            int(self.kind),
            -1 if self.node is None else self.node,
            -1 if self.peer_idx is None else self.peer_idx,
        )

    def __str__(self):
        if self.kind is ActionKind.SET_TERMINATED:
            return "set_terminated"
        if self.kind is ActionKind.SEND:
            return "send(%d, p=%d)" % (self.node, self.peer_idx)
        return "%s(%d)" % (self.kind.name.lower(), self.node)


@dataclass
class Verdict:
    """Outcome of one property check.

    ``trace`` is a replayable action sequence to the violation and is present
    on FAIL except for reachability (whose failure has no finite witness).
    For a liveness lasso, ``cycle_start`` is the index where the repeatable
    cycle begins; replaying the whole trace returns to the state reached
    after ``trace[:cycle_start]``.
    """

    prop: PropertyKind
    result: CheckResult
    trace: Optional[list] = None
    cycle_start: Optional[int] = None
    states_explored: int = 0
    transitions_explored: int = 0
    witness: Optional[list] = None  # termination witness for reachability

    @property
    def passed(self) -> bool:
        return self.result is CheckResult.PASS


def initial_state(config: SystemConfig, allow_invalid: bool = False) -> GlobalState:
    """All nodes at the top of slot 0 with empty buffers; nothing in flight.

    Raises :class:`InvalidConfig` when the schedule fails validation, unless
    ``allow_invalid`` is set (used to demonstrate deadlocks on bad schedules).
    """
    from tdmcheck import topology  # deferred: topology imports this module

    violations = topology.validate_config(config)
    errors = [v for v in violations if v.severity == "error"]
    # Out-of-range peer ids have no mailbox to deliver to; unlike asymmetry
    # or self-loops they cannot even run as a deadlock demo.
    fatal = [v for v in errors if v.kind == "range"]
    if fatal or (errors and not allow_invalid):
        raise InvalidConfig(
            "; ".join(str(v) for v in fatal or errors),
            violations=violations,
            config=config,
        )
    n = config.no_nodes
    node = NodeState(
        phase=Phase.SLOT_START,
        appts=0,
        time_slot=0,
        peer_idx=0,
        ret_val=False,
        ret_slot=None,
        stash=(),
        odata_row=(UNSET,) * (n - 1),
    )
    return GlobalState(nodes=(node,) * n, mailboxes=((),) * n, terminated=False)


def encode_state(state: GlobalState) -> tuple:
    """Canonical total encoding of a state as a flat tuple of ints.

    Two states encode equal iff they are component-wise equal, including
    message order inside mailboxes and stashes.  The layout is shared with
    the exploration kernel, so keys produced there compare equal to keys
    produced here.
    """
    out = [len(state.nodes)]
    for node in state.nodes:
        out.append(int(node.phase))
        out.append(node.appts)
        out.append(node.time_slot)
        out.append(node.peer_idx)
        out.append(1 if node.ret_val else 0)
        if node.ret_slot is None:
            out += (0, 0, 0, 0)
        else:
            m = node.ret_slot
            out += (1, m.slot, m.sender, m.payload)
        out.extend(node.odata_row)
        out.append(len(node.stash))
        for m in node.stash:
            out += (m.slot, m.sender, m.payload)
    for box in state.mailboxes:
        out.append(len(box))
        for m in box:
            out += (m.slot, m.sender, m.payload)
    out.append(1 if state.terminated else 0)
    return tuple(out)


def decode_state(key: tuple) -> GlobalState:
    """Inverse of :func:`encode_state`."""
    it = iter(key)
    n = next(it)
    nodes = []
    for _ in range(n):
        phase = Phase(next(it))
        appts = next(it)
        time_slot = next(it)
        peer_idx = next(it)
        ret_val = bool(next(it))
        has_ret = next(it)
        rs, rn, rp = next(it), next(it), next(it)
        ret_slot = Message(rs, rn, rp) if has_ret else None
        odata_row = tuple(next(it) for _ in range(n - 1))
        stash = tuple(
            Message(next(it), next(it), next(it)) for _ in range(next(it))
        )
        nodes.append(
            NodeState(phase, appts, time_slot, peer_idx, ret_val, ret_slot,
                      stash, odata_row)
        )
    mailboxes = tuple(
        tuple(Message(next(it), next(it), next(it)) for _ in range(next(it)))
        for _ in range(n)
    )
    terminated = bool(next(it))
    return GlobalState(tuple(nodes), mailboxes, terminated)
