"""Schedule generation, validation, and the schedule file format.

A schedule is valid when every per-slot peer relation is symmetric and
anti-reflexive (so each slot's links form an undirected graph without
self-loops), lists are duplicate-free, sentinel-terminated, and all ids are
in range.  The validator returns findings as data rather than raising, so
deliberately broken schedules can still be fed to the checker to demonstrate
deadlocks.

File format (line-based, ``#`` starts a comment, tokens whitespace-split)::

    nodes 2
    slots 1
    capacity 1          # optional; default (nodes-1)*slots
    idata 5 7           # exactly `nodes` integers, each >= 0 or -1
    slot 0
    edge 0 1            # undirected; expands symmetrically

Each ``slot k`` header scopes the following ``edge`` lines until the next
header; every slot index in [0, slots) needs a header, even if it has no
edges.  A directed ``arc i j`` directive (adds j to i's list only) exists
solely to express asymmetric schedules for negative tests; the validator
flags the asymmetry and such files only run with allow-invalid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from tdmcheck.model import (
    NO_DATA,
    SENTINEL,
    InvalidArg,
    InvalidConfig,
    ParseError,
    PeerSchedule,
    SystemConfig,
    make_config,
)


@dataclass(frozen=True)
class Violation:
    """One validator finding. ``severity`` is "error" or "warning"."""

    kind: str
    severity: str
    message: str
    node: Optional[int] = None
    peer: Optional[int] = None
    slot: Optional[int] = None

    def __str__(self):
        return "%s: %s" % (self.kind, self.message)


def _uniform_schedule(n, k, neighbors_of) -> PeerSchedule:
    lists = [[sorted(neighbors_of(i)) for _ in range(k)] for i in range(n)]
    return PeerSchedule.from_lists(n, k, lists)


def gen_clique(n: int, k: int) -> PeerSchedule:
    """Completely connected graph: every node lists all others, every slot."""
    if n < 1:
        raise InvalidArg("clique needs at least 1 node, got %d" % n)
    if k < 1:
        raise InvalidArg("slot count must be >= 1, got %d" % k)
    return _uniform_schedule(n, k, lambda i: [j for j in range(n) if j != i])


def gen_ring(n: int, k: int) -> PeerSchedule:
    """Cycle graph. Needs n >= 3 so a node's two neighbors are distinct."""
    if n < 3:
        raise InvalidArg("ring needs at least 3 nodes, got %d" % n)
    if k < 1:
        raise InvalidArg("slot count must be >= 1, got %d" % k)
    return _uniform_schedule(n, k, lambda i: {(i - 1) % n, (i + 1) % n})


def gen_bus(n: int, k: int) -> PeerSchedule:
    """Path graph: 0 - 1 - ... - (n-1)."""
    if n < 2:
        raise InvalidArg("bus needs at least 2 nodes, got %d" % n)
    if k < 1:
        raise InvalidArg("slot count must be >= 1, got %d" % k)
    return _uniform_schedule(
        n, k, lambda i: [j for j in (i - 1, i + 1) if 0 <= j < n]
    )


def validate(schedule: PeerSchedule) -> list:
    """All structural violations of a schedule; an empty list means valid.

    Checks sentinel-prefix well-formedness, id range, anti-reflexivity,
    duplicate-freeness, and per-slot symmetry.
    """
    n, k = schedule.no_nodes, schedule.no_time_slots
    out = []
    lists = {}
    for i in range(n):
        for s in range(k):
            column = [schedule.peer_ids[i][j][s] for j in range(n)]
            if SENTINEL not in column:
                out.append(
                    Violation(
                        "sentinel", "error",
                        "node %d slot %d: peer list has no -1 terminator" % (i, s),
                        node=i, slot=s,
                    )
                )
                prefix = column
            else:
                end = column.index(SENTINEL)
                prefix = column[:end]
                if any(v != SENTINEL for v in column[end:]):
                    out.append(
                        Violation(
                            "sentinel", "error",
                            "node %d slot %d: entries after the first -1 "
                            "must all be -1" % (i, s),
                            node=i, slot=s,
                        )
                    )
            lists[i, s] = prefix
            for p in prefix:
                if not 0 <= p < n:
                    out.append(
                        Violation(
                            "range", "error",
                            "node %d slot %d lists %d; ids must be in [0, %d)"
                            % (i, s, p, n),
                            node=i, peer=p, slot=s,
                        )
                    )
            if i in prefix:
                out.append(
                    Violation(
                        "anti-reflexive", "error",
                        "node %d slot %d lists itself" % (i, s),
                        node=i, peer=i, slot=s,
                    )
                )
            seen = set()
            for p in prefix:
                if p in seen:
                    out.append(
                        Violation(
                            "duplicate", "error",
                            "node %d slot %d lists %d twice" % (i, s, p),
                            node=i, peer=p, slot=s,
                        )
                    )
                seen.add(p)
    # One asymmetric pair yields both orientations, so the symmetry check's
    # findings are themselves symmetric in (node, peer).
    for (i, s), prefix in lists.items():
        for p in prefix:
            if 0 <= p < n and i not in lists[p, s]:
                out.append(
                    Violation(
                        "symmetry", "error",
                        "node %d lists %d in slot %d but not vice versa"
                        % (i, p, s),
                        node=i, peer=p, slot=s,
                    )
                )
                out.append(
                    Violation(
                        "symmetry", "error",
                        "node %d is listed by %d in slot %d but does not "
                        "list it back" % (p, i, s),
                        node=p, peer=i, slot=s,
                    )
                )
    return out


def validate_config(config: SystemConfig) -> list:
    """Schedule violations plus config-level findings.

    A node that has nothing to send (idata -1) but appears in someone's peer
    list is flagged as a "dead-peer" warning, not an error: the schedule is
    structurally fine, but its peers will wait forever for a message that is
    never sent.  That is precisely the negative fixture that deadlocks.
    """
    out = validate(config.schedule)
    n, k = config.no_nodes, config.no_time_slots
    for i in range(n):
        for s in range(k):
            for p in config.schedule.peers(i, s):
                if 0 <= p < n and config.idata[p] == NO_DATA:
                    out.append(
                        Violation(
                            "dead-peer", "warning",
                            "node %d lists %d in slot %d, but node %d never "
                            "sends (idata -1)" % (i, p, s, p),
                            node=i, peer=p, slot=s,
                        )
                    )
    return out


def has_errors(violations) -> bool:
    return any(v.severity == "error" for v in violations)


def parse_schedule(text: str, allow_invalid: bool = False) -> SystemConfig:
    """Parse the schedule file format into a canonical SystemConfig.

    Adjacency lists come out sorted ascending and sentinel-padded.  On
    validation errors this raises :class:`InvalidConfig` unless
    ``allow_invalid`` is set; the exception carries the parsed config so a
    caller may still run it deliberately.
    """
    n = slots = None
    capacity = None
    idata = None
    adj = None  # adj[i][s] -> list of peers in insertion order
    cur_slot = None
    slots_seen = set()

    def err(msg, lineno):
        raise ParseError(msg, lineno)

    def want_int(tok, what, lineno):
        try:
            return int(tok)
        except ValueError:
            err("%s must be an integer, got %r" % (what, tok), lineno)

    def add_peer(i, j, lineno):
        if not 0 <= i < n:
            err("node id %d out of range [0, %d)" % (i, n), lineno)
        if not 0 <= j < n:
            err("node id %d out of range [0, %d)" % (j, n), lineno)
        if j not in adj[i][cur_slot]:
            if len(adj[i][cur_slot]) >= n - 1:
                err("node %d has too many peers in slot %d" % (i, cur_slot), lineno)
            adj[i][cur_slot].append(j)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        directive, args = tokens[0], tokens[1:]
        if directive == "nodes":
            if len(args) != 1:
                err("'nodes' takes one value", lineno)
            if n is not None:
                err("'nodes' given twice", lineno)
            n = want_int(args[0], "node count", lineno)
            if n < 1:
                err("node count must be >= 1, got %d" % n, lineno)
        elif directive == "slots":
            if len(args) != 1:
                err("'slots' takes one value", lineno)
            if slots is not None:
                err("'slots' given twice", lineno)
            slots = want_int(args[0], "slot count", lineno)
            if slots < 1:
                err("slot count must be >= 1, got %d" % slots, lineno)
        elif directive == "capacity":
            if len(args) != 1:
                err("'capacity' takes one value", lineno)
            if capacity is not None:
                err("'capacity' given twice", lineno)
            capacity = want_int(args[0], "capacity", lineno)
            if capacity < 1:
                err("capacity must be >= 1, got %d" % capacity, lineno)
        elif directive == "idata":
            if n is None:
                err("'idata' must come after 'nodes'", lineno)
            if idata is not None:
                err("'idata' given twice", lineno)
            if len(args) != n:
                err("'idata' needs exactly %d values, got %d" % (n, len(args)), lineno)
            idata = [want_int(a, "idata value", lineno) for a in args]
            for v in idata:
                if v < NO_DATA:
                    err("idata values must be >= 0 or -1, got %d" % v, lineno)
        elif directive == "slot":
            if n is None or slots is None:
                err("'slot' must come after 'nodes' and 'slots'", lineno)
            if len(args) != 1:
                err("'slot' takes one index", lineno)
            if adj is None:
                adj = [[[] for _ in range(slots)] for _ in range(n)]
            cur_slot = want_int(args[0], "slot index", lineno)
            if not 0 <= cur_slot < slots:
                err("slot index %d out of range [0, %d)" % (cur_slot, slots), lineno)
            if cur_slot in slots_seen:
                err("duplicate header for slot %d" % cur_slot, lineno)
            slots_seen.add(cur_slot)
        elif directive in ("edge", "arc"):
            if cur_slot is None:
                err("'%s' must come after a 'slot' header" % directive, lineno)
            if len(args) != 2:
                err("'%s' takes two node ids" % directive, lineno)
            i = want_int(args[0], "node id", lineno)
            j = want_int(args[1], "node id", lineno)
            add_peer(i, j, lineno)
            if directive == "edge" and i != j:
                add_peer(j, i, lineno)
        else:
            err("unknown directive %r" % directive, lineno)

    if n is None:
        raise ParseError("missing 'nodes' line")
    if slots is None:
        raise ParseError("missing 'slots' line")
    if idata is None:
        raise ParseError("missing 'idata' line")
    missing = sorted(set(range(slots)) - slots_seen)
    if missing:
        raise ParseError("missing 'slot' header for slot %d" % missing[0])
    if adj is None:
        adj = [[[] for _ in range(slots)] for _ in range(n)]

    lists = [[sorted(adj[i][s]) for s in range(slots)] for i in range(n)]
    schedule = PeerSchedule.from_lists(n, slots, lists)
    config = make_config(schedule, idata, capacity)
    violations = validate_config(config)
    if has_errors(violations) and not allow_invalid:
        raise InvalidConfig(
            "; ".join(str(v) for v in violations if v.severity == "error"),
            violations=violations,
            config=config,
        )
    return config


def serialize_schedule(config: SystemConfig) -> str:
    """Render a config in the schedule file format.

    Round-trips exactly: ``parse_schedule(serialize_schedule(c)) == c``.
    Mutual pairs come out as ``edge``, one-sided pairs (only possible in
    deliberately invalid schedules) as ``arc``.
    """
    n, k = config.no_nodes, config.no_time_slots
    lines = [
        "nodes %d" % n,
        "slots %d" % k,
        "capacity %d" % config.mailbox_capacity,
        "idata %s" % " ".join(str(v) for v in config.idata),
    ]
    for s in range(k):
        lines.append("slot %d" % s)
        peers = {i: config.schedule.peers(i, s) for i in range(n)}
        for i in range(n):
            for j in peers[i]:
                mutual = 0 <= j < n and i in peers.get(j, ())
                if mutual:
                    if i <= j:
                        lines.append("edge %d %d" % (i, j))
                else:
                    lines.append("arc %d %d" % (i, j))
    return "\n".join(lines) + "\n"
