"""Small-step operational semantics of the per-slot peer exchange.

Each node runs the same loop for every time slot: send its input value to
every peer listed for the slot (in list order, blocking when a target
mailbox is full), then collect one message from each listed peer (in list
order).  Collection first scans the node's stash of early-arrived messages
by FIFO rotation; on a miss it drains its own mailbox, stashing everything
that is not the expected (slot, sender) pair.  After the last slot a node is
done, and once every node is done a single global step raises the
terminated flag.

Two action granularities are offered:

* FAITHFUL exposes every node-local step (slot-entry branch, stash scan,
  store, sentinel hops) as its own action.
* REDUCED, the normative mode, fuses each maximal run of node-local steps
  into the adjacent shared action (send, receive) or slot boundary.  Only
  the acting node can observe the fused steps - stash, return cell, and the
  received-data row have a single owner - so the fusion cannot change any
  other node's enabledness; the checker validates the equivalence
  empirically rather than taking this argument on faith.

All functions are pure: state in, state out.
"""

from __future__ import annotations

import enum
from dataclasses import replace
from typing import Optional, Sequence

from tdmcheck.model import (
    NO_DATA,
    Action,
    ActionKind,
    GlobalState,
    IllegalAction,
    Message,
    NodeState,
    Phase,
    SystemConfig,
)


class SemanticsMode(enum.IntEnum):
    FAITHFUL = 0
    REDUCED = 1


def is_key_in_map(stash: Sequence[Message], key_slot: int, key_node: int):
    """Scan a stash by FIFO rotation for the (slot, sender) key.

    Every message currently in the stash is dequeued exactly once; the first
    one matching the key is withheld, all others are re-enqueued.  A full
    rotation leaves survivors in their original relative order, so the net
    effect is removal of the first match (and no change at all on a miss).

    Returns ``(found, message_or_None, new_stash)``.
    """
    rotated = list(stash)
    found = None
    for _ in range(len(rotated)):
        m = rotated.pop(0)
        if found is None and m.slot == key_slot and m.sender == key_node:
            found = m
        else:
            rotated.append(m)
    return (found is not None, found, tuple(rotated))


def is_terminal_success(state: GlobalState) -> bool:
    """True once the terminated flag is up (implies every node is done)."""
    return state.terminated


def _peers(config: SystemConfig, node: NodeState, i: int) -> tuple:
    return config.schedule.peers(i, node.time_slot)


def _local_step(node: NodeState, i: int, config: SystemConfig) -> NodeState:
    """Apply the single node-local step available in the node's phase."""
    if node.phase is Phase.SLOT_START:
        if config.idata[i] == NO_DATA:
            return replace(node, phase=Phase.SLOT_FINISH)
        return replace(node, phase=Phase.SENDING, peer_idx=0)
    if node.phase is Phase.DONE:
        raise IllegalAction("node %d is done" % i)
    peers = _peers(config, node, i)
    if node.phase is Phase.SENDING:
        if node.peer_idx < len(peers):
            raise IllegalAction("node %d still has peers to send to" % i)
        return replace(node, phase=Phase.SCAN_BUFFER, peer_idx=0)
    if node.phase is Phase.SCAN_BUFFER:
        if node.peer_idx < len(peers):
            expected = peers[node.peer_idx]
            found, msg, stash = is_key_in_map(node.stash, node.time_slot, expected)
            if found:
                return replace(
                    node, phase=Phase.STORE_DATA, ret_val=True,
                    ret_slot=msg, stash=stash,
                )
            return replace(node, phase=Phase.AWAIT_MAILBOX, ret_val=False)
        return replace(node, phase=Phase.SLOT_FINISH)
    if node.phase is Phase.STORE_DATA:
        row = list(node.odata_row)
        row[node.peer_idx] = node.ret_slot.payload
        return replace(
            node, phase=Phase.SCAN_BUFFER, peer_idx=node.peer_idx + 1,
            ret_slot=None, odata_row=tuple(row),
        )
    raise IllegalAction("node %d has no local step in phase %s" % (i, node.phase.name))


def _quiescent(node: NodeState, i: int, config: SystemConfig) -> bool:
    """True when the node's next step needs the scheduler (or it is done)."""
    if node.phase in (Phase.AWAIT_MAILBOX, Phase.SLOT_FINISH, Phase.DONE):
        return True
    if node.phase is Phase.SENDING:
        return node.peer_idx < len(_peers(config, node, i))
    return False


def _settle(node: NodeState, i: int, config: SystemConfig) -> NodeState:
    """Run node-local steps until the node needs a shared action."""
    while not _quiescent(node, i, config):
        node = _local_step(node, i, config)
    return node


def normalize(state: GlobalState, config: SystemConfig) -> GlobalState:
    """Fuse pending node-local steps everywhere (REDUCED normal form)."""
    nodes = tuple(_settle(nd, i, config) for i, nd in enumerate(state.nodes))
    return replace(state, nodes=nodes)


def _candidate(
    state: GlobalState, i: int, config: SystemConfig, mode: SemanticsMode
) -> Optional[Action]:
    """The at-most-one action node i can take in the current state."""
    node = state.nodes[i]
    peers = _peers(config, node, i) if node.phase is not Phase.DONE else ()
    if node.phase is Phase.SENDING and node.peer_idx < len(peers):
        target = peers[node.peer_idx]
        if len(state.mailboxes[target]) < config.mailbox_capacity:
            return Action(ActionKind.SEND, i, node.peer_idx)
        return None  # blocked on a full mailbox
    if node.phase is Phase.AWAIT_MAILBOX:
        if state.mailboxes[i]:
            return Action(ActionKind.RECEIVE, i)
        return None  # blocked on an empty mailbox
    if node.phase is Phase.SLOT_FINISH:
        return Action(ActionKind.FINISH_SLOT, i)
    if node.phase is Phase.DONE:
        return None
    if mode is SemanticsMode.REDUCED:
        raise IllegalAction(
            "reduced-mode state is not in normal form (node %d in %s)"
            % (i, node.phase.name)
        )
    if node.phase is Phase.SCAN_BUFFER and node.peer_idx < len(peers):
        return Action(ActionKind.LOCAL_SCAN, i)
    return Action(ActionKind.LOCAL_STEP, i)


def enabled_actions(
    state: GlobalState,
    config: SystemConfig,
    mode: SemanticsMode = SemanticsMode.REDUCED,
) -> list:
    """All actions executable now, in deterministic order.

    Order is action kind rank, then node id, then position.  In REDUCED mode
    the state is first brought to normal form, so asking about a freshly
    built initial state works as expected.
    """
    if mode is SemanticsMode.REDUCED:
        state = normalize(state, config)
    out = []
    for i in range(config.no_nodes):
        act = _candidate(state, i, config, mode)
        if act is not None:
            out.append(act)
    if not state.terminated and all(
        nd.phase is Phase.DONE for nd in state.nodes
    ):
        out.append(Action(ActionKind.SET_TERMINATED))
    out.sort(key=Action.sort_key)
    return out


def _apply_shared(state: GlobalState, action: Action, config: SystemConfig) -> GlobalState:
    """Apply one scheduler-visible action without any fusion."""
    kind = action.kind
    if kind is ActionKind.SET_TERMINATED:
        if state.terminated or not all(nd.phase is Phase.DONE for nd in state.nodes):
            raise IllegalAction("set_terminated requires all nodes done")
        return replace(state, terminated=True)

    i = action.node
    node = state.nodes[i]
    peers = _peers(config, node, i)

    if kind is ActionKind.SEND:
        if node.phase is not Phase.SENDING or node.peer_idx >= len(peers):
            raise IllegalAction("node %d is not ready to send" % i)
        if action.peer_idx != node.peer_idx:
            raise IllegalAction(
                "send position %s does not match node %d's position %d"
                % (action.peer_idx, i, node.peer_idx)
            )
        target = peers[node.peer_idx]
        if len(state.mailboxes[target]) >= config.mailbox_capacity:
            raise IllegalAction("mailbox %d is full" % target)
        msg = Message(node.time_slot, i, config.idata[i])
        boxes = list(state.mailboxes)
        boxes[target] = boxes[target] + (msg,)
        nodes = list(state.nodes)
        nodes[i] = replace(node, peer_idx=node.peer_idx + 1)
        return replace(state, nodes=tuple(nodes), mailboxes=tuple(boxes))

    if kind is ActionKind.RECEIVE:
        if node.phase is not Phase.AWAIT_MAILBOX:
            raise IllegalAction("node %d is not awaiting its mailbox" % i)
        if not state.mailboxes[i]:
            raise IllegalAction("mailbox %d is empty" % i)
        expected = peers[node.peer_idx]
        msg, rest = state.mailboxes[i][0], state.mailboxes[i][1:]
        boxes = list(state.mailboxes)
        boxes[i] = rest
        if msg.slot == node.time_slot and msg.sender == expected:
            new_node = replace(node, phase=Phase.STORE_DATA, ret_slot=msg)
        else:
            new_node = replace(node, stash=node.stash + (msg,))
        nodes = list(state.nodes)
        nodes[i] = new_node
        return replace(state, nodes=tuple(nodes), mailboxes=tuple(boxes))

    if kind is ActionKind.FINISH_SLOT:
        if node.phase is not Phase.SLOT_FINISH:
            raise IllegalAction("node %d has not finished its slot" % i)
        appts = node.appts + 1
        nodes = list(state.nodes)
        nodes[i] = replace(
            node,
            phase=Phase.DONE if appts == config.no_time_slots else Phase.SLOT_START,
            appts=appts,
            time_slot=node.time_slot + 1,
            peer_idx=0,
        )
        return replace(state, nodes=tuple(nodes))

    if kind in (ActionKind.LOCAL_SCAN, ActionKind.LOCAL_STEP):
        nodes = list(state.nodes)
        nodes[i] = _local_step(node, i, config)
        return replace(state, nodes=tuple(nodes))

    raise IllegalAction("unknown action kind %r" % kind)


def apply_action(
    state: GlobalState,
    action: Action,
    config: SystemConfig,
    mode: SemanticsMode = SemanticsMode.REDUCED,
) -> GlobalState:
    """Successor state after one action.

    Raises :class:`IllegalAction` when the action is not currently enabled
    (a guard against checker and scheduler bugs).  In REDUCED mode the
    acting node's trailing local steps are fused into the same transition.
    """
    if mode is SemanticsMode.REDUCED:
        state = normalize(state, config)
    if action not in enabled_actions(state, config, mode):
        raise IllegalAction("%s is not enabled" % action)
    state = _apply_shared(state, action, config)
    if mode is SemanticsMode.REDUCED and action.node is not None:
        nodes = list(state.nodes)
        nodes[action.node] = _settle(nodes[action.node], action.node, config)
        state = replace(state, nodes=tuple(nodes))
    return state


def replay_trace(
    config: SystemConfig,
    actions,
    mode: SemanticsMode = SemanticsMode.REDUCED,
    allow_invalid: bool = True,
    on_state=None,
) -> GlobalState:
    """Replay an action sequence from the initial state.

    Counterexample traces from the checker replay here; each step must be
    enabled or :class:`IllegalAction` is raised.  ``on_state(step, action,
    before, after)`` is called per step when given (used by trace dumps and
    the delivery oracle).
    """
    from tdmcheck.model import initial_state

    state = initial_state(config, allow_invalid=allow_invalid)
    if mode is SemanticsMode.REDUCED:
        state = normalize(state, config)
    for step, action in enumerate(actions):
        after = apply_action(state, action, config, mode)
        if on_state is not None:
            on_state(step, action, state, after)
        state = after
    return state
