"""Plain-text trace files: one action per line, replayable.

Line format (fields space-separated)::

    <step> <kind> <node> [<peer_idx>] [msg=<slot>,<sender>,<payload>]

``peer_idx`` appears only on send lines.  The ``msg=`` annotation on send
and receive lines is derived by replaying the trace and is informational;
the parser ignores it.  ``#`` starts a comment; ``# key=value`` comments at
the top carry metadata (mode, seed, cycle_start for liveness lassos).
set_terminated is a global step and is written with node -1.
"""

from __future__ import annotations

from typing import Optional

from tdmcheck.model import Action, ActionKind, ParseError, SystemConfig
from tdmcheck.semantics import SemanticsMode, replay_trace

_KIND_NAMES = {k: k.name.lower() for k in ActionKind}
_NAME_KINDS = {v: k for k, v in _KIND_NAMES.items()}


def format_trace(
    actions,
    config: SystemConfig,
    mode: SemanticsMode = SemanticsMode.REDUCED,
    meta: Optional[dict] = None,
) -> str:
    """Render actions with message annotations (requires a replay)."""
    notes = {}

    def on_state(step, action, before, after):
        if action.kind is ActionKind.SEND:
            node = before.nodes[action.node]
            notes[step] = "msg=%d,%d,%d" % (
                node.time_slot, action.node, config.idata[action.node]
            )
        elif action.kind is ActionKind.RECEIVE:
            m = before.mailboxes[action.node][0]
            notes[step] = "msg=%d,%d,%d" % (m.slot, m.sender, m.payload)

    replay_trace(config, actions, mode, allow_invalid=True, on_state=on_state)

    lines = ["# mode=%s" % ("reduced" if mode is SemanticsMode.REDUCED else "faithful")]
    for key, value in (meta or {}).items():
        lines.append("# %s=%s" % (key, value))
    for step, action in enumerate(actions):
        parts = [
            str(step),
            _KIND_NAMES[action.kind],
            "-1" if action.node is None else str(action.node),
        ]
        if action.kind is ActionKind.SEND:
            parts.append(str(action.peer_idx))
        if step in notes:
            parts.append(notes[step])
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_trace(text: str):
    """Parse a trace file into ``(actions, meta)``."""
    actions = []
    meta = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if "=" in body and " " not in body:
                key, value = body.split("=", 1)
                meta[key] = value
            continue
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) < 3:
            raise ParseError("trace line needs step, kind, node", lineno)
        kind = _NAME_KINDS.get(tokens[1])
        if kind is None:
            raise ParseError("unknown action kind %r" % tokens[1], lineno)
        try:
            node = int(tokens[2])
        except ValueError:
            raise ParseError("node must be an integer, got %r" % tokens[2], lineno)
        peer_idx = None
        if kind is ActionKind.SEND:
            if len(tokens) < 4 or tokens[3].startswith("msg="):
                raise ParseError("send line needs a peer position", lineno)
            try:
                peer_idx = int(tokens[3])
            except ValueError:
                raise ParseError("peer position must be an integer", lineno)
        actions.append(Action(kind, None if node < 0 else node, peer_idx))
    return actions, meta


def trace_mode(meta: dict, default: SemanticsMode = SemanticsMode.REDUCED) -> SemanticsMode:
    name = meta.get("mode")
    if name == "faithful":
        return SemanticsMode.FAITHFUL
    if name == "reduced":
        return SemanticsMode.REDUCED
    return default
