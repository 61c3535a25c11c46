"""Kernel selection: compiled extension when built, interpreted otherwise.

``tdmcheck._stepcore`` exists once as source; when the C extension built
from it is present the import system picks it up (extension modules shadow
same-named sources), otherwise the interpreted module loads.  This module
pins that choice at import time and can additionally load the interpreted
variant explicitly, which the parity tests and the benchmark use to compare
both under one process.
"""

from __future__ import annotations

import importlib.machinery
import importlib.util
import os

from tdmcheck import _stepcore
from tdmcheck.model import Action, ActionKind, InvalidArg, SystemConfig

_pure_kernel = None


def load_pure_kernel():
    """The interpreted kernel, even when the compiled one is installed."""
    global _pure_kernel
    if _pure_kernel is None:
        if not _stepcore.COMPILED:
            _pure_kernel = _stepcore
        else:
            path = os.path.join(os.path.dirname(__file__), "_stepcore.py")
            loader = importlib.machinery.SourceFileLoader(
                "tdmcheck._stepcore_pure", path
            )
            spec = importlib.util.spec_from_loader(loader.name, loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            _pure_kernel = module
    return _pure_kernel


def get_kernel(pure: bool = False):
    """The kernel active for exploration (best available by default)."""
    return load_pure_kernel() if pure else _stepcore


def kernel_info() -> dict:
    return {"module": _stepcore.__name__, "compiled": bool(_stepcore.COMPILED)}


def build_step_context(config: SystemConfig, mode) -> tuple:
    """Flatten a config into the context tuple the kernel consumes."""
    n, k = config.no_nodes, config.no_time_slots
    peers = [
        [config.schedule.peers(i, s) for s in range(k)] for i in range(n)
    ]
    for i in range(n):
        for s in range(k):
            for p in peers[i][s]:
                if not 0 <= p < n:
                    raise InvalidArg(
                        "node %d slot %d lists peer %d, which has no mailbox"
                        % (i, s, p)
                    )
    return _stepcore.build_context(
        n, k, config.mailbox_capacity, int(mode), config.idata, peers
    )


def action_from_triple(triple) -> Action:
    """Kernel ``(kind, node, arg)`` triple to the public Action value."""
    kind, node, arg = triple
    kind = ActionKind(kind)
    return Action(
        kind,
        None if node < 0 else node,
        arg if kind is ActionKind.SEND else None,
    )


def action_to_triple(action: Action) -> tuple:
    return (
        int(action.kind),
        -1 if action.node is None else action.node,
        -1 if action.peer_idx is None else action.peer_idx,
    )
