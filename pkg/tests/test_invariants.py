"""Exhaustive cross-state invariants over every valid fixture up to N=4, K=2.

The big fixtures (clique 4x2 is ~2M states) are audited directly on the
kernel's byte keys, without building object states: mailbox occupancy stays
within the bound, a node that is due to send is never blocked, stashes
never hold a slot older than their owner's, and a node finishing a slot
holds exactly its peers' inputs.  The small battery additionally runs the
object-level auditor built into the checker.
"""

from collections import deque

import pytest

from tdmcheck import CheckResult, gen_bus, gen_clique, gen_ring, make_config
from tdmcheck import engine
from tdmcheck.checker import check_all
from tdmcheck.semantics import SemanticsMode

from conftest import battery, seq_idata

# phase/bookkeeping byte offsets within a node section (see _stepcore)
PH, AP, TS, PI = 0, 1, 2, 3
SENDING, SCAN_BUFFER, AWAIT_MAILBOX, SLOT_FINISH, DONE = 1, 2, 3, 5, 6


def audit_reachable_bytes(cfg, mode):
    """BFS over kernel keys, asserting the cross-node invariants per state."""
    kernel = engine.get_kernel()
    ctx = engine.build_step_context(cfg, mode)
    n, k, cap = cfg.no_nodes, cfg.no_time_slots, cfg.mailbox_capacity
    idata_idx = ctx[7]
    peers = ctx[5]
    spans = kernel._spans

    root = kernel.root_key(ctx)
    seen = {root}
    queue = deque((root,))
    states = 0
    while queue:
        key = queue.popleft()
        states += 1
        node_start, node_end, mb_start, mb_cnt = spans(key)
        for i in range(n):
            assert mb_cnt[i] <= cap, "mailbox over capacity"
            ns = node_start[i]
            ph = key[ns]
            ts = key[ns + TS]
            pi = key[ns + PI]
            stash_off = ns + 9 + (n - 1)
            assert key[stash_off] <= cap, "stash over capacity"
            for j in range(key[stash_off]):
                slot = key[stash_off + 1 + 3 * j]
                assert slot >= ts, "stale slot in stash"
            cur = peers[i][ts] if ts < k else ()
            if ph == SENDING and pi < len(cur):
                assert mb_cnt[cur[pi]] < cap, "scheduled send is blocked"
            if ph == SLOT_FINISH and cfg.idata[i] >= 0:
                row = key[ns + 9:stash_off]
                want = [idata_idx[q] for q in cur]
                assert list(row[: len(want)]) == want, "bad delivery row"
        for _, child in kernel.successors(key, ctx):
            if child not in seen:
                seen.add(child)
                queue.append(child)
    return states


def n4_fixtures():
    out = []
    for n in (2, 3, 4):
        for k in (1, 2):
            out.append(("clique_%dx%d" % (n, k), make_config(gen_clique(n, k), seq_idata(n))))
            out.append(("bus_%dx%d" % (n, k), make_config(gen_bus(n, k), seq_idata(n))))
            if n >= 3:
                out.append(("ring_%dx%d" % (n, k), make_config(gen_ring(n, k), seq_idata(n))))
    return out


@pytest.mark.parametrize("name,cfg", n4_fixtures())
def test_cross_state_invariants_reduced(name, cfg):
    assert audit_reachable_bytes(cfg, SemanticsMode.REDUCED) > 0


@pytest.mark.parametrize(
    "name,cfg", [(n, c) for n, c in n4_fixtures() if c.no_nodes <= 3]
)
def test_cross_state_invariants_faithful(name, cfg):
    assert audit_reachable_bytes(cfg, SemanticsMode.FAITHFUL) > 0


def test_object_level_audit_over_battery():
    """The checker's own per-state assertions hold on every small fixture."""
    for name, cfg in battery():
        for mode in (SemanticsMode.REDUCED, SemanticsMode.FAITHFUL):
            verdicts, _ = check_all(cfg, mode, check_invariants=True)
            assert all(
                v.result is CheckResult.PASS for v in verdicts.values()
            ), (name, mode)
