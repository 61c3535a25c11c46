"""Flat-state transition kernel used by the exhaustive checker.

This module is the hot inner loop of exploration: it expands a state key
into its successor keys without building any object-level state.  Keys are
compact byte strings - one byte per field, in exactly the field order of
:func:`tdmcheck.model.encode_state` - with payload values interned through a
per-config table (a state only ever carries payloads drawn from the
config's inputs plus the unset marker, so the interning is a bijection and
key equality coincides with state equality).  ``key_to_tuple`` undoes the
compression, which is how the test suite cross-checks every kernel
transition against the reference semantics in :mod:`tdmcheck.semantics`.

Successor keys are assembled by splicing the few changed byte ranges of the
parent key (a node's section, a mailbox's section), never by rebuilding the
whole state, which keeps the per-transition cost close to a memcpy.

The file is written in Cython "pure Python" mode: it runs unmodified under
CPython and compiles to a C extension when built, in which case the import
machinery picks the compiled module automatically.  ``COMPILED`` reports
which variant is active.

The byte encoding caps node count, slot count, and mailbox capacity at 250.
That is far beyond what exhaustive exploration can visit anyway; the
object-level semantics have no such limit.
"""

try:
    import cython

    COMPILED = cython.compiled
except ImportError:  # pragma: no cover - cython is normally importable
    class _CythonShim:
        compiled = False
        int = int
        Py_ssize_t = int

    cython = _CythonShim()
    COMPILED = False

# Phase numbering (must match tdmcheck.model.Phase)
_SLOT_START = 0
_SENDING = 1
_SCAN_BUFFER = 2
_AWAIT_MAILBOX = 3
_STORE_DATA = 4
_SLOT_FINISH = 5
_DONE = 6

# Action kinds (must match tdmcheck.model.ActionKind)
_SEND = 0
_RECEIVE = 1
_LOCAL_SCAN = 2
_LOCAL_STEP = 3
_FINISH_SLOT = 4
_SET_TERMINATED = 5

_FAITHFUL = 0
_REDUCED = 1

_UNSET = -2
_LIMIT = 250

# Context tuple slots.
_N = 0
_K = 1
_CAP = 2
_MODE = 3
_IDATA = 4
_PEERS = 5
_VALUES = 6  # payload index -> payload value
_IDIDX = 7  # node -> payload index of its input
_UNSET_IDX = 8


def build_context(n, k, capacity, mode, idata, peers):
    """Pack config data into the flat context tuple the kernel expects."""
    if not 1 <= n <= _LIMIT:
        raise ValueError("kernel supports 1..%d nodes, got %d" % (_LIMIT, n))
    if not 1 <= k <= _LIMIT:
        raise ValueError("kernel supports 1..%d slots, got %d" % (_LIMIT, k))
    if not 1 <= capacity <= _LIMIT:
        raise ValueError(
            "kernel supports mailbox capacity 1..%d, got %d" % (_LIMIT, capacity)
        )
    peers_t = tuple(tuple(tuple(ps) for ps in by_slot) for by_slot in peers)
    values = sorted({_UNSET} | {v for v in idata if v >= 0})
    index = {v: i for i, v in enumerate(values)}
    idata_idx = tuple(index[v] if v >= 0 else 0 for v in idata)
    return (
        int(n), int(k), int(capacity), int(mode), tuple(idata), peers_t,
        tuple(values), idata_idx, index[_UNSET],
    )


def _spans(key: bytes):
    """Per-node section offsets and the scalars the candidate scan needs.

    Returns (node_start, node_end, mb_start, mb_cnt) index lists; the node
    section of i is key[node_start[i]:node_end[i]] and mailbox i's count
    byte sits at mb_start[i].
    """
    i: cython.Py_ssize_t
    pos: cython.Py_ssize_t
    n: cython.Py_ssize_t
    cnt: cython.Py_ssize_t
    n = key[0]
    node_start = [0] * n
    node_end = [0] * n
    mb_start = [0] * n
    mb_cnt = [0] * n
    pos = 1
    for i in range(n):
        node_start[i] = pos
        pos += 9 + (n - 1)
        pos += 1 + 3 * key[pos]
        node_end[i] = pos
    for i in range(n):
        mb_start[i] = pos
        cnt = key[pos]
        mb_cnt[i] = cnt
        pos += 1 + 3 * cnt
    return node_start, node_end, mb_start, mb_cnt


class _Node:
    """Mutable unpacked node section for the settle/micro-step paths."""

    __slots__ = ("ph", "ap", "ts", "pi", "rv", "rh", "r0", "r1", "r2",
                 "od", "st")

    def __init__(self, key, start, end, n):
        self.ph = key[start]
        self.ap = key[start + 1]
        self.ts = key[start + 2]
        self.pi = key[start + 3]
        self.rv = key[start + 4]
        self.rh = key[start + 5]
        self.r0 = key[start + 6]
        self.r1 = key[start + 7]
        self.r2 = key[start + 8]
        self.od = list(key[start + 9:start + 9 + n - 1])
        self.st = list(key[start + 9 + n:end])

    def section(self):
        return bytes(
            [self.ph, self.ap, self.ts, self.pi, self.rv, self.rh,
             self.r0, self.r1, self.r2]
            + self.od + [len(self.st) // 3] + self.st
        )


def _scan_stash(st: list, want_slot: cython.int, want_sender: cython.int):
    """Remove the first (slot, sender) match; rotation preserves the rest.

    Returns the payload index, or -1 when absent.
    """
    j: cython.Py_ssize_t
    m: cython.Py_ssize_t
    m = len(st)
    for j in range(0, m, 3):
        if st[j] == want_slot and st[j + 1] == want_sender:
            payload = st[j + 2]
            del st[j:j + 3]
            return payload
    return -1


def _settle(nd, i, ctx):
    """Run node i's local steps in place until a shared action is needed."""
    peers_i = ctx[_PEERS][i]
    while True:
        p = nd.ph
        if p == _SLOT_START:
            if ctx[_IDATA][i] == -1:
                nd.ph = _SLOT_FINISH
            else:
                nd.ph = _SENDING
                nd.pi = 0
        elif p == _SENDING:
            if nd.pi < len(peers_i[nd.ts]):
                return  # needs a send
            nd.ph = _SCAN_BUFFER
            nd.pi = 0
        elif p == _SCAN_BUFFER:
            peers = peers_i[nd.ts]
            if nd.pi >= len(peers):
                nd.ph = _SLOT_FINISH
                continue
            payload = _scan_stash(nd.st, nd.ts, peers[nd.pi])
            if payload >= 0:
                nd.rv = 1
                nd.rh = 1
                nd.r0 = nd.ts
                nd.r1 = peers[nd.pi]
                nd.r2 = payload
                nd.ph = _STORE_DATA
            else:
                nd.rv = 0
                nd.ph = _AWAIT_MAILBOX
                return  # needs a receive
        elif p == _STORE_DATA:
            nd.od[nd.pi] = nd.r2
            nd.rh = 0
            nd.r0 = 0
            nd.r1 = 0
            nd.r2 = 0
            nd.pi += 1
            nd.ph = _SCAN_BUFFER
        else:  # AWAIT_MAILBOX, SLOT_FINISH, DONE
            return


def _local_once(nd, i, ctx):
    """One faithful-mode node-local micro-step (LOCAL_STEP or LOCAL_SCAN)."""
    p = nd.ph
    if p == _SLOT_START:
        if ctx[_IDATA][i] == -1:
            nd.ph = _SLOT_FINISH
        else:
            nd.ph = _SENDING
            nd.pi = 0
    elif p == _SENDING:
        nd.ph = _SCAN_BUFFER
        nd.pi = 0
    elif p == _SCAN_BUFFER:
        peers = ctx[_PEERS][i][nd.ts]
        if nd.pi >= len(peers):
            nd.ph = _SLOT_FINISH
            return
        payload = _scan_stash(nd.st, nd.ts, peers[nd.pi])
        if payload >= 0:
            nd.rv = 1
            nd.rh = 1
            nd.r0 = nd.ts
            nd.r1 = peers[nd.pi]
            nd.r2 = payload
            nd.ph = _STORE_DATA
        else:
            nd.rv = 0
            nd.ph = _AWAIT_MAILBOX
    elif p == _STORE_DATA:
        nd.od[nd.pi] = nd.r2
        nd.rh = 0
        nd.r0 = 0
        nd.r1 = 0
        nd.r2 = 0
        nd.pi += 1
        nd.ph = _SCAN_BUFFER


def root_key(ctx):
    """Initial state key (normalized when the context is reduced-mode)."""
    n = ctx[_N]
    unset = ctx[_UNSET_IDX]
    out = [n]
    sections = []
    for i in range(n):
        nd = _Node(b"\x00" * 9 + bytes([unset] * (n - 1)) + b"\x00", 0, 9 + n, n)
        if ctx[_MODE] == _REDUCED:
            _settle(nd, i, ctx)
        sections.append(nd.section())
    body = b"".join(sections)
    return bytes(out) + body + b"\x00" * n + b"\x00"


def is_terminated_key(key):
    return key[-1] == 1


def successors(key: bytes, ctx: tuple):
    """All (action, successor-key) pairs of a state, deterministically ordered.

    Actions are ``(kind, node, arg)`` triples with ``arg`` the peer-list
    position for sends and -1 otherwise; set_terminated uses node -1.  The
    order (kind rank, then node id) matches the reference semantics exactly
    so traces and tie-breaks agree between engines.
    """
    i: cython.Py_ssize_t
    n: cython.Py_ssize_t
    k: cython.Py_ssize_t
    cap: cython.Py_ssize_t
    mode: cython.int
    kind: cython.int
    p: cython.int
    ts: cython.Py_ssize_t
    pi: cython.Py_ssize_t
    ns: cython.Py_ssize_t
    ne: cython.Py_ssize_t
    off: cython.Py_ssize_t
    ins: cython.Py_ssize_t
    arg: cython.Py_ssize_t
    ap: cython.Py_ssize_t
    q: cython.Py_ssize_t
    m0: cython.int
    m1: cython.int
    m2: cython.int
    expected: cython.int
    done_count: cython.int
    L: bytearray
    if key[-1] == 1:
        return []
    n = ctx[_N]
    k = ctx[_K]
    cap = ctx[_CAP]
    mode = ctx[_MODE]
    peers_all = ctx[_PEERS]
    node_start, node_end, mb_start, mb_cnt = _spans(key)

    # At most one candidate action per node; order kind-major, node-minor.
    cands = []
    done_count = 0
    for i in range(n):
        ns = node_start[i]
        p = key[ns]
        if p == _DONE:
            done_count += 1
            continue
        ts = key[ns + 2]
        pi = key[ns + 3]
        if p == _SENDING and pi < len(peers_all[i][ts]):
            if mb_cnt[peers_all[i][ts][pi]] < cap:
                cands.append((_SEND, i))
            continue  # blocked sender contributes nothing
        if p == _AWAIT_MAILBOX:
            if mb_cnt[i]:
                cands.append((_RECEIVE, i))
            continue
        if p == _SLOT_FINISH:
            cands.append((_FINISH_SLOT, i))
            continue
        if mode == _REDUCED:
            raise AssertionError("reduced-mode key not in normal form")
        if p == _SCAN_BUFFER and pi < len(peers_all[i][ts]):
            cands.append((_LOCAL_SCAN, i))
        else:
            cands.append((_LOCAL_STEP, i))
    cands.sort()

    out = []
    for kind, i in cands:
        ns = node_start[i]
        ne = node_end[i]
        L = bytearray(key)
        arg = -1
        if kind == _SEND:
            ts = key[ns + 2]
            arg = key[ns + 3]
            peers = peers_all[i][ts]
            q = peers[arg]
            # mailbox q grows by one message (higher offsets first)
            off = mb_start[q]
            ins = off + 1 + 3 * mb_cnt[q]
            L[ins:ins] = bytes((ts, i, ctx[_IDIDX][i]))
            L[off] += 1
            if mode == _FAITHFUL or arg + 1 < len(peers):
                L[ns + 3] += 1
            else:
                nd = _Node(key, ns, ne, n)
                nd.pi = arg + 1
                _settle(nd, i, ctx)
                L[ns:ne] = nd.section()
        elif kind == _RECEIVE:
            off = mb_start[i]
            m0 = key[off + 1]
            m1 = key[off + 2]
            m2 = key[off + 3]
            L[off + 1:off + 4] = b""
            L[off] -= 1
            ts = key[ns + 2]
            expected = peers_all[i][ts][key[ns + 3]]
            if m0 == ts and m1 == expected:
                if mode == _FAITHFUL:
                    L[ns] = _STORE_DATA
                    L[ns + 5] = 1
                    L[ns + 6] = m0
                    L[ns + 7] = m1
                    L[ns + 8] = m2
                else:
                    nd = _Node(key, ns, ne, n)
                    nd.ph = _STORE_DATA
                    nd.rh = 1
                    nd.r0 = m0
                    nd.r1 = m1
                    nd.r2 = m2
                    _settle(nd, i, ctx)
                    L[ns:ne] = nd.section()
            else:
                L[ne:ne] = bytes((m0, m1, m2))  # stash the early arrival
                L[ns + 9 + n - 1] += 1
        elif kind == _FINISH_SLOT:
            ap = key[ns + 1] + 1
            if ap == k:
                L[ns] = _DONE
                L[ns + 1] = ap
                L[ns + 2] = key[ns + 2] + 1
                L[ns + 3] = 0
            elif mode == _FAITHFUL:
                L[ns] = _SLOT_START
                L[ns + 1] = ap
                L[ns + 2] = key[ns + 2] + 1
                L[ns + 3] = 0
            else:
                nd = _Node(key, ns, ne, n)
                nd.ph = _SLOT_START
                nd.ap = ap
                nd.ts += 1
                nd.pi = 0
                _settle(nd, i, ctx)
                L[ns:ne] = nd.section()
        else:  # LOCAL_SCAN / LOCAL_STEP (faithful mode only)
            nd = _Node(key, ns, ne, n)
            _local_once(nd, i, ctx)
            L[ns:ne] = nd.section()
        out.append(((kind, i, arg), bytes(L)))
    if done_count == n:
        L = bytearray(key)
        L[-1] = 1
        out.append(((_SET_TERMINATED, -1, -1), bytes(L)))
    return out


def sweep(ctx, max_states, audit=None):
    """Breadth-first sweep of the reachable state space.

    Returns a tuple::

        (states, transitions, max_frontier, complete,
         deadlock_id, witness_id,
         parent_id, parent_act, row_ptr, edge_child, edge_act, term_flags)

    ``parent_*`` give one tree edge per state for shortest-trace rebuilds;
    ``row_ptr``/``edge_child``/``edge_act`` are the full edge list in
    compressed sparse rows (edges of expanded state s occupy rows
    [row_ptr[s], row_ptr[s+1])).  Actions are packed as
    (kind << 20) | ((node + 1) << 10) | (arg + 1).

    Expansion order is discovery order, so ids are BFS-level ordered and the
    first deadlock id found is at minimal action depth.  ``audit``, when
    given, is called with (key, successors) for every expanded state.
    """
    sid: cython.Py_ssize_t
    cid: cython.Py_ssize_t
    nstates: cython.Py_ssize_t
    budget: cython.Py_ssize_t
    transitions: cython.Py_ssize_t
    max_frontier: cython.Py_ssize_t
    deadlock_id: cython.Py_ssize_t
    witness_id: cython.Py_ssize_t
    kind: cython.int
    node: cython.int
    arg: cython.int
    code: cython.int

    from array import array
    from collections import deque

    budget = max_states
    root = root_key(ctx)
    visited = {root: 0}
    queue = deque(((0, root),))
    parent_id = array("i", (-1,))
    parent_act = array("i", (0,))
    row_ptr = array("i", (0,))
    edge_child = array("i")
    edge_act = array("i")
    term_flags = bytearray((1,) if root[-1] == 1 else (0,))
    deadlock_id = -1
    witness_id = -1
    transitions = 0
    max_frontier = 1
    nstates = 1
    complete = True

    pop = queue.popleft
    push = queue.append
    visited_get = visited.get
    child_append = edge_child.append
    act_append = edge_act.append
    pid_append = parent_id.append
    pact_append = parent_act.append
    row_append = row_ptr.append
    flag_append = term_flags.append

    while queue:
        sid, key = pop()
        succ = successors(key, ctx)
        transitions += len(succ)
        if audit is not None:
            audit(key, succ)
        if not succ and key[-1] != 1 and deadlock_id < 0:
            deadlock_id = sid
        for triple, child in succ:
            kind, node, arg = triple
            code = (kind << 20) | ((node + 1) << 10) | (arg + 1)
            cid_obj = visited_get(child)
            if cid_obj is None:
                if nstates >= budget:
                    complete = False
                    continue
                cid = nstates
                visited[child] = cid
                nstates += 1
                pid_append(sid)
                pact_append(code)
                push((cid, child))
                if child[-1] == 1:
                    flag_append(1)
                    if witness_id < 0:
                        witness_id = cid
                else:
                    flag_append(0)
            else:
                cid = cid_obj
            child_append(cid)
            act_append(code)
        row_append(len(edge_child))
        if len(queue) > max_frontier:
            max_frontier = len(queue)
        if not complete:
            break

    return (
        nstates, transitions, max_frontier, complete,
        deadlock_id, witness_id,
        parent_id, parent_act, row_ptr, edge_child, edge_act, term_flags,
    )


def find_cycle(nstates, row_ptr, edge_child, edge_act, term_flags):
    """Depth-first search for a cycle among non-terminated states.

    Operates on the CSR arrays the checker's sweep produced: the edges of
    expanded state s are rows [row_ptr[s], row_ptr[s+1]); states beyond
    len(row_ptr)-1 were discovered but not expanded (truncated sweep) and
    count as edgeless.  Returns (stem_codes, cycle_codes) of packed action
    codes, or None when the non-terminated subgraph is acyclic.  Iterative,
    because state graphs are deep.
    """
    ns: cython.Py_ssize_t
    nrows: cython.Py_ssize_t
    depth: cython.Py_ssize_t
    sid: cython.Py_ssize_t
    cid: cython.Py_ssize_t
    pos: cython.Py_ssize_t
    at: cython.Py_ssize_t
    c: cython.int
    rp: cython.int[:]
    ec: cython.int[:]
    ea: cython.int[:]
    color: cython.uchar[:]
    term: cython.uchar[:]
    stack_id: cython.int[:]
    stack_pos: cython.int[:]
    stack_end: cython.int[:]
    path_act: cython.int[:]
    depth_at: cython.int[:]

    from array import array

    ns = nstates
    if ns == 0 or term_flags[0]:
        return None
    nrows = len(row_ptr) - 1
    rp = row_ptr
    ec = edge_child
    ea = edge_act
    term = term_flags
    color_b = bytearray(ns)  # 0 white, 1 on stack, 2 finished
    color = color_b
    stack_id_a = array("i", bytes(4 * (ns + 1)))
    stack_pos_a = array("i", bytes(4 * (ns + 1)))
    stack_end_a = array("i", bytes(4 * (ns + 1)))
    path_act_a = array("i", bytes(4 * (ns + 1)))
    depth_at_a = array("i", bytes(4 * ns))
    stack_id = stack_id_a
    stack_pos = stack_pos_a
    stack_end = stack_end_a
    path_act = path_act_a
    depth_at = depth_at_a

    color[0] = 1
    depth = 0
    stack_id[0] = 0
    stack_pos[0] = rp[0]
    stack_end[0] = rp[1] if nrows > 0 else 0
    depth_at[0] = 0

    while depth >= 0:
        pos = stack_pos[depth]
        if pos >= stack_end[depth]:
            color[stack_id[depth]] = 2
            depth -= 1
            continue
        stack_pos[depth] = pos + 1
        cid = ec[pos]
        if term[cid]:
            continue  # terminated subgraph is out of scope
        c = color[cid]
        if c == 1:
            at = depth_at[cid]
            stem = list(path_act_a[1:at + 1])
            cycle = list(path_act_a[at + 1:depth + 1])
            cycle.append(ea[pos])
            return stem, cycle
        if c == 0:
            color[cid] = 1
            depth += 1
            stack_id[depth] = cid
            if cid < nrows:
                stack_pos[depth] = rp[cid]
                stack_end[depth] = rp[cid + 1]
            else:  # beyond a truncated sweep
                stack_pos[depth] = 0
                stack_end[depth] = 0
            path_act[depth] = ea[pos]
            depth_at[cid] = depth
    return None


def key_to_tuple(key, ctx):
    """Un-intern a kernel key into the canonical encode_state tuple."""
    values = ctx[_VALUES]
    n = key[0]
    out = [n]
    pos = 1
    for _ in range(n):
        out.extend(key[pos:pos + 6])
        has_ret = key[pos + 5]
        out.append(key[pos + 6])
        out.append(key[pos + 7])
        out.append(values[key[pos + 8]] if has_ret else 0)
        pos += 9
        out.extend(values[b] for b in key[pos:pos + n - 1])
        pos += n - 1
        cnt = key[pos]
        out.append(cnt)
        pos += 1
        for _ in range(cnt):
            out.append(key[pos])
            out.append(key[pos + 1])
            out.append(values[key[pos + 2]])
            pos += 3
    for _ in range(n):
        cnt = key[pos]
        out.append(cnt)
        pos += 1
        for _ in range(cnt):
            out.append(key[pos])
            out.append(key[pos + 1])
            out.append(values[key[pos + 2]])
            pos += 3
    out.append(key[pos])
    return tuple(out)
