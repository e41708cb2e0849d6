"""Event-loop kernel for the stream simulator.

Written in Cython pure-Python mode: setup.py compiles this file into the
``rcstream._kernel`` extension, and the identical source runs interpreted
when the extension was not built.  Both modes produce bit-identical event
sequences: times are integer nanoseconds, every random draw comes from a
seeded ``random.Random`` stream, and events are totally ordered by
(time, insertion sequence).

The kernel knows nothing about the rest of the package; it is configured
with flat arrays (component kinds, service times, link tables, CSR
adjacency) by ``rcstream.engine``.
"""

from __future__ import annotations

import heapq
import random
from array import array

import cython

# Component kinds.
K_SOURCE = 0
K_OPERATOR = 1
K_SINK = 2

# Event kinds (3 bits of the packed payload).
EV_GEN = 0
EV_SER_DONE = 1
EV_ARR = 2
EV_SVC_DONE = 3
EV_POLL = 4
EV_NIMBUS = 5
EV_DELIVER = 6

# Control plane (Storm-flavoured): dedicated 0.5 ms control hop, 0.1 ms
# back-pressure polling, 0.05 ms stall per emitted back-pressure signal.
CONTROL_LATENCY_NS = 500_000
POLL_INTERVAL_NS = 100_000
SIGNAL_PENALTY_NS = 50_000

# Trace record codes (bit in trace_mask enables the record).
T_GEN = 0
T_SVC_START = 1
T_SVC_DONE = 2
T_ARR = 3
T_BP_ENTER = 4
T_BP_EXIT = 5
T_POLL = 6
T_FLUCT = 7
T_WINDOW = 8
T_SUSPEND = 9
T_RESUME = 10
T_FORGONE = 11
T_ARR_SINK = 12

ACTION_FRACTIONS = tuple((k + 1) / 10.0 for k in range(10))


def _pow2(n: cython.longlong) -> cython.longlong:
    p: cython.longlong = 1
    while p < n:
        p <<= 1
    return p


@cython.cclass
class EngineCore:
    now: cython.longlong
    n_events: cython.longlong
    n_comps: cython.Py_ssize_t
    n_links: cython.Py_ssize_t
    halted: cython.int
    jitter_on: cython.int
    trace_mask: cython.longlong
    fraction: cython.double
    fluct_lo: cython.double
    fluct_hi: cython.double
    tie_seq: cython.longlong

    kind: cython.longlong[:]
    svc_ns: cython.longlong[:]
    sel: cython.double[:]
    in_cap: cython.longlong[:]
    out_cap: cython.longlong[:]
    base_rate: cython.double[:]
    mult: cython.double[:]
    gen_interval: cython.longlong[:]
    gen_epoch: cython.longlong[:]

    link_src: cython.longlong[:]
    link_dst: cython.longlong[:]
    link_ser: cython.longlong[:]
    link_lat: cython.longlong[:]
    link_busy: cython.longlong[:]

    out_adj_start: cython.longlong[:]
    out_adj: cython.longlong[:]
    up_start: cython.longlong[:]
    up_list: cython.longlong[:]

    # Ring buffers, flattened; *_mask holds ring_size - 1 per owner.
    in_store: cython.longlong[:]
    in_base: cython.longlong[:]
    in_mask: cython.longlong[:]
    in_head: cython.longlong[:]
    in_len: cython.longlong[:]
    out_store_t: cython.longlong[:]
    out_store_l: cython.longlong[:]
    out_base: cython.longlong[:]
    out_mask: cython.longlong[:]
    out_head: cython.longlong[:]
    out_len: cython.longlong[:]
    wire_store: cython.longlong[:]
    wire_base: cython.longlong[:]
    wire_mask: cython.longlong[:]
    wire_head: cython.longlong[:]
    wire_len: cython.longlong[:]

    serving: cython.longlong[:]
    in_service_created: cython.longlong[:]
    pending_delay: cython.longlong[:]
    next_free: cython.longlong[:]
    blocked: cython.longlong[:]
    pend_created: cython.longlong[:]
    pend_nout: cython.longlong[:]
    suspend_count: cython.longlong[:]
    own_flag: cython.longlong[:]
    poll_active: cython.longlong[:]
    in_bp_union: cython.longlong[:]
    union_since: cython.longlong[:]
    sel_accum: cython.double[:]

    # Cumulative counters.
    c_gen: cython.longlong[:]
    c_forgone_susp: cython.longlong[:]
    c_forgone_full: cython.longlong[:]
    c_arr: cython.longlong[:]
    c_dep: cython.longlong[:]
    c_proc: cython.longlong[:]
    c_emit: cython.longlong[:]
    c_bp: cython.longlong[:]
    c_lat: cython.longlong[:]
    c_enter: cython.longlong[:]
    c_exit: cython.longlong[:]
    l_sent: cython.longlong[:]
    l_arrived: cython.longlong[:]

    # Event heap: parallel arrays ordered by (time, seq); the interpreted
    # fallback uses heapq over tuples instead (same total order).
    heap_t: cython.longlong[:]
    heap_s: cython.longlong[:]
    heap_p: cython.longlong[:]
    heap_len: cython.Py_ssize_t
    heap_cap: cython.Py_ssize_t
    ev_t: cython.longlong
    ev_p: cython.longlong

    pyheap: object
    trace: object
    rng_fluct: object
    rng_jitter: object

    def __init__(self, kinds, svc_ns, sel, in_cap, out_cap, base_rate,
                 link_src, link_dst, link_ser_ns, link_lat_ns,
                 out_adj_start, out_adj, up_start, up_list,
                 seed, fluct_lo=0.7, fluct_hi=1.3, jitter_on=0, trace_mask=0):
        n = len(kinds)
        m = len(link_src)
        self.n_comps = n
        self.n_links = m
        self.now = 0
        self.n_events = 0
        self.halted = 0
        self.jitter_on = jitter_on
        self.trace_mask = trace_mask
        self.fraction = 1.0
        self.fluct_lo = fluct_lo
        self.fluct_hi = fluct_hi
        self.tie_seq = 0

        self.kind = array("q", [int(x) for x in kinds])
        self.svc_ns = array("q", [int(x) for x in svc_ns])
        self.sel = array("d", [float(x) for x in sel])
        self.in_cap = array("q", [int(x) for x in in_cap])
        self.out_cap = array("q", [int(x) for x in out_cap])
        self.base_rate = array("d", [float(x) for x in base_rate])
        self.mult = array("d", [1.0] * n)
        self.gen_interval = array("q", [0] * n)
        self.gen_epoch = array("q", [0] * n)

        self.link_src = array("q", [int(x) for x in link_src])
        self.link_dst = array("q", [int(x) for x in link_dst])
        self.link_ser = array("q", [int(x) for x in link_ser_ns])
        self.link_lat = array("q", [int(x) for x in link_lat_ns])
        self.link_busy = array("q", [0] * max(m, 1))

        self.out_adj_start = array("q", [int(x) for x in out_adj_start])
        self.out_adj = array("q", [int(x) for x in out_adj] or [0])
        self.up_start = array("q", [int(x) for x in up_start])
        self.up_list = array("q", [int(x) for x in up_list] or [0])

        # Ring sizing: incoming queues overshoot their capacity by at most the
        # tuples in flight plus those emitted before a suspension lands, which
        # is bounded per link by the propagation window over the serialization
        # time.  Sized with ample slack; overflow raises instead of corrupting.
        in_sizes = []
        for c in range(n):
            slack = 64
            for l in range(m):
                if int(link_dst[l]) == c:
                    ser = max(1, int(link_ser_ns[l]))
                    window = 2 * (int(link_lat_ns[l]) + 2 * CONTROL_LATENCY_NS + 2_000_000)
                    slack += window // ser + 16
            in_sizes.append(_pow2(int(in_cap[c]) + slack))
        out_sizes = [_pow2(int(out_cap[c]) + 8) for c in range(n)]
        wire_sizes = []
        for l in range(m):
            ser = max(1, int(link_ser_ns[l]))
            wire_sizes.append(_pow2(int(link_lat_ns[l]) // ser + 16))

        self.in_base = array("q", [0] * n)
        self.in_mask = array("q", [0] * n)
        self.out_base = array("q", [0] * n)
        self.out_mask = array("q", [0] * n)
        self.wire_base = array("q", [0] * max(m, 1))
        self.wire_mask = array("q", [0] * max(m, 1))
        tot = 0
        for c in range(n):
            self.in_base[c] = tot
            self.in_mask[c] = in_sizes[c] - 1
            tot += in_sizes[c]
        self.in_store = array("q", [0] * tot)
        tot = 0
        for c in range(n):
            self.out_base[c] = tot
            self.out_mask[c] = out_sizes[c] - 1
            tot += out_sizes[c]
        self.out_store_t = array("q", [0] * tot)
        self.out_store_l = array("q", [0] * tot)
        tot = 0
        for l in range(m):
            self.wire_base[l] = tot
            self.wire_mask[l] = wire_sizes[l] - 1
            tot += wire_sizes[l]
        self.wire_store = array("q", [0] * max(tot, 1))

        zeros = [0] * n
        self.in_head = array("q", zeros)
        self.in_len = array("q", zeros)
        self.out_head = array("q", zeros)
        self.out_len = array("q", zeros)
        self.wire_head = array("q", [0] * max(m, 1))
        self.wire_len = array("q", [0] * max(m, 1))
        self.serving = array("q", zeros)
        self.in_service_created = array("q", zeros)
        self.pending_delay = array("q", zeros)
        self.next_free = array("q", zeros)
        self.blocked = array("q", zeros)
        self.pend_created = array("q", zeros)
        self.pend_nout = array("q", zeros)
        self.suspend_count = array("q", zeros)
        self.own_flag = array("q", zeros)
        self.poll_active = array("q", zeros)
        self.in_bp_union = array("q", zeros)
        self.union_since = array("q", zeros)
        self.sel_accum = array("d", [0.0] * n)

        self.c_gen = array("q", zeros)
        self.c_forgone_susp = array("q", zeros)
        self.c_forgone_full = array("q", zeros)
        self.c_arr = array("q", zeros)
        self.c_dep = array("q", zeros)
        self.c_proc = array("q", zeros)
        self.c_emit = array("q", zeros)
        self.c_bp = array("q", zeros)
        self.c_lat = array("q", zeros)
        self.c_enter = array("q", zeros)
        self.c_exit = array("q", zeros)
        self.l_sent = array("q", [0] * max(m, 1))
        self.l_arrived = array("q", [0] * max(m, 1))

        self.heap_cap = 8192
        self.heap_len = 0
        self.heap_t = array("q", [0] * self.heap_cap)
        self.heap_s = array("q", [0] * self.heap_cap)
        self.heap_p = array("q", [0] * self.heap_cap)
        self.pyheap = []
        self.trace = []

        base = (int(seed) & 0x7FFFFFFFFFFFFFFF)
        self.rng_fluct = random.Random((base * 0x9E3779B97F4A7C15 + 0x1234567) & 0x7FFFFFFFFFFFFFFF)
        self.rng_jitter = random.Random((base * 0xC2B2AE3D27D4EB4F + 0x89ABCDE) & 0x7FFFFFFFFFFFFFFF)

        for c in range(n):
            if int(kinds[c]) == K_SOURCE:
                self._reschedule_gen(c)

    # ------------------------------------------------------------------
    # Event heap

    @cython.cfunc
    def _push(self, t: cython.longlong, p: cython.longlong):
        seq: cython.longlong = self.tie_seq
        self.tie_seq = seq + 1
        if cython.compiled:
            i: cython.Py_ssize_t = self.heap_len
            if i >= self.heap_cap:
                self._grow_heap()
            ht = self.heap_t
            hs = self.heap_s
            hp = self.heap_p
            ht[i] = t
            hs[i] = seq
            hp[i] = p
            self.heap_len = i + 1
            while i > 0:
                parent: cython.Py_ssize_t = (i - 1) >> 1
                if ht[parent] < t or (ht[parent] == t and hs[parent] < seq):
                    break
                ht[i] = ht[parent]
                hs[i] = hs[parent]
                hp[i] = hp[parent]
                i = parent
            ht[i] = t
            hs[i] = seq
            hp[i] = p
        else:
            heapq.heappush(self.pyheap, (t, seq, p))

    def _grow_heap(self):
        new_cap = self.heap_cap * 2
        nt = array("q", [0] * new_cap)
        ns = array("q", [0] * new_cap)
        np_ = array("q", [0] * new_cap)
        for i in range(self.heap_len):
            nt[i] = self.heap_t[i]
            ns[i] = self.heap_s[i]
            np_[i] = self.heap_p[i]
        self.heap_t = nt
        self.heap_s = ns
        self.heap_p = np_
        self.heap_cap = new_cap

    @cython.cfunc
    def _pop(self):
        if cython.compiled:
            ht = self.heap_t
            hs = self.heap_s
            hp = self.heap_p
            self.ev_t = ht[0]
            self.ev_p = hp[0]
            n: cython.Py_ssize_t = self.heap_len - 1
            self.heap_len = n
            if n == 0:
                return
            t: cython.longlong = ht[n]
            s: cython.longlong = hs[n]
            p: cython.longlong = hp[n]
            i: cython.Py_ssize_t = 0
            while True:
                child: cython.Py_ssize_t = 2 * i + 1
                if child >= n:
                    break
                right: cython.Py_ssize_t = child + 1
                if right < n and (ht[right] < ht[child] or
                                  (ht[right] == ht[child] and hs[right] < hs[child])):
                    child = right
                if ht[child] < t or (ht[child] == t and hs[child] < s):
                    ht[i] = ht[child]
                    hs[i] = hs[child]
                    hp[i] = hp[child]
                    i = child
                else:
                    break
            ht[i] = t
            hs[i] = s
            hp[i] = p
        else:
            t, _, p = heapq.heappop(self.pyheap)
            self.ev_t = t
            self.ev_p = p

    @cython.cfunc
    def _heap_empty(self) -> cython.int:
        if cython.compiled:
            return 1 if self.heap_len == 0 else 0
        return 1 if not self.pyheap else 0

    @cython.cfunc
    def _peek_time(self) -> cython.longlong:
        if cython.compiled:
            return self.heap_t[0]
        return self.pyheap[0][0]

    @cython.cfunc
    def _schedule(self, dt: cython.longlong, kind: cython.longlong,
                  idx: cython.longlong, extra: cython.longlong):
        self._push(self.now + dt, kind | (idx << 3) | (extra << 24))

    # ------------------------------------------------------------------
    # Tracing

    @cython.cfunc
    def _trace(self, code: cython.longlong, comp: cython.longlong,
               a: cython.longlong, b: cython.longlong):
        if self.trace_mask & (1 << code):
            self.trace.append((self.now, code, comp, a, b))

    # ------------------------------------------------------------------
    # Queue primitives

    @cython.cfunc
    def _in_push(self, c: cython.longlong, created: cython.longlong):
        if self.in_len[c] > self.in_mask[c]:
            raise RuntimeError("incoming ring overflow")
        self.in_store[self.in_base[c] + ((self.in_head[c] + self.in_len[c]) & self.in_mask[c])] = created
        self.in_len[c] = self.in_len[c] + 1

    @cython.cfunc
    def _in_pop(self, c: cython.longlong) -> cython.longlong:
        v: cython.longlong = self.in_store[self.in_base[c] + (self.in_head[c] & self.in_mask[c])]
        self.in_head[c] = (self.in_head[c] + 1) & self.in_mask[c]
        self.in_len[c] = self.in_len[c] - 1
        return v

    @cython.cfunc
    def _out_push(self, c: cython.longlong, created: cython.longlong, link: cython.longlong):
        pos: cython.longlong = self.out_base[c] + ((self.out_head[c] + self.out_len[c]) & self.out_mask[c])
        self.out_store_t[pos] = created
        self.out_store_l[pos] = link
        self.out_len[c] = self.out_len[c] + 1

    @cython.cfunc
    def _wire_push(self, l: cython.longlong, created: cython.longlong):
        if self.wire_len[l] > self.wire_mask[l]:
            raise RuntimeError("wire ring overflow")
        self.wire_store[self.wire_base[l] + ((self.wire_head[l] + self.wire_len[l]) & self.wire_mask[l])] = created
        self.wire_len[l] = self.wire_len[l] + 1

    @cython.cfunc
    def _wire_pop(self, l: cython.longlong) -> cython.longlong:
        v: cython.longlong = self.wire_store[self.wire_base[l] + (self.wire_head[l] & self.wire_mask[l])]
        self.wire_head[l] = (self.wire_head[l] + 1) & self.wire_mask[l]
        self.wire_len[l] = self.wire_len[l] - 1
        return v

    # ------------------------------------------------------------------
    # Back-pressure bookkeeping

    @cython.cfunc
    def _union_update(self, c: cython.longlong):
        cur: cython.longlong = 1 if (self.own_flag[c] != 0 or self.suspend_count[c] > 0) else 0
        if cur != self.in_bp_union[c]:
            if cur:
                self.union_since[c] = self.now
            else:
                self.c_bp[c] = self.c_bp[c] + (self.now - self.union_since[c])
            self.in_bp_union[c] = cur

    @cython.cfunc
    def _signal_penalty(self, c: cython.longlong):
        # Emitting a back-pressure signal stalls the component for 0.05 ms.
        if self.serving[c]:
            self.pending_delay[c] = self.pending_delay[c] + SIGNAL_PENALTY_NS
        else:
            base: cython.longlong = self.next_free[c]
            if base < self.now:
                base = self.now
            self.next_free[c] = base + SIGNAL_PENALTY_NS

    @cython.cfunc
    def _ensure_poll(self, c: cython.longlong):
        if not self.poll_active[c]:
            self.poll_active[c] = 1
            self._schedule(POLL_INTERVAL_NS, EV_POLL, c, 0)

    # ------------------------------------------------------------------
    # Emission

    @cython.cfunc
    def _try_emit(self, u: cython.longlong):
        if self.suspend_count[u] > 0:
            if self.out_len[u] > 0 or self.blocked[u]:
                self._ensure_poll(u)
            return
        while self.out_len[u] > 0:
            pos: cython.longlong = self.out_base[u] + (self.out_head[u] & self.out_mask[u])
            l: cython.longlong = self.out_store_l[pos]
            if self.link_busy[l]:
                break
            created: cython.longlong = self.out_store_t[pos]
            self.out_head[u] = (self.out_head[u] + 1) & self.out_mask[u]
            self.out_len[u] = self.out_len[u] - 1
            self.link_busy[l] = 1
            self._wire_push(l, created)
            self.c_dep[u] = self.c_dep[u] + 1
            self.l_sent[l] = self.l_sent[l] + 1
            ser: cython.longlong = self.link_ser[l]
            self._schedule(ser, EV_SER_DONE, l, 0)
            self._schedule(ser + self.link_lat[l], EV_ARR, l, 0)

    @cython.cfunc
    def _maybe_unblock(self, u: cython.longlong):
        if not self.blocked[u]:
            return
        n_links: cython.longlong = self.out_adj_start[u + 1] - self.out_adj_start[u]
        need: cython.longlong = self.pend_nout[u] * n_links
        space: cython.longlong = self.out_mask[u] + 1 - self.out_len[u]
        cap_space: cython.longlong = self.out_cap[u] - self.out_len[u]
        if cap_space < need or space < need:
            return
        created: cython.longlong = self.pend_created[u]
        i: cython.longlong
        j: cython.longlong
        for i in range(self.pend_nout[u]):
            for j in range(self.out_adj_start[u], self.out_adj_start[u + 1]):
                self._out_push(u, created, self.out_adj[j])
        self.c_emit[u] = self.c_emit[u] + need
        self.blocked[u] = 0
        self.pend_nout[u] = 0
        self._try_emit(u)
        self._try_start_service(u)

    # ------------------------------------------------------------------
    # Service

    @cython.cfunc
    def _try_start_service(self, v: cython.longlong):
        if self.kind[v] == K_SOURCE or self.serving[v] or self.blocked[v] or self.in_len[v] == 0:
            return
        created: cython.longlong = self._in_pop(v)
        self.serving[v] = 1
        self.in_service_created[v] = created
        self._trace(T_SVC_START, v, self.in_len[v], 0)
        if self.own_flag[v] and self.in_len[v] < self.in_cap[v]:
            self.own_flag[v] = 0
            self.c_exit[v] = self.c_exit[v] + 1
            self._trace(T_BP_EXIT, v, self.in_len[v], 0)
            self._signal_penalty(v)
            self._schedule(CONTROL_LATENCY_NS, EV_NIMBUS, v, 0)
            self._union_update(v)
        t0: cython.longlong = self.next_free[v]
        if t0 < self.now:
            t0 = self.now
        svc: cython.longlong = self.svc_ns[v]
        if self.jitter_on:
            svc = int(svc * (0.95 + 0.1 * self.rng_jitter.random()))
        self._push(t0 + svc, EV_SVC_DONE | (v << 3))

    @cython.cfunc
    def _on_svc_done(self, v: cython.longlong):
        if self.pending_delay[v] > 0:
            d: cython.longlong = self.pending_delay[v]
            self.pending_delay[v] = 0
            self._schedule(d, EV_SVC_DONE, v, 0)
            return
        self.serving[v] = 0
        created: cython.longlong = self.in_service_created[v]
        self.c_proc[v] = self.c_proc[v] + 1
        self._trace(T_SVC_DONE, v, 0, 0)
        if self.kind[v] == K_SINK:
            self.c_lat[v] = self.c_lat[v] + (self.now - created)
            self._try_start_service(v)
            return
        self.sel_accum[v] = self.sel_accum[v] + self.sel[v]
        nout: cython.longlong = int(self.sel_accum[v])
        if nout > 0:
            self.sel_accum[v] = self.sel_accum[v] - nout
            n_links: cython.longlong = self.out_adj_start[v + 1] - self.out_adj_start[v]
            need: cython.longlong = nout * n_links
            cap_space: cython.longlong = self.out_cap[v] - self.out_len[v]
            if cap_space < need:
                self.blocked[v] = 1
                self.pend_created[v] = created
                self.pend_nout[v] = nout
                return
            i: cython.longlong
            j: cython.longlong
            for i in range(nout):
                for j in range(self.out_adj_start[v], self.out_adj_start[v + 1]):
                    self._out_push(v, created, self.out_adj[j])
            self.c_emit[v] = self.c_emit[v] + need
            self._try_emit(v)
        self._try_start_service(v)

    # ------------------------------------------------------------------
    # Generation

    @cython.cfunc
    def _reschedule_gen(self, s: cython.longlong):
        rate: cython.double = self.base_rate[s] * self.mult[s] * self.fraction
        self.gen_interval[s] = int(1e9 / rate + 0.5)
        self.gen_epoch[s] = self.gen_epoch[s] + 1
        self._schedule(self.gen_interval[s], EV_GEN, s, self.gen_epoch[s] & 0x7FFFFFFF)

    @cython.cfunc
    def _on_gen(self, s: cython.longlong, epoch: cython.longlong):
        if epoch != (self.gen_epoch[s] & 0x7FFFFFFF):
            return
        self._schedule(self.gen_interval[s], EV_GEN, s, epoch)
        if self.halted:
            return
        if self.suspend_count[s] > 0:
            self.c_forgone_susp[s] = self.c_forgone_susp[s] + 1
            self._trace(T_FORGONE, s, 1, 0)
            return
        n_links: cython.longlong = self.out_adj_start[s + 1] - self.out_adj_start[s]
        if self.out_cap[s] - self.out_len[s] < n_links:
            self.c_forgone_full[s] = self.c_forgone_full[s] + 1
            self._trace(T_FORGONE, s, 2, 0)
            return
        self.c_gen[s] = self.c_gen[s] + 1
        j: cython.longlong
        for j in range(self.out_adj_start[s], self.out_adj_start[s + 1]):
            self._out_push(s, self.now, self.out_adj[j])
        self.c_emit[s] = self.c_emit[s] + n_links
        self._trace(T_GEN, s, self.c_gen[s], 0)
        self._try_emit(s)

    # ------------------------------------------------------------------
    # Link + back-pressure events

    @cython.cfunc
    def _on_ser_done(self, l: cython.longlong):
        self.link_busy[l] = 0
        u: cython.longlong = self.link_src[l]
        if self.suspend_count[u] == 0:
            self._try_emit(u)
        self._maybe_unblock(u)

    @cython.cfunc
    def _on_arrival(self, l: cython.longlong):
        created: cython.longlong = self._wire_pop(l)
        v: cython.longlong = self.link_dst[l]
        self.l_arrived[l] = self.l_arrived[l] + 1
        self.c_arr[v] = self.c_arr[v] + 1
        self._in_push(v, created)
        self._trace(T_ARR, v, l, self.in_len[v])
        if self.kind[v] == K_SINK:
            self._trace(T_ARR_SINK, v, l, self.in_len[v])
        if self.in_len[v] > self.in_cap[v] and not self.own_flag[v]:
            self.own_flag[v] = 1
            self.c_enter[v] = self.c_enter[v] + 1
            self._trace(T_BP_ENTER, v, self.in_len[v], self.wire_len[l])
            self._signal_penalty(v)
            self._schedule(CONTROL_LATENCY_NS, EV_NIMBUS, v, 1)
            self._union_update(v)
        self._try_start_service(v)

    @cython.cfunc
    def _on_nimbus(self, v: cython.longlong, enter: cython.longlong):
        j: cython.longlong
        for j in range(self.up_start[v], self.up_start[v + 1]):
            self._schedule(CONTROL_LATENCY_NS, EV_DELIVER, self.up_list[j], enter)

    @cython.cfunc
    def _on_deliver(self, u: cython.longlong, enter: cython.longlong):
        if enter:
            self.suspend_count[u] = self.suspend_count[u] + 1
            self._trace(T_SUSPEND, u, self.suspend_count[u], 0)
            if self.suspend_count[u] == 1:
                self._union_update(u)
            if self.kind[u] != K_SOURCE and (self.out_len[u] > 0 or self.blocked[u]):
                self._ensure_poll(u)
        else:
            self.suspend_count[u] = self.suspend_count[u] - 1
            self._trace(T_RESUME, u, self.suspend_count[u], 0)
            if self.suspend_count[u] == 0:
                self._union_update(u)

    @cython.cfunc
    def _on_poll(self, u: cython.longlong):
        self._trace(T_POLL, u, self.suspend_count[u], 0)
        if self.suspend_count[u] > 0:
            self._schedule(POLL_INTERVAL_NS, EV_POLL, u, 0)
            return
        self.poll_active[u] = 0
        self._try_emit(u)
        self._maybe_unblock(u)

    # ------------------------------------------------------------------
    # Public API

    def advance_ns(self, duration_ns):
        t_end: cython.longlong = self.now + duration_ns
        count: cython.longlong = 0
        while not self._heap_empty() and self._peek_time() <= t_end:
            self._pop()
            self.now = self.ev_t
            p: cython.longlong = self.ev_p
            ev: cython.longlong = p & 7
            idx: cython.longlong = (p >> 3) & 0x1FFFFF
            extra: cython.longlong = p >> 24
            count += 1
            if ev == EV_ARR:
                self._on_arrival(idx)
            elif ev == EV_SER_DONE:
                self._on_ser_done(idx)
            elif ev == EV_SVC_DONE:
                self._on_svc_done(idx)
            elif ev == EV_GEN:
                self._on_gen(idx, extra)
            elif ev == EV_POLL:
                self._on_poll(idx)
            elif ev == EV_NIMBUS:
                self._on_nimbus(idx, extra)
            else:
                self._on_deliver(idx, extra)
        self.now = t_end
        self.n_events += count
        return count

    def set_throttle(self, fraction):
        ok = False
        for f in ACTION_FRACTIONS:
            if abs(fraction - f) < 1e-9:
                ok = True
                fraction = f
                break
        if not ok:
            raise ValueError(f"throttle fraction outside action set: {fraction}")
        self.fraction = fraction
        c: cython.longlong
        for c in range(self.n_comps):
            if self.kind[c] == K_SOURCE:
                self._reschedule_gen(c)

    def resample_fluctuation(self):
        out = []
        c: cython.longlong
        for c in range(self.n_comps):
            if self.kind[c] == K_SOURCE:
                self.mult[c] = self.rng_fluct.uniform(self.fluct_lo, self.fluct_hi)
                self._reschedule_gen(c)
                out.append(self.mult[c])
                self._trace(T_FLUCT, c, int(self.mult[c] * 1e9), 0)
        return out

    def halt_sources(self):
        # Kills the generation chains outright (stale epochs are dropped).
        self.halted = 1
        c: cython.longlong
        for c in range(self.n_comps):
            self.gen_epoch[c] = self.gen_epoch[c] + 1

    def mark_window(self, index):
        self._trace(T_WINDOW, -1, index, 0)

    def accrue_bp(self):
        c: cython.longlong
        for c in range(self.n_comps):
            if self.in_bp_union[c]:
                self.c_bp[c] = self.c_bp[c] + (self.now - self.union_since[c])
                self.union_since[c] = self.now

    def get_now(self):
        return self.now

    def get_event_count(self):
        return self.n_events

    def get_fraction(self):
        return self.fraction

    def source_rates(self):
        out = {}
        for c in range(self.n_comps):
            if self.kind[c] == K_SOURCE:
                out[c] = (self.base_rate[c], self.mult[c], self.fraction,
                          self.base_rate[c] * self.mult[c] * self.fraction)
        return out

    def counters(self):
        """Cumulative per-component counters (bp time accrued to now)."""
        self.accrue_bp()
        out = []
        for c in range(self.n_comps):
            out.append({
                "generated": self.c_gen[c],
                "forgone_suspended": self.c_forgone_susp[c],
                "forgone_full": self.c_forgone_full[c],
                "arrivals": self.c_arr[c],
                "departures": self.c_dep[c],
                "processed": self.c_proc[c],
                "emitted": self.c_emit[c],
                "bp_ns": self.c_bp[c],
                "latency_ns": self.c_lat[c],
                "enter_signals": self.c_enter[c],
                "exit_signals": self.c_exit[c],
                "in_queue": self.in_len[c],
                "out_queue": self.out_len[c],
                "serving": self.serving[c],
                "blocked": self.blocked[c],
                "pending_out": self.pend_nout[c],
                "suspend_count": self.suspend_count[c],
                "own_flag": self.own_flag[c],
                "sel_accum": self.sel_accum[c],
            })
        return out

    def link_state(self):
        out = []
        for l in range(self.n_links):
            out.append({
                "sent": self.l_sent[l],
                "arrived": self.l_arrived[l],
                "in_flight": self.wire_len[l],
                "busy": self.link_busy[l],
            })
        return out

    def trace_rows(self):
        return self.trace

    def clear_trace(self):
        self.trace = []


def is_compiled():
    return bool(cython.compiled)
