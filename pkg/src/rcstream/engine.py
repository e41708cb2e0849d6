"""Deterministic discrete-event execution of a topology.

Wraps the kernel with the topology-level surface: component ids instead of
indices, seconds at the boundary (nanoseconds inside), event-trace decoding
and the back-pressure/throttle controls.  One Engine owns one simulation and
is single-threaded; independent engines do not share state.
"""

from __future__ import annotations

from dataclasses import dataclass

from rcstream import topology as topo
from rcstream.kernel import EngineCore, KERNEL_IMPL

# Event kinds as they appear in exported traces.
TRACE_KINDS = {
    0: "TupleGeneration",
    1: "ServiceStart",
    2: "ServiceCompletion",
    3: "LinkArrival",
    4: "BpEnterSignal",
    5: "BpExitSignal",
    6: "BpPoll",
    7: "RateFluctuation",
    8: "WindowBoundary",
    9: "BpSuspend",
    10: "BpResume",
    11: "GenerationForgone",
    12: "SinkArrival",
}
TRACE_CODES = {name: code for code, name in TRACE_KINDS.items()}

CONTROL_LATENCY_S = 500_000 / 1e9
POLL_INTERVAL_S = 100_000 / 1e9
SIGNAL_PENALTY_S = 50_000 / 1e9


def trace_mask(*kind_names: str) -> int:
    mask = 0
    for name in kind_names:
        mask |= 1 << TRACE_CODES[name]
    return mask

FULL_TRACE_MASK = (1 << len(TRACE_KINDS)) - 1


@dataclass(frozen=True)
class TupleRecord:
    id: int
    created_at_ns: int
    size_bits: int


@dataclass(frozen=True)
class TraceEvent:
    time_ns: int
    kind: str
    component: str
    a: int
    b: int

    def line(self) -> str:
        return f"{self.time_ns} {self.kind} {self.component} {self.a}:{self.b}"


class Engine:
    """Event-driven simulation of one validated TopologySpec."""

    def __init__(self, spec: topo.TopologySpec, seed: int, *,
                 fluct_range: tuple[float, float] = (0.7, 1.3),
                 jitter: bool = False,
                 trace: int | bool = 0,
                 suspend_direct_upstream_only: bool = False):
        violations = topo.validate(spec)
        if violations:
            raise topo.TopologyValidationError(violations)
        self.spec = spec
        self.seed = seed
        self.ids = [c.id for c in spec.components]
        self.index = {cid: i for i, cid in enumerate(self.ids)}
        self.tuple_bits = spec.tuple_bytes * 8

        kinds = []
        svc_ns = []
        sel = []
        in_cap = []
        out_cap = []
        base_rate = []
        kind_code = {topo.SOURCE: 0, topo.OPERATOR: 1, topo.SINK: 2}
        for c in spec.components:
            kinds.append(kind_code[c.kind])
            svc_ns.append(int(c.service_s * 1e9 + 0.5))
            sel.append(c.selectivity if c.kind == topo.OPERATOR else 0.0)
            in_cap.append(c.queue_capacity)
            out_cap.append(c.queue_capacity)
            base_rate.append(c.rate)

        link_src = []
        link_dst = []
        link_ser = []
        link_lat = []
        self.links = list(spec.links)
        for l in spec.links:
            link_src.append(self.index[l.src])
            link_dst.append(self.index[l.dst])
            link_ser.append(max(1, int(self.tuple_bits / l.bandwidth_bps * 1e9 + 0.5)))
            link_lat.append(int(l.latency_s * 1e9 + 0.5))

        out_adj_start = [0]
        out_adj = []
        for cid in self.ids:
            for li, l in enumerate(spec.links):
                if l.src == cid:
                    out_adj.append(li)
            out_adj_start.append(len(out_adj))

        up_start = [0]
        up_list = []
        for cid in self.ids:
            if suspend_direct_upstream_only:
                ups = sorted(l.src for l in spec.in_links(cid))
            else:
                ups = sorted(topo.upstream_closure(spec, cid))
            for u in ups:
                up_list.append(self.index[u])
            up_start.append(len(up_list))

        mask = FULL_TRACE_MASK if trace is True else int(trace)
        self.core = EngineCore(
            kinds, svc_ns, sel, in_cap, out_cap, base_rate,
            link_src, link_dst, link_ser, link_lat,
            out_adj_start, out_adj, up_start, up_list,
            seed, fluct_range[0], fluct_range[1],
            1 if jitter else 0, mask,
        )

    # -- control ---------------------------------------------------------

    def advance(self, duration_s: float) -> int:
        if duration_s <= 0:
            raise ValueError("duration must be positive")
        return self.core.advance_ns(int(duration_s * 1e9 + 0.5))

    def set_throttle(self, fraction: float) -> None:
        self.core.set_throttle(fraction)

    def resample_fluctuation(self) -> list[float]:
        return self.core.resample_fluctuation()

    def halt_sources(self) -> None:
        self.core.halt_sources()

    def mark_window(self, index: int) -> None:
        self.core.mark_window(index)

    # -- observation ------------------------------------------------------

    @property
    def now_s(self) -> float:
        return self.core.get_now() / 1e9

    @property
    def now_ns(self) -> int:
        return self.core.get_now()

    @property
    def event_count(self) -> int:
        return self.core.get_event_count()

    @property
    def kernel_impl(self) -> str:
        return KERNEL_IMPL

    @property
    def throttle_fraction(self) -> float:
        return self.core.get_fraction()

    def source_state(self) -> dict[str, dict[str, float]]:
        out = {}
        for idx, (base, mult, frac, cur) in self.core.source_rates().items():
            out[self.ids[idx]] = {
                "base_rate": base,
                "fluctuation_multiplier": mult,
                "throttle_fraction": frac,
                "current_rate": cur,
            }
        return out

    def counters(self) -> dict[str, dict]:
        raw = self.core.counters()
        return {cid: raw[i] for i, cid in enumerate(self.ids)}

    def link_state(self) -> list[dict]:
        rows = self.core.link_state()
        for row, l in zip(rows, self.links):
            row["from"] = l.src
            row["to"] = l.dst
        return rows

    def queue_lengths(self) -> dict[str, tuple[int, int]]:
        raw = self.core.counters()
        return {cid: (raw[i]["in_queue"], raw[i]["out_queue"]) for i, cid in enumerate(self.ids)}

    # -- traces -----------------------------------------------------------

    def trace_events(self) -> list[TraceEvent]:
        out = []
        for t, code, comp, a, b in self.core.trace_rows():
            cid = self.ids[comp] if 0 <= comp < len(self.ids) else "-"
            out.append(TraceEvent(t, TRACE_KINDS[code], cid, a, b))
        return out

    def trace_lines(self) -> list[str]:
        return [ev.line() for ev in self.trace_events()]

    def clear_trace(self) -> None:
        self.core.clear_trace()


def init(spec: topo.TopologySpec, seed: int, **kwargs) -> Engine:
    """Fresh simulation state for a validated topology."""
    return Engine(spec, seed, **kwargs)


upstream_closure = topo.upstream_closure
