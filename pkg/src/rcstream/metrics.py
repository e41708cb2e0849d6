"""Windowed metrics: per-component state features, throughput and latency.

A WindowCollector diffs the engine's cumulative counters at window
boundaries; downstream code (environment, baselines, CSV export) only sees
window-relative values.  Count features are normalized by each component's
unthrottled fluid demand so one policy sees the same scale on any topology.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from rcstream import topology as topo
from rcstream.engine import Engine

FEATURE_DIM = 8
EDGE_FEATURE_DIM = 2
REFERENCE_BANDWIDTH = 100_000_000.0
REFERENCE_LATENCY_S = 0.0005
REFERENCE_CAPACITY = 64.0


@dataclass(frozen=True)
class ThroughputReport:
    thr: float              # tuples/s over the window
    mean_latency_s: float   # source-to-sink, averaged over completions
    bp_time_s: float        # summed back-pressure time across components


@dataclass(frozen=True)
class MetricsWindow:
    K: float
    components: dict  # id -> {"kind": ..., metric name: value}

    def __getitem__(self, cid: str) -> dict:
        return self.components[cid]

    def __contains__(self, cid: str) -> bool:
        return cid in self.components


def demand_rates(spec: topo.TopologySpec) -> dict[str, float]:
    """Unthrottled arrival rate at every component (tuples/s), sources at r_g."""
    out = {c.id: 0.0 for c in spec.components}
    for cid in topo.topological_order(spec):
        c = spec.component(cid)
        if c.kind == topo.SOURCE:
            out[cid] = c.rate
            emitted = c.rate
        elif c.kind == topo.OPERATOR:
            emitted = out[cid] * c.selectivity
        else:
            continue
        for l in spec.out_links(cid):
            out[l.dst] += emitted
    return out


class WindowCollector:
    """Snapshots engine counters and produces window-relative MetricsWindows."""

    def __init__(self, engine: Engine):
        self.engine = engine
        self.spec = engine.spec
        self._prev = engine.counters()
        self._index = 0

    def collect(self, K: float) -> MetricsWindow:
        cur = self.engine.counters()
        rates = self.engine.source_state()
        comps: dict = {}
        for c in self.spec.components:
            prev = self._prev[c.id]
            now = cur[c.id]
            bk = (now["bp_ns"] - prev["bp_ns"]) / 1e9
            if c.kind == topo.SOURCE:
                st = rates[c.id]
                r_g = st["base_rate"] * st["fluctuation_multiplier"]
                comps[c.id] = {
                    "kind": c.kind,
                    "r_g": r_g,
                    "r_c": st["current_rate"],
                    "src_bk": bk,
                    "src_out": now["departures"] - prev["departures"],
                    "src_max": c.queue_capacity,
                }
            elif c.kind == topo.OPERATOR:
                comps[c.id] = {
                    "kind": c.kind,
                    "op_in": now["arrivals"] - prev["arrivals"],
                    "op_out": now["departures"] - prev["departures"],
                    "op_max_out": c.queue_capacity,
                    "op_max_in": c.queue_capacity,
                    "op_bk": bk,
                }
            else:
                comps[c.id] = {
                    "kind": c.kind,
                    "sk_bk": bk,
                    "sk_in": now["arrivals"] - prev["arrivals"],
                    "sk_max_in": c.queue_capacity,
                    "sk_l": (now["latency_ns"] - prev["latency_ns"]) / 1e9,
                    "sk_p": now["processed"] - prev["processed"],
                }
        self._prev = cur
        self.engine.mark_window(self._index)
        self._index += 1
        return MetricsWindow(K=K, components=comps)


def throughput(window: MetricsWindow) -> float:
    """Sink completions per second: sum of sk_p over sinks divided by K."""
    total = sum(m["sk_p"] for m in window.components.values() if m["kind"] == topo.SINK)
    return total / window.K


def mean_latency(window: MetricsWindow) -> float:
    """Source-to-sink latency per completed tuple; 0 with no completions."""
    sk_p = sum(m["sk_p"] for m in window.components.values() if m["kind"] == topo.SINK)
    sk_l = sum(m["sk_l"] for m in window.components.values() if m["kind"] == topo.SINK)
    return sk_l / sk_p if sk_p else 0.0


def bp_time_total(window: MetricsWindow) -> float:
    total = 0.0
    for m in window.components.values():
        total += m.get("src_bk") or m.get("op_bk") or m.get("sk_bk") or 0.0
    return total


def report(window: MetricsWindow) -> ThroughputReport:
    return ThroughputReport(throughput(window), mean_latency(window), bp_time_total(window))


def node_features(window: MetricsWindow, cid: str, spec: topo.TopologySpec,
                  max_rate: float | None = None,
                  demands: dict[str, float] | None = None) -> list[float]:
    """Kind one-hot plus five normalized metrics; length 8 for every kind."""
    if cid not in window:
        raise KeyError(cid)
    m = window[cid]
    K = window.K
    if demands is None:
        demands = demand_rates(spec)
    if max_rate is None:
        max_rate = max(c.rate for c in spec.sources)
    c = spec.component(cid)
    scale = max(demands[cid], 1e-9) * K  # expected unthrottled count per window
    if m["kind"] == topo.SOURCE:
        r_g = m["r_g"]
        vec = [1.0, 0.0, 0.0,
               r_g / max_rate,
               m["r_c"] / r_g if r_g else 0.0,
               m["src_bk"] / K,
               m["src_out"] / scale,
               m["src_max"] / REFERENCE_CAPACITY]
    elif m["kind"] == topo.OPERATOR:
        out_scale = max(demands[cid] * c.selectivity * len(spec.out_links(cid)), 1e-9) * K
        vec = [0.0, 1.0, 0.0,
               m["op_in"] / scale,
               m["op_out"] / out_scale,
               m["op_max_out"] / REFERENCE_CAPACITY,
               m["op_max_in"] / REFERENCE_CAPACITY,
               m["op_bk"] / K]
    else:
        vec = [0.0, 0.0, 1.0,
               m["sk_bk"] / K,
               m["sk_in"] / scale,
               m["sk_max_in"] / REFERENCE_CAPACITY,
               m["sk_l"] / (m["sk_p"] * K) if m["sk_p"] else 0.0,
               m["sk_p"] / scale]
    return vec


def edge_features(spec: topo.TopologySpec, link: topo.LinkSpec) -> list[float]:
    return [link.bandwidth_bps / REFERENCE_BANDWIDTH,
            link.latency_s / REFERENCE_LATENCY_S]


CSV_HEADER = ["window_index", "thr", "mean_latency", "bp_time_total", "action"]


def write_windows_csv(path, rows) -> None:
    """Rows of (window_index, ThroughputReport, action)."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for index, rep, action in rows:
            w.writerow([index, repr(rep.thr), repr(rep.mean_latency_s),
                        repr(rep.bp_time_s), action])


def read_windows_csv(path) -> list[tuple[int, ThroughputReport, str]]:
    out = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        assert header == CSV_HEADER, f"unexpected csv header: {header}"
        for row in r:
            out.append((int(row[0]),
                        ThroughputReport(float(row[1]), float(row[2]), float(row[3])),
                        row[4]))
    return out
