"""Fluid-model oracle: rate arithmetic over a topology, independent of the
event engine.  Used to predict stable-system throughput and utilizations."""

from __future__ import annotations

from rcstream import topology as topo


def flow_rates(spec: topo.TopologySpec, fraction: float = 1.0) -> dict:
    """Demand rates assuming no queueing losses.

    Returns {component id: arrival tuples/s} plus per-link copy rates under
    the keys (src, dst).  Sources contribute rate*fraction.
    """
    arrivals: dict = {c.id: 0.0 for c in spec.components}
    link_rate: dict = {}
    for cid in topo.topological_order(spec):
        c = spec.component(cid)
        if c.kind == topo.SOURCE:
            out = c.rate * fraction
        elif c.kind == topo.OPERATOR:
            out = arrivals[cid] * c.selectivity
        else:
            continue
        for l in spec.out_links(cid):
            arrivals[l.dst] += out
            link_rate[(l.src, l.dst)] = out
    arrivals.update(link_rate)
    return arrivals


def utilizations(spec: topo.TopologySpec, fraction: float = 1.0) -> dict:
    """Utilization of every operator, sink and link at the given fraction."""
    rates = flow_rates(spec, fraction)
    out: dict = {}
    for c in spec.components:
        if c.kind != topo.SOURCE:
            out[c.id] = rates[c.id] * c.service_s
    ser = spec.tuple_bytes * 8
    for l in spec.links:
        out[(l.src, l.dst)] = rates[(l.src, l.dst)] * ser / l.bandwidth_bps
    return out


def max_utilization(spec: topo.TopologySpec, fraction: float = 1.0) -> float:
    return max(utilizations(spec, fraction).values())


def stable_throughput(spec: topo.TopologySpec, fraction: float = 1.0) -> float:
    """Sink completion rate when every utilization is below 1."""
    rates = flow_rates(spec, fraction)
    return sum(rates[c.id] for c in spec.sinks)


def path_latency(spec: topo.TopologySpec, fraction: float = 1.0) -> float:
    """Stable-system source-to-sink latency, averaged over sink shares.

    Sums service and transfer times plus the deterministic burst-queueing
    wait: an operator with selectivity B emits B back-to-back copies, so the
    mean copy waits (B-1)/2 serializations at the link and (B-1)/2 residual
    service gaps downstream.
    """
    rates = flow_rates(spec, fraction)
    bits = spec.tuple_bytes * 8
    order = topo.topological_order(spec)
    delay: dict = {c.id: 0.0 for c in spec.components}
    for cid in order:
        c = spec.component(cid)
        base = delay[cid] + (c.service_s if c.kind != topo.SOURCE else 0.0)
        burst = max(1.0, c.selectivity) if c.kind == topo.OPERATOR else 1.0
        for l in spec.out_links(cid):
            ser = bits / l.bandwidth_bps
            dst_svc = spec.component(l.dst).service_s
            hop = (base + ser + l.latency_s
                   + (burst - 1) / 2 * ser
                   + (burst - 1) / 2 * max(0.0, dst_svc - ser))
            w = rates[(l.src, l.dst)]
            prev = rates[l.dst]
            if prev > 0:
                delay[l.dst] += hop * (w / prev)
    total = sum(rates[c.id] for c in spec.sinks)
    if total == 0:
        return 0.0
    return sum((delay[c.id] + c.service_s) * rates[c.id] for c in spec.sinks) / total
