"""Stream-processing topologies: DAGs of sources, operators and sinks.

A topology is immutable once built.  Documents are JSON with millisecond
fields at the boundary (``service_ms``, ``latency_ms``); in-memory specs use
seconds throughout.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace

SOURCE = "source"
OPERATOR = "operator"
SINK = "sink"
KINDS = (SOURCE, OPERATOR, SINK)

DEFAULT_BANDWIDTH_BPS = 100_000_000.0
DEFAULT_LATENCY_S = 0.0005
DEFAULT_QUEUE_CAPACITY = 64
DEFAULT_TUPLE_BYTES = 1024

BUILTIN_NAMES = ("wct", "lspt", "rgt")


class TopologyError(Exception):
    """Base class for topology document errors."""


class TopologySyntaxError(TopologyError):
    """Document is not well-formed (JSON error or wrong structure)."""


class TopologyValidationError(TopologyError):
    """Document parsed but violates a topology invariant."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True)
class ComponentSpec:
    id: str
    kind: str
    rate: float = 0.0            # tuples/s, sources only
    service_s: float = 0.0       # seconds per tuple, operators and sinks
    selectivity: float = 1.0     # output per input tuple, operators only
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY


@dataclass(frozen=True)
class LinkSpec:
    src: str
    dst: str
    bandwidth_bps: float = DEFAULT_BANDWIDTH_BPS
    latency_s: float = DEFAULT_LATENCY_S


@dataclass(frozen=True)
class TopologySpec:
    name: str
    components: tuple[ComponentSpec, ...]
    links: tuple[LinkSpec, ...]
    tuple_bytes: int = DEFAULT_TUPLE_BYTES

    def component(self, cid: str) -> ComponentSpec:
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def out_links(self, cid: str) -> list[LinkSpec]:
        return [l for l in self.links if l.src == cid]

    def in_links(self, cid: str) -> list[LinkSpec]:
        return [l for l in self.links if l.dst == cid]

    @property
    def sources(self) -> list[ComponentSpec]:
        return [c for c in self.components if c.kind == SOURCE]

    @property
    def sinks(self) -> list[ComponentSpec]:
        return [c for c in self.components if c.kind == SINK]

    @property
    def operators(self) -> list[ComponentSpec]:
        return [c for c in self.components if c.kind == OPERATOR]


def validate(spec: TopologySpec) -> list[str]:
    """Return all invariant violations; an empty list means the spec is valid."""
    out: list[str] = []
    seen: set[str] = set()
    for c in spec.components:
        if c.id in seen:
            out.append(f"duplicate component id: {c.id}")
        seen.add(c.id)
        if c.kind not in KINDS:
            out.append(f"unknown kind for {c.id}: {c.kind}")
            continue
        if c.kind == SOURCE and c.rate <= 0:
            out.append(f"source without positive rate: {c.id}")
        if c.kind != SOURCE and c.rate > 0:
            out.append(f"non-source with generation rate: {c.id}")
        if c.kind != SOURCE and c.service_s <= 0:
            out.append(f"{c.kind} without positive service time: {c.id}")
        if c.kind == SOURCE and c.service_s > 0:
            out.append(f"source with service time: {c.id}")
        if c.kind == OPERATOR and c.selectivity < 0:
            out.append(f"operator with negative selectivity: {c.id}")
        if c.queue_capacity < 1:
            out.append(f"queue capacity below 1: {c.id}")
    if spec.tuple_bytes < 1:
        out.append("tuple size below 1 byte")

    ids = {c.id for c in spec.components}
    adj: dict[str, list[str]] = {cid: [] for cid in ids}
    indeg: dict[str, int] = {cid: 0 for cid in ids}
    for l in spec.links:
        if l.src == l.dst:
            out.append(f"self link: {l.src}")
            continue
        if l.src not in ids or l.dst not in ids:
            out.append(f"link endpoint missing: {l.src}->{l.dst}")
            continue
        if l.bandwidth_bps <= 0:
            out.append(f"non-positive bandwidth: {l.src}->{l.dst}")
        if l.latency_s < 0:
            out.append(f"negative latency: {l.src}->{l.dst}")
        adj[l.src].append(l.dst)
        indeg[l.dst] += 1

    # Kahn's algorithm; leftover nodes sit on a directed cycle.
    ready = sorted(cid for cid in ids if indeg[cid] == 0)
    remaining = dict(indeg)
    visited = 0
    while ready:
        cid = ready.pop(0)
        visited += 1
        for nxt in adj[cid]:
            remaining[nxt] -= 1
            if remaining[nxt] == 0:
                ready.append(nxt)
        ready.sort()
    if visited != len(ids):
        cyclic = sorted(cid for cid in ids if remaining[cid] > 0)
        out.append(f"cycle detected through: {', '.join(cyclic)}")

    for c in spec.components:
        if c.kind not in KINDS:
            continue
        n_in = len(spec.in_links(c.id))
        n_out = len(spec.out_links(c.id))
        if c.kind == SOURCE and n_in:
            out.append(f"source has incoming link: {c.id}")
        if c.kind == SINK and n_out:
            out.append(f"sink has outgoing link: {c.id}")
        if c.kind == OPERATOR and n_in == 0:
            out.append(f"operator without incoming link: {c.id}")
        if c.kind == OPERATOR and n_out == 0:
            out.append(f"operator without outgoing link: {c.id}")
        if c.kind == SOURCE and n_out == 0:
            out.append(f"source without outgoing link: {c.id}")
        if c.kind == SINK and n_in == 0:
            out.append(f"sink without incoming link: {c.id}")
        if c.kind != SINK and n_out:
            # A burst that can never fit the outgoing queue would block forever.
            burst = int(-(-c.selectivity // 1)) * n_out if c.kind == OPERATOR else n_out
            if burst > c.queue_capacity:
                out.append(f"emission burst exceeds outgoing queue capacity: {c.id}")

    # Reachability from sources.
    frontier = [c.id for c in spec.components if c.kind == SOURCE]
    reach = set(frontier)
    while frontier:
        cid = frontier.pop()
        for nxt in adj.get(cid, []):
            if nxt not in reach:
                reach.add(nxt)
                frontier.append(nxt)
    for cid in sorted(ids - reach):
        out.append(f"unreachable: {cid}")
    return out


def topological_order(spec: TopologySpec) -> list[str]:
    """Component ids, every link earlier->later, ties broken lexicographically."""
    ids = [c.id for c in spec.components]
    indeg = {cid: 0 for cid in ids}
    adj: dict[str, list[str]] = {cid: [] for cid in ids}
    for l in spec.links:
        adj[l.src].append(l.dst)
        indeg[l.dst] += 1
    import heapq

    heap = sorted(cid for cid in ids if indeg[cid] == 0)
    order: list[str] = []
    while heap:
        cid = heapq.heappop(heap)
        order.append(cid)
        for nxt in adj[cid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, nxt)
    if len(order) != len(ids):
        raise TopologyValidationError(["cycle detected"])
    return order


def upstream_closure(spec: TopologySpec, cid: str) -> set[str]:
    """All components with a directed path to ``cid`` (excluding itself)."""
    if cid not in {c.id for c in spec.components}:
        raise KeyError(cid)
    preds: dict[str, list[str]] = {}
    for l in spec.links:
        preds.setdefault(l.dst, []).append(l.src)
    closure: set[str] = set()
    frontier = list(preds.get(cid, []))
    while frontier:
        u = frontier.pop()
        if u in closure:
            continue
        closure.add(u)
        frontier.extend(preds.get(u, []))
    return closure


# ---------------------------------------------------------------------------
# Documents


def parse_topology(document: str) -> TopologySpec:
    """Parse and validate a topology-config document."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as e:
        raise TopologySyntaxError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise TopologySyntaxError("top level must be an object")
    for key in ("name", "components", "links"):
        if key not in raw:
            raise TopologySyntaxError(f"missing top-level field: {key}")

    comps = []
    for i, c in enumerate(raw["components"]):
        if not isinstance(c, dict) or "id" not in c or "kind" not in c:
            raise TopologySyntaxError(f"components[{i}]: need id and kind")
        comps.append(ComponentSpec(
            id=str(c["id"]),
            kind=str(c["kind"]),
            rate=float(c.get("rate", 0.0)),
            service_s=float(c.get("service_ms", 0.0)) / 1e3,
            selectivity=float(c.get("selectivity", 1.0)),
            queue_capacity=int(c.get("queue_capacity", DEFAULT_QUEUE_CAPACITY)),
        ))
    links = []
    for i, l in enumerate(raw["links"]):
        if not isinstance(l, dict) or "from" not in l or "to" not in l:
            raise TopologySyntaxError(f"links[{i}]: need from and to")
        links.append(LinkSpec(
            src=str(l["from"]),
            dst=str(l["to"]),
            bandwidth_bps=float(l.get("bandwidth_bps", DEFAULT_BANDWIDTH_BPS)),
            latency_s=float(l.get("latency_ms", DEFAULT_LATENCY_S * 1e3)) / 1e3,
        ))
    spec = TopologySpec(
        name=str(raw["name"]),
        components=tuple(comps),
        links=tuple(links),
        tuple_bytes=int(raw.get("tuple_bytes", DEFAULT_TUPLE_BYTES)),
    )
    violations = validate(spec)
    if violations:
        raise TopologyValidationError(violations)
    return spec


def _to_ms(seconds: float) -> float:
    """Millisecond value whose parse (/1e3) reproduces ``seconds`` exactly."""
    import math

    ms = seconds * 1e3
    if ms / 1e3 == seconds:
        return ms
    for cand in (math.nextafter(ms, math.inf), math.nextafter(ms, -math.inf)):
        if cand / 1e3 == seconds:
            return cand
    return ms


def serialize(spec: TopologySpec) -> str:
    """Inverse of parse_topology for valid specs."""
    doc: dict = {"name": spec.name, "components": [], "links": []}
    if spec.tuple_bytes != DEFAULT_TUPLE_BYTES:
        doc["tuple_bytes"] = spec.tuple_bytes
    for c in spec.components:
        entry: dict = {"id": c.id, "kind": c.kind}
        if c.kind == SOURCE:
            entry["rate"] = c.rate
        else:
            entry["service_ms"] = _to_ms(c.service_s)
        if c.kind == OPERATOR:
            entry["selectivity"] = c.selectivity
        if c.queue_capacity != DEFAULT_QUEUE_CAPACITY:
            entry["queue_capacity"] = c.queue_capacity
        doc["components"].append(entry)
    for l in spec.links:
        entry = {"from": l.src, "to": l.dst}
        if l.bandwidth_bps != DEFAULT_BANDWIDTH_BPS:
            entry["bandwidth_bps"] = l.bandwidth_bps
        if l.latency_s != DEFAULT_LATENCY_S:
            entry["latency_ms"] = _to_ms(l.latency_s)
        doc["links"].append(entry)
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Built-in topologies
#
# Service profiles are sized so that exactly one component's utilisation
# crosses 1.0 between two adjacent throttle fractions, leaving a best static
# fraction below 1.0: wct 0.8, lspt 0.9, rgt 0.7.


def _ms(value_ms: float) -> float:
    """Seconds from a millisecond literal, via the same arithmetic parse uses."""
    return value_ms / 1e3


def _wct() -> TopologySpec:
    return TopologySpec(
        name="wct",
        components=(
            ComponentSpec("src", SOURCE, rate=1000.0),
            ComponentSpec("split", OPERATOR, service_s=_ms(0.6), selectivity=8.0),
            ComponentSpec("count", SINK, service_s=_ms(0.156)),
        ),
        links=(LinkSpec("src", "split"), LinkSpec("split", "count")),
    )


def _lspt() -> TopologySpec:
    return TopologySpec(
        name="lspt",
        components=(
            ComponentSpec("src", SOURCE, rate=2000.0),
            ComponentSpec("rule", OPERATOR, service_s=_ms(0.3), selectivity=1.0),
            ComponentSpec("indexing", OPERATOR, service_s=_ms(0.5546), selectivity=1.0),
            ComponentSpec("counting", OPERATOR, service_s=_ms(0.4), selectivity=1.0),
            ComponentSpec("sink1", SINK, service_s=_ms(0.05)),
            ComponentSpec("sink2", SINK, service_s=_ms(0.05)),
        ),
        links=(
            LinkSpec("src", "rule"),
            LinkSpec("rule", "indexing"),
            LinkSpec("rule", "counting"),
            LinkSpec("indexing", "sink1"),
            LinkSpec("counting", "sink2"),
        ),
    )


def _rgt() -> TopologySpec:
    cap = 32
    return TopologySpec(
        name="rgt",
        components=(
            ComponentSpec("src", SOURCE, rate=7000.0, queue_capacity=cap),
            ComponentSpec("op1", OPERATOR, service_s=_ms(0.06), selectivity=1.0, queue_capacity=cap),
            ComponentSpec("op2", OPERATOR, service_s=_ms(0.1), selectivity=0.25, queue_capacity=cap),
            ComponentSpec("op3", OPERATOR, service_s=_ms(0.05), selectivity=2.0, queue_capacity=cap),
            ComponentSpec("op4", OPERATOR, service_s=_ms(0.3), selectivity=1.0, queue_capacity=cap),
            ComponentSpec("op5", OPERATOR, service_s=_ms(0.1013), selectivity=1.0, queue_capacity=cap),
            ComponentSpec("op6", OPERATOR, service_s=_ms(0.0588), selectivity=1.0, queue_capacity=cap),
            ComponentSpec("sk1", SINK, service_s=_ms(0.1), queue_capacity=cap),
            ComponentSpec("sk2", SINK, service_s=_ms(0.05), queue_capacity=cap),
            ComponentSpec("sk3", SINK, service_s=_ms(0.05), queue_capacity=cap),
        ),
        links=(
            LinkSpec("src", "op1"),
            LinkSpec("op1", "op2"),
            LinkSpec("op1", "op3"),
            LinkSpec("op2", "op4"),
            LinkSpec("op4", "sk1"),
            LinkSpec("op3", "op5", bandwidth_bps=250_000_000.0, latency_s=_ms(6.0)),
            LinkSpec("op3", "op6", bandwidth_bps=250_000_000.0, latency_s=_ms(0.25)),
            LinkSpec("op5", "sk2"),
            LinkSpec("op6", "sk3", bandwidth_bps=250_000_000.0, latency_s=_ms(0.25)),
        ),
    )


def builtin(name: str) -> TopologySpec:
    """One of the three evaluated topologies: wct, lspt or rgt."""
    table = {"wct": _wct, "lspt": _lspt, "rgt": _rgt}
    if name not in table:
        raise KeyError(f"unknown builtin topology: {name!r} (have {', '.join(BUILTIN_NAMES)})")
    return table[name]()


def random_tree(n: int, seed: int, name: str | None = None) -> TopologySpec:
    """Seeded tree-shaped topology with one source, n components total."""
    if n < 3:
        raise ValueError("need at least source, operator and sink")
    rng = random.Random(seed)
    n_ops = max(1, (n - 1) * 2 // 3)
    n_sinks = n - 1 - n_ops
    if n_sinks < 1:
        n_sinks, n_ops = 1, n - 2
    comps = [ComponentSpec("src", SOURCE, rate=float(rng.randrange(200, 1200, 50)))]
    links: list[LinkSpec] = []
    op_ids: list[str] = []
    for i in range(n_ops):
        cid = f"op{i + 1}"
        parent = "src" if i == 0 else rng.choice(op_ids)
        comps.append(ComponentSpec(
            cid, OPERATOR,
            service_s=_ms(rng.randrange(50, 400, 10) / 1e3),
            selectivity=rng.choice([0.5, 1.0, 1.0, 2.0]),
        ))
        links.append(LinkSpec(parent, cid))
        op_ids.append(cid)
    # Sinks hang off the leaf operators first so every operator keeps an output.
    leaves = [cid for cid in op_ids if not any(l.src == cid for l in links)]
    rng.shuffle(leaves)
    for i in range(n_sinks):
        cid = f"sk{i + 1}"
        parent = leaves[i % len(leaves)] if leaves else op_ids[-1]
        if i >= len(leaves):
            parent = rng.choice(op_ids)
        comps.append(ComponentSpec(cid, SINK, service_s=_ms(rng.randrange(20, 100, 10) / 1e3)))
        links.append(LinkSpec(parent, cid))
    # Any operator still without an output gets its own sink to stay valid.
    extra = 0
    for cid in op_ids:
        if not any(l.src == cid for l in links):
            extra += 1
            sid = f"sk{n_sinks + extra}"
            comps.append(ComponentSpec(sid, SINK, service_s=_ms(0.05)))
            links.append(LinkSpec(cid, sid))
    spec = TopologySpec(
        name=name or f"tree{n}s{seed}",
        components=tuple(comps),
        links=tuple(links),
    )
    violations = validate(spec)
    if violations:  # pragma: no cover - generator is constructive
        raise TopologyValidationError(violations)
    return spec


def with_rate_scale(spec: TopologySpec, scale: float) -> TopologySpec:
    """Copy of the spec with all source rates multiplied by ``scale``."""
    comps = tuple(
        replace(c, rate=c.rate * scale) if c.kind == SOURCE else c
        for c in spec.components
    )
    return replace(spec, components=comps)
