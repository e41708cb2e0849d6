"""Seeded random topology generator for property tests: layered DAGs with
fan-out, fan-in, mixed selectivities and occasional small queues."""

from __future__ import annotations

import random

from rcstream import topology as topo


def random_dag(seed: int, max_components: int = 12) -> topo.TopologySpec:
    rng = random.Random(seed)
    n_sources = rng.choice([1, 1, 1, 2])
    n_sinks = rng.choice([1, 1, 2, 3])
    budget = rng.randint(max(4, n_sources + n_sinks + 1), max_components)
    n_ops = max(1, budget - n_sources - n_sinks)

    comps: list[topo.ComponentSpec] = []
    links: list[topo.LinkSpec] = []
    caps = [64, 64, 64, 32, 16, 8]

    srcs = []
    for i in range(n_sources):
        cid = f"src{i}"
        srcs.append(cid)
        comps.append(topo.ComponentSpec(
            cid, topo.SOURCE,
            rate=float(rng.randrange(50, 2000, 25)),
            queue_capacity=rng.choice(caps),
        ))

    # Operators in sequence; each takes 1-2 parents among earlier nodes.
    ops: list[str] = []
    for i in range(n_ops):
        cid = f"op{i}"
        pool = srcs + ops
        parents = rng.sample(pool, k=min(len(pool), rng.choice([1, 1, 1, 2])))
        sel = rng.choice([0.25, 0.5, 1.0, 1.0, 1.0, 2.0, 3.0])
        comps.append(topo.ComponentSpec(
            cid, topo.OPERATOR,
            service_s=rng.randrange(50, 3000, 50) / 1e3 / 1e3,
            selectivity=sel,
            queue_capacity=rng.choice(caps),
        ))
        for p in parents:
            links.append(topo.LinkSpec(p, cid))
        ops.append(cid)

    # Every source must feed something.
    for s in srcs:
        if not any(l.src == s for l in links):
            links.append(topo.LinkSpec(s, rng.choice(ops)))

    # Sinks attach to leaf operators first so every operator has an output.
    leaves = [o for o in ops if not any(l.src == o for l in links)]
    rng.shuffle(leaves)
    sink_parents = []
    for i in range(n_sinks):
        sink_parents.append(leaves[i] if i < len(leaves) else rng.choice(ops))
    for leaf in leaves[n_sinks:]:
        sink_parents.append(leaf)
    for i, parent in enumerate(sink_parents):
        cid = f"sk{i}"
        comps.append(topo.ComponentSpec(
            cid, topo.SINK,
            service_s=rng.randrange(20, 500, 20) / 1e3 / 1e3,
            queue_capacity=rng.choice(caps),
        ))
        links.append(topo.LinkSpec(parent, cid))

    # Emission bursts must fit the outgoing queue.
    fixed = []
    for c in comps:
        n_out = sum(1 for l in links if l.src == c.id)
        burst = int(-(-c.selectivity // 1)) * n_out if c.kind == topo.OPERATOR else n_out
        if n_out and burst > c.queue_capacity:
            c = topo.ComponentSpec(c.id, c.kind, c.rate, c.service_s, c.selectivity, 64)
        fixed.append(c)

    spec = topo.TopologySpec(
        name=f"dag{seed}", components=tuple(fixed), links=tuple(links),
    )
    violations = topo.validate(spec)
    if violations:
        raise AssertionError(f"generator produced invalid spec: {violations}")
    return spec
