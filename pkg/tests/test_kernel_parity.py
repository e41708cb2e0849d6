"""The compiled extension and the interpreted kernel are the same source file
and must agree event-for-event."""

import pytest

from rcstream import topology as topo
from rcstream.engine import FULL_TRACE_MASK
from rcstream.kernel import KERNEL_COMPILED, EngineCore, load_pure

from gen import random_dag


def build(core_cls, spec, seed, mask=0):
    """Minimal engine wiring straight onto a kernel class."""
    from rcstream.engine import Engine

    class _E(Engine):
        pass

    import rcstream.engine as engine_mod
    orig = engine_mod.EngineCore
    engine_mod.EngineCore = core_cls
    try:
        return Engine(spec, seed, trace=mask)
    finally:
        engine_mod.EngineCore = orig


needs_ext = pytest.mark.skipif(not KERNEL_COMPILED, reason="extension not built")


@needs_ext
@pytest.mark.parametrize("name", ["wct", "lspt", "rgt"])
def test_builtin_parity(name):
    pure = load_pure()
    spec = topo.builtin(name)
    a = build(EngineCore, spec, 42, FULL_TRACE_MASK)
    b = build(pure.EngineCore, spec, 42, FULL_TRACE_MASK)
    for eng in (a, b):
        eng.advance(1.0)
        eng.resample_fluctuation()
        eng.set_throttle(0.6)
        eng.advance(1.0)
    assert a.counters() == b.counters()
    assert a.trace_lines() == b.trace_lines()
    assert a.event_count == b.event_count


@needs_ext
@pytest.mark.parametrize("seed", [2, 14, 27])
def test_random_dag_parity(seed):
    pure = load_pure()
    spec = random_dag(seed)
    a = build(EngineCore, spec, seed)
    b = build(pure.EngineCore, spec, seed)
    for eng in (a, b):
        eng.advance(1.5)
    assert a.counters() == b.counters()
    assert a.link_state() == b.link_state()
