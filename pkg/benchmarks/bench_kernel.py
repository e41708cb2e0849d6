#!/usr/bin/env python3
"""Compare compiled vs interpreted kernel throughput on the built-in
topologies.  Run after `pip install -e . --no-build-isolation`."""

import time

from rcstream import topology as topo
from rcstream.kernel import KERNEL_COMPILED, EngineCore, load_pure
import rcstream.engine as engine_mod


def run(core_cls, name, duration):
    orig = engine_mod.EngineCore
    engine_mod.EngineCore = core_cls
    try:
        eng = engine_mod.Engine(topo.builtin(name), seed=7)
    finally:
        engine_mod.EngineCore = orig
    t0 = time.perf_counter()
    eng.advance(duration)
    dt = time.perf_counter() - t0
    return eng.event_count, dt


def main():
    pure = load_pure()
    cases = [("wct", 20.0), ("lspt", 20.0), ("rgt", 5.0)]
    print(f"{'topology':<10} {'impl':<12} {'events':>10} {'wall s':>8} {'M ev/s':>8}")
    for name, dur in cases:
        rows = [("pure-python", pure.EngineCore)]
        if KERNEL_COMPILED:
            rows.insert(0, ("compiled", EngineCore))
        speeds = {}
        for label, cls in rows:
            n, dt = run(cls, name, dur)
            speeds[label] = n / dt
            print(f"{name:<10} {label:<12} {n:>10} {dt:>8.2f} {n / dt / 1e6:>8.2f}")
        if len(speeds) == 2:
            print(f"{'':10} speedup: {speeds['compiled'] / speeds['pure-python']:.1f}x")
    if not KERNEL_COMPILED:
        print("note: extension not built; showing interpreted kernel only")


if __name__ == "__main__":
    main()
