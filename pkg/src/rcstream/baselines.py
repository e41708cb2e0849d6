"""Non-learning controllers: the default (unthrottled, back-pressure-only)
scheme and the static-fraction sweep that grounds every comparison.

Baseline runs pin the fluctuation multiplier at 1.0 so sweeps are exactly
reproducible and comparisons use common conditions across fractions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from rcstream import metrics, topology as topo
from rcstream.engine import Engine

FRACTIONS = tuple((k + 1) / 10 for k in range(10))
DEFAULT_DURATION_S = 300.0


@dataclass(frozen=True)
class RunReport:
    topology: str
    controller: str           # e.g. "static-0.8", "default", "policy"
    duration_s: float
    K: float
    fraction: float | None    # None for non-static controllers
    thr_mean: float           # total sink completions / duration
    thr_series: tuple[float, ...]
    latency_mean: float       # total sk_l / total sk_p over the run
    latency_series: tuple[float, ...]
    bp_series: tuple[float, ...]
    bp_time_total: float


def run_static(spec: topo.TopologySpec, fraction: float, duration_s: float,
               seed: int, K: float = 1.0, label: str | None = None) -> RunReport:
    """Hold one throttle fraction for the whole run and window the metrics."""
    n_windows = int(round(duration_s / K))
    if n_windows < 1:
        raise ValueError("duration shorter than one window")
    eng = Engine(spec, seed)
    return _windowed_run(eng, spec, [fraction] * n_windows, K,
                         label or f"static-{fraction:.1f}", fraction)


def run_script(spec: topo.TopologySpec, fractions, duration_s: float,
               seed: int, K: float = 1.0, label: str = "script") -> RunReport:
    """Drive the throttle from a per-window fraction schedule (last value held)."""
    n_windows = int(round(duration_s / K))
    if n_windows < 1:
        raise ValueError("duration shorter than one window")
    if not fractions:
        raise ValueError("empty action script")
    sched = [fractions[min(i, len(fractions) - 1)] for i in range(n_windows)]
    eng = Engine(spec, seed)
    return _windowed_run(eng, spec, sched, K, label, None)


def _windowed_run(eng: Engine, spec: topo.TopologySpec, fractions, K: float,
                  label: str, fraction: float | None) -> RunReport:
    coll = metrics.WindowCollector(eng)
    thr_series = []
    lat_series = []
    bp_series = []
    total_p = 0
    total_l = 0.0
    current = None
    for f in fractions:
        if f != current:
            eng.set_throttle(f)
            current = f
        eng.advance(K)
        w = coll.collect(K)
        thr_series.append(metrics.throughput(w))
        lat_series.append(metrics.mean_latency(w))
        bp_series.append(metrics.bp_time_total(w))
        total_p += sum(m["sk_p"] for m in w.components.values() if m["kind"] == topo.SINK)
        total_l += sum(m["sk_l"] for m in w.components.values() if m["kind"] == topo.SINK)
    n_windows = len(fractions)
    return RunReport(
        topology=spec.name,
        controller=label,
        duration_s=n_windows * K,
        K=K,
        fraction=fraction,
        thr_mean=total_p / (n_windows * K),
        thr_series=tuple(thr_series),
        latency_mean=total_l / total_p if total_p else 0.0,
        latency_series=tuple(lat_series),
        bp_series=tuple(bp_series),
        bp_time_total=sum(bp_series),
    )


def run_default(spec: topo.TopologySpec, duration_s: float, seed: int,
                K: float = 1.0) -> RunReport:
    """The unthrottled scheme: fraction 1.0, back pressure as the only control."""
    return run_static(spec, 1.0, duration_s, seed, K, label="default")


@dataclass(frozen=True)
class SweepResult:
    reports: tuple[RunReport, ...]   # one per fraction, ascending
    best: RunReport                  # highest thr_mean, ties to lower latency

    def report_for(self, fraction: float) -> RunReport:
        for r in self.reports:
            if r.fraction is not None and abs(r.fraction - fraction) < 1e-9:
                return r
        raise KeyError(fraction)


def sweep_static(spec: topo.TopologySpec, duration_s: float, seed: int,
                 K: float = 1.0) -> SweepResult:
    """One run per action fraction under common seeds."""
    reports = tuple(run_static(spec, f, duration_s, seed, K) for f in FRACTIONS)
    best = max(reports, key=lambda r: (r.thr_mean, -r.latency_mean))
    return SweepResult(reports, best)


def compare(candidate: RunReport, baseline: RunReport) -> dict[str, float]:
    """Throughput gain and latency drop of candidate over baseline, percent."""
    if candidate.topology != baseline.topology:
        raise ValueError(f"topology mismatch: {candidate.topology} vs {baseline.topology}")
    if abs(candidate.duration_s - baseline.duration_s) > 1e-9:
        raise ValueError(f"duration mismatch: {candidate.duration_s} vs {baseline.duration_s}")
    return {
        "thr_gain_pct": 100.0 * (candidate.thr_mean - baseline.thr_mean) / baseline.thr_mean,
        "latency_drop_pct": 100.0 * (baseline.latency_mean - candidate.latency_mean)
                            / baseline.latency_mean if baseline.latency_mean else 0.0,
    }


def write_run_csv(report: RunReport, path) -> None:
    """Per-window rows in the metrics CSV schema plus one summary row."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(metrics.CSV_HEADER)
        for i, (thr, lat, bp) in enumerate(zip(report.thr_series,
                                               report.latency_series,
                                               report.bp_series)):
            w.writerow([i, repr(thr), repr(lat), repr(bp), report.controller])
        w.writerow(["mean", repr(report.thr_mean), repr(report.latency_mean),
                    repr(report.bp_time_total), report.controller])


def read_run_csv(path) -> dict:
    rows = []
    summary = None
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        assert header == metrics.CSV_HEADER
        for row in r:
            if row[0] == "mean":
                summary = {"thr_mean": float(row[1]), "latency_mean": float(row[2]),
                           "bp_time_total": float(row[3]), "controller": row[4]}
            else:
                rows.append((int(row[0]), float(row[1]), float(row[2])))
    return {"windows": rows, "summary": summary}
