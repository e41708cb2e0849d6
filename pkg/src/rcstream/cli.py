"""Command-line entry point: simulate, sweep, compare, serve, gen-topology, plot."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from rcstream import baselines, metrics, server, topology as topo
from rcstream.engine import Engine, FULL_TRACE_MASK


def resolve_topology(name_or_path: str) -> topo.TopologySpec:
    if name_or_path in topo.BUILTIN_NAMES:
        return topo.builtin(name_or_path)
    path = Path(name_or_path)
    if not path.exists():
        raise FileNotFoundError(
            f"topology {name_or_path!r}: not a builtin "
            f"({', '.join(topo.BUILTIN_NAMES)}) and no such file")
    return topo.parse_topology(path.read_text())


def parse_action_script(path: Path) -> list[float]:
    """One entry per window: a fraction (0.1..1.0) or an action index (0..9)."""
    fractions = []
    for ln, raw in enumerate(path.read_text().split(), start=1):
        val = float(raw)
        if val.is_integer() and 0 <= val <= 9 and "." not in raw:
            val = (int(val) + 1) / 10
        if not any(abs(val - f) < 1e-9 for f in baselines.FRACTIONS):
            raise ValueError(f"{path}:{ln}: {raw!r} is neither an action 0-9 "
                             f"nor a fraction from the action set")
        fractions.append(val)
    if not fractions:
        raise ValueError(f"{path}: empty action script")
    return fractions


def add_shared(p: argparse.ArgumentParser, duration: float = 300.0):
    p.add_argument("--topology", required=True, help="builtin name or document path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration-s", type=float, default=duration)
    p.add_argument("--k-s", type=float, default=1.0, help="metrics window length")
    p.add_argument("--out", default=".", help="output directory")


def cmd_simulate(args) -> int:
    spec = resolve_topology(args.topology)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.script:
        fractions = parse_action_script(Path(args.script))
        report = baselines.run_script(spec, fractions, args.duration_s, args.seed, args.k_s)
    else:
        report = baselines.run_static(spec, args.fraction, args.duration_s,
                                      args.seed, args.k_s)
    csv_path = out / f"{spec.name}_{report.controller}.csv"
    baselines.write_run_csv(report, csv_path)
    if args.trace:
        eng = Engine(spec, args.seed, trace=FULL_TRACE_MASK)
        eng.set_throttle(args.fraction if not args.script else 1.0)
        eng.advance(min(args.duration_s, args.trace_s))
        trace_path = out / f"{spec.name}_{report.controller}.trace"
        trace_path.write_text("\n".join(eng.trace_lines()) + "\n")
        print(f"trace: {trace_path}")
    print(f"{spec.name} {report.controller}: thr_mean={report.thr_mean:.1f}/s "
          f"latency_mean={report.latency_mean * 1e3:.3f}ms "
          f"bp_time={report.bp_time_total:.2f}s -> {csv_path}")
    return 0


def cmd_sweep(args) -> int:
    spec = resolve_topology(args.topology)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = baselines.sweep_static(spec, args.duration_s, args.seed, args.k_s)
    print(f"{'fraction':>8} {'thr_mean':>12} {'latency_ms':>12} {'bp_time_s':>10}")
    for r in result.reports:
        baselines.write_run_csv(r, out / f"{spec.name}_{r.controller}.csv")
        mark = "  <== best" if r is result.best else ""
        print(f"{r.fraction:>8.1f} {r.thr_mean:>12.1f} "
              f"{r.latency_mean * 1e3:>12.3f} {r.bp_time_total:>10.2f}{mark}")
    gains = baselines.compare(result.best, result.report_for(1.0))
    print(f"best static {result.best.fraction:.1f} vs default: "
          f"thr {gains['thr_gain_pct']:+.2f}%  latency {gains['latency_drop_pct']:+.2f}%")
    return 0


def cmd_compare(args) -> int:
    spec = resolve_topology(args.topology)
    cand = baselines.run_static(spec, args.fraction, args.duration_s, args.seed, args.k_s)
    base = baselines.run_default(spec, args.duration_s, args.seed, args.k_s)
    gains = baselines.compare(cand, base)
    print(f"{spec.name}: static-{args.fraction:.1f} vs default over {args.duration_s:.0f}s")
    print(f"  thr      {cand.thr_mean:.1f}/s vs {base.thr_mean:.1f}/s "
          f"({gains['thr_gain_pct']:+.2f}%)")
    print(f"  latency  {cand.latency_mean * 1e3:.3f}ms vs {base.latency_mean * 1e3:.3f}ms "
          f"({gains['latency_drop_pct']:+.2f}% drop)")
    return 0


def cmd_serve(args) -> int:
    from rcstream.environment import EnvConfig

    config = EnvConfig(K=args.k_s, episode_length=args.episode_length,
                       seed=args.base_seed)
    server.serve(args.bind, args.port, args.topologies, args.base_seed, config)
    return 0


def cmd_gen_topology(args) -> int:
    spec = topo.random_tree(args.n, args.seed, name=args.name)
    doc = topo.serialize(spec)
    if args.out == "-":
        sys.stdout.write(doc)
    else:
        out = Path(args.out)
        if out.is_dir():
            out = out / f"{spec.name}.json"
        out.write_text(doc)
        print(f"wrote {out} ({args.n} components, seed {args.seed})")
    return 0


def cmd_plot(args) -> int:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    made = []
    for path in args.infile:
        p = Path(path)
        header = p.read_text().splitlines()[0]
        if header.startswith("iteration"):  # training reward curve
            import csv as _csv
            series: dict[str, list[tuple[int, float]]] = {}
            with open(p, newline="") as f:
                for row in _csv.DictReader(f):
                    series.setdefault(row["topology"], []).append(
                        (int(row["iteration"]), float(row["mean_step_reward"])))
            fig, ax = plt.subplots(figsize=(7, 4))
            for name, pts in sorted(series.items()):
                pts.sort()
                ax.plot([x for x, _ in pts], [y for _, y in pts], label=name)
            ax.set_xlabel("iteration")
            ax.set_ylabel("mean step reward")
            ax.set_ylim(0, 1.05)
            ax.legend()
            target = out / (p.stem + "_reward.png")
            fig.savefig(target, dpi=120, bbox_inches="tight")
            plt.close(fig)
            made.append(target)
        else:
            run = baselines.read_run_csv(p)
            idx = [w[0] for w in run["windows"]]
            for field, col, unit in (("throughput", 1, "tuples/s"),
                                     ("latency", 2, "s")):
                fig, ax = plt.subplots(figsize=(7, 4))
                ax.plot(idx, [w[col] for w in run["windows"]])
                ax.set_xlabel("window index")
                ax.set_ylabel(f"{field} ({unit})")
                label = run["summary"]["controller"] if run["summary"] else p.stem
                ax.set_title(f"{p.stem} [{label}]")
                target = out / f"{p.stem}_{field}.png"
                fig.savefig(target, dpi=120, bbox_inches="tight")
                plt.close(fig)
                made.append(target)
    for m in made:
        print(f"wrote {m}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rcstream",
                                 description="stream back-pressure simulator and rate-control environment")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one topology at a fixed fraction or action script")
    add_shared(p)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--script", help="action-script file, one action/fraction per window")
    p.add_argument("--trace", action="store_true", help="also export an event trace")
    p.add_argument("--trace-s", type=float, default=5.0, help="trace duration cap")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="run all ten static fractions and pick the best")
    add_shared(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("compare", help="compare a static fraction against the default scheme")
    add_shared(p)
    p.add_argument("--fraction", type=float, required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("serve", help="run the environment protocol server")
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=server.DEFAULT_PORT)
    p.add_argument("--topologies", help="directory of extra topology documents")
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--k-s", type=float, default=1.0)
    p.add_argument("--episode-length", type=int, default=512)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("gen-topology", help="emit a seeded random tree topology document")
    p.add_argument("--n", type=int, required=True, help="component count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name")
    p.add_argument("--out", default="-", help="file, directory, or - for stdout")
    p.set_defaults(fn=cmd_gen_topology)

    p = sub.add_parser("plot", help="charts from run or training CSVs")
    p.add_argument("--in", dest="infile", nargs="+", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=cmd_plot)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (FileNotFoundError, ValueError, KeyError,
            topo.TopologyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
