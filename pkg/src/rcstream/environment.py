"""The rate-control MDP: graph observations in, throttle actions out,
min-max-normalized throughput as reward.

One Environment owns one live simulation; episodes reseed the simulator
deterministically while the reward normalizer persists across episodes
within a session.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from rcstream import metrics, topology as topo
from rcstream.engine import Engine

N_ACTIONS = 10


@dataclass(frozen=True)
class EnvConfig:
    K: float = 1.0
    episode_length: int = 512
    fluctuation_period: int = 100
    fluctuation_range: tuple[float, float] = (0.7, 1.3)
    seed: int = 0

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError("K must be positive")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        if self.fluctuation_period < 1:
            raise ValueError("fluctuation_period must be >= 1")


@dataclass(frozen=True)
class GraphObservation:
    node_ids: tuple[str, ...]          # topological order
    node_features: tuple[tuple[float, ...], ...]   # N x 8
    edges: tuple[tuple[int, int], ...]             # indices into node_ids
    edge_features: tuple[tuple[float, ...], ...]   # E x 2

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass
class RewardNormalizer:
    thr_min: float = float("nan")
    thr_max: float = float("nan")

    def update(self, thr: float) -> float:
        """Widen extrema with thr, then return its min-max-normalized value."""
        if thr < 0:
            raise ValueError("throughput must be non-negative")
        if self.thr_min != self.thr_min:  # first observation
            self.thr_min = self.thr_max = thr
        else:
            self.thr_min = min(self.thr_min, thr)
            self.thr_max = max(self.thr_max, thr)
        if self.thr_max == self.thr_min:
            return 0.5
        return (thr - self.thr_min) / (self.thr_max - self.thr_min)


def compute_reward(thr: float, norm: RewardNormalizer) -> float:
    """Update extrema with thr, then min-max-normalize it (0.5 when degenerate)."""
    return norm.update(thr)


@dataclass(frozen=True)
class StepResult:
    observation: GraphObservation
    reward: float
    done: bool
    info: metrics.ThroughputReport


class Environment:
    """Episodic wrapper around one topology's simulation."""

    def __init__(self, spec: topo.TopologySpec, config: EnvConfig = EnvConfig()):
        violations = topo.validate(spec)
        if violations:
            raise topo.TopologyValidationError(violations)
        self.spec = spec
        self.config = config
        self.normalizer = RewardNormalizer()
        self.episode_count = 0
        self.engine: Engine | None = None
        self._collector: metrics.WindowCollector | None = None
        self._order = topo.topological_order(spec)
        self._index = {cid: i for i, cid in enumerate(self._order)}
        self._demands = metrics.demand_rates(spec)
        self._max_rate = max(c.rate for c in spec.sources)
        self._edges = tuple((self._index[l.src], self._index[l.dst]) for l in spec.links)
        self._edge_feats = tuple(tuple(metrics.edge_features(spec, l)) for l in spec.links)
        self.step_count = 0
        self._done = True

    def episode_seed(self, episode: int) -> int:
        return (self.config.seed * 1_000_003 + episode * 7_919 + 12_345) & 0x7FFFFFFFFFFFFFFF

    def reset(self, seed: int | None = None) -> GraphObservation:
        if seed is None:
            seed = self.episode_seed(self.episode_count)
        self.episode_count += 1
        self.engine = Engine(self.spec, seed,
                             fluct_range=self.config.fluctuation_range)
        self._collector = metrics.WindowCollector(self.engine)
        # Warm-up window at full rate so the first observation is non-empty.
        self.engine.set_throttle(1.0)
        self.engine.advance(self.config.K)
        window = self._collector.collect(self.config.K)
        self.last_report = metrics.report(window)
        self.step_count = 0
        self._done = False
        return self.observe(window)

    def step(self, action: int) -> StepResult:
        if self.engine is None:
            raise RuntimeError("step before reset")
        if self._done:
            raise RuntimeError("step after episode end; call reset")
        if not isinstance(action, int) or not 0 <= action < N_ACTIONS:
            raise ValueError(f"action out of range: {action!r}")
        self.engine.set_throttle((action + 1) / 10)
        if self.step_count % self.config.fluctuation_period == 0:
            self.engine.resample_fluctuation()
        self.engine.advance(self.config.K)
        window = self._collector.collect(self.config.K)
        rep = metrics.report(window)
        self.last_report = rep
        reward = self.normalizer.update(rep.thr)
        self.step_count += 1
        self._done = self.step_count >= self.config.episode_length
        return StepResult(self.observe(window), reward, self._done, rep)

    def observe(self, window: metrics.MetricsWindow) -> GraphObservation:
        feats = tuple(
            tuple(metrics.node_features(window, cid, self.spec,
                                        max_rate=self._max_rate,
                                        demands=self._demands))
            for cid in self._order
        )
        return GraphObservation(tuple(self._order), feats, self._edges, self._edge_feats)
