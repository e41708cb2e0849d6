"""Line-delimited JSON protocol server exposing environment sessions.

One TCP connection is one session.  Messages are single JSON objects, one
per UTF-8 ``\\n``-terminated line; requests and responses strictly
alternate.  Request kinds: hello, reset, step, close.  Response kinds:
welcome, observation, error.  Field order is fixed and floats serialize at
full round-trip precision, so identical seeds and scripts produce
byte-identical response streams.
"""

from __future__ import annotations

import json
import socketserver
import threading
from pathlib import Path

from rcstream import metrics, topology as topo
from rcstream.environment import EnvConfig, Environment, GraphObservation, N_ACTIONS

PROTOCOL_VERSION = "rcenv/1"
DEFAULT_PORT = 7777


def load_registry(topologies_dir: str | Path | None = None) -> dict[str, topo.TopologySpec]:
    """Built-in topologies plus any *.json documents from a directory."""
    registry = {name: topo.builtin(name) for name in topo.BUILTIN_NAMES}
    if topologies_dir is not None:
        for path in sorted(Path(topologies_dir).glob("*.json")):
            spec = topo.parse_topology(path.read_text())
            registry[spec.name] = spec
    return registry


def encode_observation(obs: GraphObservation, reward: float, done: bool,
                       info: metrics.ThroughputReport) -> dict:
    """Wire form of one observation; field order is part of the protocol."""
    return {
        "kind": "observation",
        "nodes": [
            {"id": cid, "kind": kind, "features": list(row)}
            for cid, kind, row in zip(
                obs.node_ids,
                ("source" if row[0] else "operator" if row[1] else "sink"
                 for row in obs.node_features),
                obs.node_features,
            )
        ],
        "edges": [
            {"src": i, "dst": j, "features": list(f)}
            for (i, j), f in zip(obs.edges, obs.edge_features)
        ],
        "reward": reward,
        "done": done,
        "info": {
            "thr": info.thr,
            "mean_latency_s": info.mean_latency_s,
            "bp_time_s": info.bp_time_s,
        },
    }


def decode_observation(msg: dict) -> tuple[GraphObservation, float, bool, metrics.ThroughputReport]:
    obs = GraphObservation(
        node_ids=tuple(n["id"] for n in msg["nodes"]),
        node_features=tuple(tuple(n["features"]) for n in msg["nodes"]),
        edges=tuple((e["src"], e["dst"]) for e in msg["edges"]),
        edge_features=tuple(tuple(e["features"]) for e in msg["edges"]),
    )
    info = metrics.ThroughputReport(
        msg["info"]["thr"], msg["info"]["mean_latency_s"], msg["info"]["bp_time_s"])
    return obs, msg["reward"], msg["done"], info


def error_message(code: str, message: str) -> dict:
    return {"kind": "error", "code": code, "message": message}


def dumps(msg: dict) -> bytes:
    return (json.dumps(msg, separators=(", ", ": ")) + "\n").encode("utf-8")


class Session:
    """Protocol state machine for one connection; transport-agnostic."""

    def __init__(self, registry: dict[str, topo.TopologySpec],
                 session_seed: int, env_config: EnvConfig | None = None):
        self.registry = registry
        self.session_seed = session_seed
        self.env_config = env_config
        self.env: Environment | None = None
        self.state = "awaiting_hello"

    def handle(self, line: str) -> tuple[dict, bool]:
        """Response message and whether the session should close."""
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as e:
            return error_message("bad_frame", f"not a JSON object: {e.msg}"), True
        if not isinstance(msg, dict) or "kind" not in msg:
            return error_message("bad_frame", "message must be an object with a kind"), True
        kind = msg["kind"]
        if kind == "hello":
            return self._hello(msg)
        if kind == "reset":
            return self._reset(msg)
        if kind == "step":
            return self._step(msg)
        if kind == "close":
            self.state = "closed"
            return {"kind": "goodbye"}, True
        return error_message("bad_kind", f"unknown request kind: {kind!r}"), False

    def _hello(self, msg: dict) -> tuple[dict, bool]:
        if self.state != "awaiting_hello":
            return error_message("bad_state", "hello already received"), False
        name = msg.get("topology")
        if name not in self.registry:
            return error_message(
                "unknown_topology",
                f"{name!r} not in registry ({', '.join(sorted(self.registry))})"), False
        spec = self.registry[name]
        config = self.env_config or EnvConfig(seed=self.session_seed)
        self.env = Environment(spec, config)
        self.state = "awaiting_reset"
        return {
            "kind": "welcome",
            "version": PROTOCOL_VERSION,
            "topology": name,
            "n_nodes": len(spec.components),
            "n_edges": len(spec.links),
            "n_actions": N_ACTIONS,
            "feature_dim": metrics.FEATURE_DIM,
            "edge_feature_dim": metrics.EDGE_FEATURE_DIM,
            "episode_length": config.episode_length,
            "k_s": config.K,
        }, False

    def _reset(self, msg: dict) -> tuple[dict, bool]:
        if self.env is None:
            return error_message("bad_state", "reset before hello"), False
        seed = msg.get("seed")
        if seed is not None and not isinstance(seed, int):
            return error_message("bad_seed", "seed must be an integer"), False
        obs = self.env.reset(seed)
        self.state = "awaiting_step"
        return encode_observation(obs, 0.0, False, self.env.last_report), False

    def _step(self, msg: dict) -> tuple[dict, bool]:
        if self.env is None or self.state != "awaiting_step":
            return error_message("bad_state", "step before reset"), False
        action = msg.get("action")
        if not isinstance(action, int) or not 0 <= action < N_ACTIONS:
            return error_message("bad_action",
                                 f"action must be an integer in [0, {N_ACTIONS})"), False
        result = self.env.step(action)
        if result.done:
            self.state = "awaiting_reset"
        return encode_observation(result.observation, result.reward,
                                  result.done, result.info), False


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server: EnvServer = self.server
        session = Session(server.registry, server.next_session_seed(),
                          server.env_config)
        while True:
            line = self.rfile.readline()
            if not line:
                return
            response, close = session.handle(line.decode("utf-8"))
            self.wfile.write(dumps(response))
            self.wfile.flush()
            if close:
                return


class EnvServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, bind_address, registry, base_seed: int = 0,
                 env_config: EnvConfig | None = None):
        super().__init__(bind_address, _Handler)
        self.registry = registry
        self.base_seed = base_seed
        self.env_config = env_config
        self._session_counter = 0
        self._lock = threading.Lock()

    def next_session_seed(self) -> int:
        with self._lock:
            n = self._session_counter
            self._session_counter += 1
        return (self.base_seed * 1_000_003 + n * 8_191) & 0x7FFFFFFFFFFFFFFF


def serve(bind: str = "127.0.0.1", port: int = DEFAULT_PORT,
          topologies_dir: str | None = None, base_seed: int = 0,
          env_config: EnvConfig | None = None) -> None:
    """Run the environment server until interrupted."""
    registry = load_registry(topologies_dir)
    with EnvServer((bind, port), registry, base_seed, env_config) as server:
        host, actual_port = server.server_address
        print(f"rcstream envserver {PROTOCOL_VERSION} listening on {host}:{actual_port} "
              f"({len(registry)} topologies)", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
