"""rcstream: deterministic stream-processing back-pressure simulator with a
rate-control environment, wire protocol server, baselines and CLI."""

from rcstream.topology import (
    ComponentSpec,
    LinkSpec,
    TopologySpec,
    builtin,
    parse_topology,
    serialize,
    topological_order,
    upstream_closure,
    validate,
)
from rcstream.engine import Engine, init
from rcstream.kernel import KERNEL_COMPILED, KERNEL_IMPL

__version__ = "0.1.0"

__all__ = [
    "ComponentSpec",
    "LinkSpec",
    "TopologySpec",
    "builtin",
    "parse_topology",
    "serialize",
    "topological_order",
    "upstream_closure",
    "validate",
    "Engine",
    "init",
    "KERNEL_COMPILED",
    "KERNEL_IMPL",
    "__version__",
]
