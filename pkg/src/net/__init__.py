"""Topologies, forwarding, the ring token and the per-node protocol stack."""

from .topology import (
    Network,
    NodeSpec,
    Role,
    TopologyKind,
    build_cluster,
    build_ring,
    build_star,
    hop_towards,
    next_hop,
    route,
    token_step,
)

__all__ = [
    "Network",
    "NodeSpec",
    "Role",
    "TopologyKind",
    "build_cluster",
    "build_ring",
    "build_star",
    "hop_towards",
    "next_hop",
    "route",
    "token_step",
]
