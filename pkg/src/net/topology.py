"""Network builders for the star, cluster and ring scenarios and their forwarding rules."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

from src.errors import ConfigurationError, NoRouteError
from src.mac.frames import Frame
from src.phy.channel import ChannelId

logger = logging.getLogger("wpansim.net")


class Role(str, Enum):
    PAN_COORDINATOR = "PanCoordinator"
    END_DEVICE = "EndDevice"


class TopologyKind(str, Enum):
    CLUSTER = "cluster"
    STAR = "star"
    RING = "ring"


@dataclass(frozen=True)
class NodeSpec:
    id: int
    role: Role
    channel: ChannelId
    cluster_id: Optional[int] = None
    coordinator: Optional[int] = None


@dataclass
class Network:
    """
    Nodes, logical links and channel assignment of one scenario.

    Only `token_holder` changes after the network is built.
    """
    kind: TopologyKind
    nodes: Dict[int, NodeSpec]
    adjacency: Dict[int, FrozenSet[int]]
    ring_order: Tuple[int, ...] = ()
    token_holder: Optional[int] = None
    backbone: Optional[ChannelId] = None
    shared_channel: bool = False
    _successor: Dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        n = len(self.ring_order)
        self._successor = {self.ring_order[i]: self.ring_order[(i + 1) % n] for i in range(n)}

    def __contains__(self, node: int) -> bool:
        return node in self.nodes

    def ids(self) -> List[int]:
        return sorted(self.nodes)

    def role_of(self, node: int) -> Role:
        return self.nodes[node].role

    def coordinators(self) -> List[int]:
        return [n for n in self.ids() if self.nodes[n].role is Role.PAN_COORDINATOR]

    def end_devices(self) -> List[int]:
        return [n for n in self.ids() if self.nodes[n].role is Role.END_DEVICE]

    def coordinator_of(self, node: int) -> Optional[int]:
        spec = self.nodes[node]
        return node if spec.role is Role.PAN_COORDINATOR else spec.coordinator

    def successor(self, node: int) -> int:
        return self._successor[node]

    def edges(self) -> List[Tuple[int, int]]:
        return sorted({(min(a, b), max(a, b)) for a, peers in self.adjacency.items() for b in peers})

    def channels_of(self, node: int) -> List[ChannelId]:
        """Channels a node listens on; cluster coordinators also hear the backbone."""
        spec = self.nodes[node]
        channels = [spec.channel]
        if (
            self.kind is TopologyKind.CLUSTER
            and spec.role is Role.PAN_COORDINATOR
            and self.backbone not in channels
        ):
            channels.append(self.backbone)
        return channels

    def channels(self) -> List[ChannelId]:
        return sorted({c for n in self.nodes for c in self.channels_of(n)})

    def link_channel(self, a: int, b: int) -> ChannelId:
        if b not in self.adjacency.get(a, ()):
            raise NoRouteError(f"no link between node {a} and node {b}")
        if (
            self.kind is TopologyKind.CLUSTER
            and self.nodes[a].role is Role.PAN_COORDINATOR
            and self.nodes[b].role is Role.PAN_COORDINATOR
        ):
            return self.backbone
        if self.nodes[a].role is Role.END_DEVICE:
            return self.nodes[a].channel
        return self.nodes[b].channel

    def summary(self) -> dict:
        """Node, edge and channel listing for run metadata."""
        return {
            "kind": self.kind.value,
            "nodes": [
                {
                    "id": s.id,
                    "role": s.role.value,
                    "channels": [int(c) for c in self.channels_of(s.id)],
                    **({"cluster": s.cluster_id} if s.cluster_id is not None else {}),
                }
                for s in (self.nodes[n] for n in self.ids())
            ],
            "edges": [list(e) for e in self.edges()],
            "channels": [int(c) for c in self.channels()],
            "shared_channel": self.shared_channel,
        }


def _link(adjacency: Dict[int, set], a: int, b: int) -> None:
    adjacency.setdefault(a, set()).add(b)
    adjacency.setdefault(b, set()).add(a)


def _freeze(adjacency: Dict[int, set]) -> Dict[int, FrozenSet[int]]:
    return {node: frozenset(peers) for node, peers in adjacency.items()}


def build_star(num_end_devices: int) -> Network:
    """One PAN coordinator (node 0) and `num_end_devices` end devices on channel 0."""
    if num_end_devices < 1:
        raise ConfigurationError(f"star needs at least 1 end device, got {num_end_devices}")
    channel = ChannelId(0)
    nodes = {0: NodeSpec(0, Role.PAN_COORDINATOR, channel)}
    adjacency: Dict[int, set] = {0: set()}
    for ed in range(1, num_end_devices + 1):
        nodes[ed] = NodeSpec(ed, Role.END_DEVICE, channel, coordinator=0)
        _link(adjacency, 0, ed)
    return Network(TopologyKind.STAR, nodes, _freeze(adjacency))


def build_cluster(
    coordinators: int = 3, end_devices_per_cluster: int = 4, shared_channel: bool = False
) -> Network:
    """
    Coordinators 0..C-1 form a full mesh on the backbone channel; each one runs
    its own cluster channel for its end devices.

    With `shared_channel` every cluster and the backbone use channel 0.
    """
    if coordinators < 2:
        raise ConfigurationError(f"cluster needs at least 2 coordinators, got {coordinators}")
    if end_devices_per_cluster < 1:
        raise ConfigurationError(
            f"cluster needs at least 1 end device per cluster, got {end_devices_per_cluster}"
        )
    backbone = ChannelId(0 if shared_channel else coordinators)
    nodes: Dict[int, NodeSpec] = {}
    adjacency: Dict[int, set] = {}
    for c in range(coordinators):
        channel = ChannelId(0 if shared_channel else c)
        nodes[c] = NodeSpec(c, Role.PAN_COORDINATOR, channel, cluster_id=c)
        for other in range(c):
            _link(adjacency, c, other)

    next_id = coordinators
    for c in range(coordinators):
        for _ in range(end_devices_per_cluster):
            nodes[next_id] = NodeSpec(
                next_id, Role.END_DEVICE, nodes[c].channel, cluster_id=c, coordinator=c
            )
            _link(adjacency, c, next_id)
            next_id += 1
    return Network(
        TopologyKind.CLUSTER,
        nodes,
        _freeze(adjacency),
        backbone=backbone,
        shared_channel=shared_channel,
    )


def build_ring(num_devices: int) -> Network:
    """`num_devices` end devices in cyclic order 0..N-1; node 0 holds the token."""
    if num_devices < 3:
        raise ConfigurationError(f"ring needs at least 3 devices, got {num_devices}")
    channel = ChannelId(0)
    order = tuple(range(num_devices))
    nodes = {i: NodeSpec(i, Role.END_DEVICE, channel) for i in order}
    adjacency: Dict[int, set] = {}
    for i in order:
        _link(adjacency, i, (i + 1) % num_devices)
    return Network(
        TopologyKind.RING, nodes, _freeze(adjacency), ring_order=order, token_holder=order[0]
    )


def next_hop(net: Network, at: int, frame: Frame) -> int:
    return hop_towards(net, at, frame.final_destination)


def hop_towards(net: Network, at: int, destination: int) -> int:
    if destination not in net or at not in net:
        raise NoRouteError(f"no route from node {at} to node {destination}")
    if destination == at:
        raise ValueError(f"node {at} is already the destination")

    if net.kind is TopologyKind.RING:
        return net.successor(at)

    if net.role_of(at) is Role.END_DEVICE:
        return net.coordinator_of(at)
    if net.kind is TopologyKind.STAR:
        return destination
    # cluster coordinator: local end device or another coordinator, else via its coordinator
    if net.role_of(destination) is Role.PAN_COORDINATOR:
        return destination
    return destination if net.coordinator_of(destination) == at else net.coordinator_of(destination)


def route(net: Network, source: int, destination: int) -> List[int]:
    """Full node path from source to destination, both included."""
    path = [source]
    limit = len(net.nodes)
    while path[-1] != destination:
        path.append(hop_towards(net, path[-1], destination))
        if len(path) > limit:
            raise NoRouteError(f"routing loop from node {source} to node {destination}")
    return path


def token_step(net: Network) -> int:
    """Pass the ring token to the holder's successor and return the new holder."""
    if net.kind is not TopologyKind.RING:
        raise ConfigurationError(f"token passing needs a ring, got {net.kind.value}")
    net.token_holder = net.successor(net.token_holder)
    return net.token_holder
