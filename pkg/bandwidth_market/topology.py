# -*- coding: utf-8 -*-

"""Router graphs and price-weighted least-cost path search."""

import heapq
import logging
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx

from .constants import DEFAULT_TOPOLOGY_PATH

logger = logging.getLogger("bandwidth_market.topology")

Edge = Tuple[int, int]


class TopologyError(ValueError):
    pass


class TopologyParseError(TopologyError):
    pass


class SelfLoopError(TopologyError):
    pass


class DuplicateEdgeError(TopologyError):
    pass


class NodeRangeError(TopologyError):
    pass


class DisconnectedTopologyError(TopologyError):
    pass


class Topology:
    """
    An undirected, connected router graph with dense node ids 0..N-1.

    Capacity is a node resource, so the graph only records which routers
    are adjacent. Instances are treated as immutable once built.
    """

    def __init__(self, n_nodes: int, edges: Iterable[Edge]):
        if n_nodes < 1:
            raise TopologyError(f"node count must be positive, got {n_nodes}")

        seen = set()
        for u, v in edges:
            for node in (u, v):
                if not 0 <= node < n_nodes:
                    raise NodeRangeError(
                        f"node id {node} in edge ({u}, {v}) is outside 0..{n_nodes - 1}"
                    )
            if u == v:
                raise SelfLoopError(f"self-loop on node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdgeError(f"duplicate edge ({u}, {v})")
            seen.add(key)

        graph = nx.Graph()
        graph.add_nodes_from(range(n_nodes))
        graph.add_edges_from(seen)
        if not nx.is_connected(graph):
            n_components = nx.number_connected_components(graph)
            raise DisconnectedTopologyError(
                f"topology with {n_nodes} nodes is disconnected ({n_components} components)"
            )

        self.n_nodes = n_nodes
        self.edges: Tuple[Edge, ...] = tuple(sorted(seen))
        self.graph = graph
        # sorted neighbour lists keep searches independent of edge input order
        self._neighbors = {
            node: tuple(sorted(graph.neighbors(node))) for node in range(n_nodes)
        }

    def __repr__(self):
        return f"Topology(n_nodes={self.n_nodes}, edges={list(self.edges)})"

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return self.n_nodes == other.n_nodes and self.edges == other.edges

    def __hash__(self):
        return hash((self.n_nodes, self.edges))

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    def neighbors(self, node: int) -> Tuple[int, ...]:
        return self._neighbors[node]

    def is_adjacent(self, u: int, v: int) -> bool:
        return self.graph.has_edge(u, v)

    def adjacency_matrix(self) -> List[List[bool]]:
        return [[self.is_adjacent(u, v) for v in self.nodes] for u in self.nodes]

    def to_text(self) -> str:
        lines = [str(self.n_nodes)] + [f"{u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"


class PathQuote(NamedTuple):
    path: Tuple[int, ...]
    est_cost: float


def load_topology(text: str) -> Topology:
    """
    Parse an edge-list document into a validated `Topology`.

    The first non-comment line holds the node count N; every following line
    holds one "u v" edge. Text after '#' is ignored.

    Raises:
        TopologyParseError if a line is malformed
        SelfLoopError, DuplicateEdgeError, NodeRangeError, DisconnectedTopologyError
        for structurally invalid graphs
    """
    n_nodes: Optional[int] = None
    edges: List[Edge] = []

    for line_num, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            values = [int(tok) for tok in tokens]
        except ValueError as e:
            raise TopologyParseError(
                f"line {line_num}: expected integers, got {raw_line.strip()!r}"
            ) from e

        if n_nodes is None:
            if len(values) != 1:
                raise TopologyParseError(
                    f"line {line_num}: expected a node count header, got {raw_line.strip()!r}"
                )
            n_nodes = values[0]
        else:
            if len(values) != 2:
                raise TopologyParseError(
                    f"line {line_num}: expected an edge 'u v', got {raw_line.strip()!r}"
                )
            edges.append((values[0], values[1]))

    if n_nodes is None:
        raise TopologyParseError("missing node count header")

    topology = Topology(n_nodes, edges)
    logger.debug(f"Loaded {topology}")
    return topology


def load_topology_file(path: str) -> Topology:
    with open(path) as f:
        return load_topology(f.read())


def default_topology() -> Topology:
    """The shipped 10-router network (see topologies/default.txt)."""
    return load_topology_file(DEFAULT_TOPOLOGY_PATH)


def least_cost_path(
    topo: Topology, prices: Sequence[float], src: int, dst: int, cap: int
) -> PathQuote:
    """
    Find the path from `src` to `dst` minimizing the summed unit price of the
    routers on it, both endpoints included, and quote `cap` units along it.

    Equal-cost paths are resolved by taking the lexicographically smallest
    node sequence: search labels are (cost, path) tuples, and since every
    price is positive a label can only be extended into a larger one.
    """
    if len(prices) != topo.n_nodes:
        raise ValueError(
            f"expected {topo.n_nodes} prices, got {len(prices)}"
        )
    if any(p <= 0 for p in prices):
        raise ValueError(f"all prices must be positive, got {list(prices)}")
    for node in (src, dst):
        if not 0 <= node < topo.n_nodes:
            raise NodeRangeError(f"node id {node} is outside 0..{topo.n_nodes - 1}")

    frontier = [(float(prices[src]), (src,))]
    settled = set()
    while frontier:
        cost, path = heapq.heappop(frontier)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return PathQuote(path, cap * cost)
        for neighbor in topo.neighbors(node):
            if neighbor not in settled:
                heapq.heappush(
                    frontier, (cost + prices[neighbor], path + (neighbor,))
                )

    # unreachable for connected topologies
    raise DisconnectedTopologyError(f"no path from {src} to {dst}")
