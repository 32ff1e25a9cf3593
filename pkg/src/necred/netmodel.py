"""Networks, multiple-unicast instances and single-unicast NEC instances.

A :class:`Network` is a directed acyclic multigraph whose edges carry an
integer capacity in bits per channel use.  Edges are identified by id, not by
endpoint pair, so parallel edges are fine.  The declared edge order is
significant: it fixes the input ordering of every local encoding function.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx

from .errors import (
    CapacityError,
    CycleError,
    DanglingEndpointError,
    LimitExceeded,
    NetworkError,
    PreconditionError,
)

DEFAULT_MAX_CUT_EDGES = 20


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    capacity: int = 1


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], nodes: Sequence[str] | None = None) -> "Network":
        """Build a network from ``(id, tail, head[, capacity])`` tuples.

        Nodes not listed explicitly are appended in order of first appearance.
        """
        built = [Edge(*e) for e in edges]
        order = list(nodes or [])
        seen = set(order)
        for e in built:
            for v in (e.tail, e.head):
                if v not in seen:
                    seen.add(v)
                    order.append(v)
        return cls(tuple(order), tuple(built))

    @cached_property
    def edge_index(self) -> dict[str, int]:
        return {e.id: i for i, e in enumerate(self.edges)}

    def edge(self, edge_id: str) -> Edge:
        return self.edges[self.edge_index[edge_id]]

    @cached_property
    def _in_edges(self) -> dict[str, tuple[Edge, ...]]:
        acc: dict[str, list[Edge]] = {v: [] for v in self.nodes}
        for e in self.edges:
            acc.setdefault(e.head, []).append(e)
        return {v: tuple(es) for v, es in acc.items()}

    @cached_property
    def _out_edges(self) -> dict[str, tuple[Edge, ...]]:
        acc: dict[str, list[Edge]] = {v: [] for v in self.nodes}
        for e in self.edges:
            acc.setdefault(e.tail, []).append(e)
        return {v: tuple(es) for v, es in acc.items()}

    def in_edges(self, node: str) -> tuple[Edge, ...]:
        """Incoming edges of ``node`` in declared edge order."""
        return self._in_edges.get(node, ())

    def out_edges(self, node: str) -> tuple[Edge, ...]:
        return self._out_edges.get(node, ())

    @cached_property
    def topological_order(self) -> tuple[str, ...]:
        return tuple(validate_network(self))

    @cached_property
    def edge_order(self) -> tuple[Edge, ...]:
        """Edges sorted by the topological position of their tail (stable)."""
        pos = {v: i for i, v in enumerate(self.topological_order)}
        return tuple(sorted(self.edges, key=lambda e: pos[e.tail]))

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for e in self.edges:
            g.add_edge(e.tail, e.head, key=e.id, capacity=e.capacity)
        return g


def validate_network(net: Network) -> list[str]:
    """Check a network and return a topological order of its nodes.

    Ties are broken by declared node order, so the result is deterministic.
    Raises :class:`CycleError`, :class:`DanglingEndpointError`,
    :class:`CapacityError` or :class:`NetworkError` (duplicate ids).
    """
    if len(set(net.nodes)) != len(net.nodes):
        raise NetworkError("duplicate node identifiers")
    nodes = set(net.nodes)
    seen_ids = set()
    for e in net.edges:
        if e.id in seen_ids:
            raise NetworkError(f"duplicate edge id {e.id!r}")
        seen_ids.add(e.id)
        for v in (e.tail, e.head):
            if v not in nodes:
                raise DanglingEndpointError(e.id, v)
        if not isinstance(e.capacity, int) or isinstance(e.capacity, bool) or e.capacity < 1:
            raise CapacityError(e.id, e.capacity)

    indeg = {v: 0 for v in net.nodes}
    succ: dict[str, list[str]] = {v: [] for v in net.nodes}
    for e in net.edges:
        indeg[e.head] += 1
        succ[e.tail].append(e.head)

    rank = {v: i for i, v in enumerate(net.nodes)}
    ready = sorted((v for v in net.nodes if indeg[v] == 0), key=rank.__getitem__)
    order: list[str] = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        fresh = []
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                fresh.append(w)
        if fresh:
            ready = sorted(ready + fresh, key=rank.__getitem__)
    if len(order) != len(net.nodes):
        raise CycleError(_find_cycle(net, set(net.nodes) - set(order)))
    return order


def _find_cycle(net: Network, remaining: set[str]) -> list[str]:
    # every node left over by Kahn's algorithm has a predecessor that is also
    # left over, so walking predecessors must revisit a node
    pred = {}
    for e in net.edges:
        if e.tail in remaining and e.head in remaining:
            pred.setdefault(e.head, e.tail)
    start = min(remaining, key=net.nodes.index)
    path, pos = [], {}
    v = start
    while v not in pos:
        pos[v] = len(path)
        path.append(v)
        v = pred[v]
    cycle = path[pos[v]:]
    cycle.reverse()
    return cycle + [cycle[0]]


@dataclass(frozen=True)
class MultipleUnicastInstance:
    """``k`` source/terminal pairs sharing one error-free network.

    Pair ``i`` (0-based) sends message ``M_i`` from ``pairs[i][0]`` to
    ``pairs[i][1]``.  Several pairs may share a source node (co-located
    sources) or a terminal node; the requirement matrix is the identity in
    pair order.
    """

    network: Network
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((s, t) for s, t in self.pairs))
        validate_network(self.network)
        if not self.pairs:
            raise NetworkError("a multiple-unicast instance needs at least one pair")
        nodes = set(self.network.nodes)
        for s, t in self.pairs:
            for v in (s, t):
                if v not in nodes:
                    raise NetworkError(f"pair node {v!r} is not in the network")

    @property
    def k(self) -> int:
        return len(self.pairs)

    def sources_at(self, node: str) -> tuple[int, ...]:
        """Indices of the pairs whose source sits at ``node``."""
        return tuple(i for i, (s, _) in enumerate(self.pairs) if s == node)

    def terminals_at(self, node: str) -> tuple[int, ...]:
        return tuple(i for i, (_, t) in enumerate(self.pairs) if t == node)

    @property
    def terminal_nodes(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(t for _, t in self.pairs))

    def requirement_matrix(self) -> tuple[tuple[int, ...], ...]:
        """Source-by-terminal 0/1 matrix; a permutation matrix by construction."""
        k = self.k
        return tuple(tuple(int(i == j) for j in range(k)) for i in range(k))

    def required_source(self, terminal_index: int) -> str:
        return self.pairs[terminal_index][0]


@dataclass(frozen=True)
class NECInstance:
    """Single-source single-terminal network error correction instance."""

    network: Network
    source: str
    terminal: str
    adversary_class: tuple[tuple[str, ...], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(
            self, "adversary_class", tuple(tuple(a) for a in self.adversary_class)
        )
        validate_network(self.network)
        nodes = set(self.network.nodes)
        for v in (self.source, self.terminal):
            if v not in nodes:
                raise NetworkError(f"node {v!r} is not in the network")
        if self.source == self.terminal:
            raise NetworkError("source and terminal must differ")
        for a in self.adversary_class:
            if not a:
                raise NetworkError("adversary sets must be nonempty")
            if len(set(a)) != len(a):
                raise NetworkError(f"adversary set {a!r} repeats an edge")
            for eid in a:
                if eid not in self.network.edge_index:
                    raise NetworkError(f"adversary set names unknown edge {eid!r}")

    @property
    def adversary_edges(self) -> tuple[str, ...]:
        """Edges that appear in some adversary set, in declared edge order."""
        hit = {e for a in self.adversary_class for e in a}
        return tuple(e.id for e in self.network.edges if e.id in hit)


def cut_capacity(net: Network, part: Iterable[str], source: str | None = None,
                 sink: str | None = None) -> int:
    """Total capacity of edges leaving ``part``.

    When ``source``/``sink`` are given, ``part`` must contain the former and
    exclude the latter.
    """
    part = set(part)
    unknown = part - set(net.nodes)
    if unknown:
        raise PreconditionError(f"cut side names unknown nodes {sorted(unknown)}")
    if source is not None and source not in part:
        raise PreconditionError(f"cut side must contain the source {source!r}")
    if sink is not None and sink in part:
        raise PreconditionError(f"cut side must exclude the sink {sink!r}")
    return sum(e.capacity for e in net.edges if e.tail in part and e.head not in part)


def edge_set_capacity(net: Network, edge_ids: Iterable[str]) -> int:
    return sum(net.edge(eid).capacity for eid in edge_ids)


def min_cut(net: Network, source: str, sink: str) -> int:
    """Minimum ``source``-``sink`` edge cut capacity (max-flow)."""
    g = nx.DiGraph()
    g.add_nodes_from(net.nodes)
    for e in net.edges:
        if g.has_edge(e.tail, e.head):
            g[e.tail][e.head]["capacity"] += e.capacity
        else:
            g.add_edge(e.tail, e.head, capacity=e.capacity)
    return int(nx.maximum_flow_value(g, source, sink))


def _separated_pairs(n_nodes, adj_masks, removed, pairs_idx):
    # adj_masks[v] is a list of (edge_bit, head) pairs
    reach_cache = {}
    sep = 0
    for s, t in pairs_idx:
        if s not in reach_cache:
            seen = 1 << s
            stack = [s]
            while stack:
                v = stack.pop()
                for bit, w in adj_masks[v]:
                    if removed & bit or (seen >> w) & 1:
                        continue
                    seen |= 1 << w
                    stack.append(w)
            reach_cache[s] = seen
        if not (reach_cache[s] >> t) & 1:
            sep += 1
    return sep


def cutset_rate_bound(inst, max_cut_edges: int = DEFAULT_MAX_CUT_EDGES) -> Fraction | None:
    """Tightest cut-set bound on the common rate of ``inst``.

    For a :class:`MultipleUnicastInstance` every edge subset ``C`` is tried;
    if removing ``C`` disconnects ``p > 0`` pairs then the common rate is at
    most ``cap(C) / p``.  The minimum over all subsets is returned (``None``
    when no subset separates any pair, e.g. ``s_i == t_i``).  Refuses with
    :class:`LimitExceeded` beyond ``max_cut_edges`` edges.

    For an :class:`NECInstance` the bound is the minimum source-terminal cut,
    which max-flow computes exactly.
    """
    if isinstance(inst, NECInstance):
        return Fraction(min_cut(inst.network, inst.source, inst.terminal))
    net = inst.network
    m = len(net.edges)
    if m > max_cut_edges:
        raise LimitExceeded("max_cut_edges", m, max_cut_edges)
    idx = {v: i for i, v in enumerate(net.nodes)}
    adj: list[list[tuple[int, int]]] = [[] for _ in net.nodes]
    caps = []
    for j, e in enumerate(net.edges):
        adj[idx[e.tail]].append((1 << j, idx[e.head]))
        caps.append(e.capacity)
    pairs_idx = [(idx[s], idx[t]) for s, t in inst.pairs]
    k = len(pairs_idx)

    cheapest = sorted(caps)
    best: Fraction | None = None
    for size in range(1, m + 1):
        # every larger subset costs at least the ``size`` cheapest edges
        if best is not None and Fraction(sum(cheapest[:size]), k) >= best:
            break
        for combo in itertools.combinations(range(m), size):
            cap = sum(caps[j] for j in combo)
            # at most k pairs can be separated
            if best is not None and Fraction(cap, k) >= best:
                continue
            removed = 0
            for j in combo:
                removed |= 1 << j
            sep = _separated_pairs(len(net.nodes), adj, removed, pairs_idx)
            if sep:
                bound = Fraction(cap, sep)
                if best is None or bound < best:
                    best = bound
    return best
