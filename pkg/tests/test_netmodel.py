from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import disjoint_paths
from necred.counterexample import build_cx_instances
from necred.errors import (
    CapacityError,
    CycleError,
    DanglingEndpointError,
    LimitExceeded,
    NetworkError,
    PreconditionError,
)
from necred.netmodel import (
    Edge,
    MultipleUnicastInstance,
    NECInstance,
    Network,
    cut_capacity,
    cutset_rate_bound,
    edge_set_capacity,
    min_cut,
    validate_network,
)


def test_smallest_dag_order():
    net = Network(("u", "v"), (Edge("e", "u", "v"),))
    assert validate_network(net) == ["u", "v"]


def test_two_cycle_is_named():
    net = Network(("u", "v"), (Edge("f", "u", "v"), Edge("g", "v", "u")))
    with pytest.raises(CycleError) as exc:
        validate_network(net)
    assert set(exc.value.cycle) == {"u", "v"}


def test_dangling_and_capacity_errors():
    with pytest.raises(DanglingEndpointError):
        validate_network(Network(("u",), (Edge("e", "u", "w"),)))
    with pytest.raises(CapacityError):
        validate_network(Network(("u", "v"), (Edge("e", "u", "v", 0),)))
    with pytest.raises(NetworkError):
        validate_network(Network(("u", "v"), (Edge("e", "u", "v"), Edge("e", "u", "v"))))


def test_bottleneck_validates():
    inst, _ = build_cx_instances(2)
    order = validate_network(inst.network)
    assert set(order) == {"s1", "s2", "C", "D", "t1", "t2"}
    assert all(e.capacity == 1 for e in inst.network.edges)


def test_parallel_edges_are_distinct():
    net = Network.from_edges([("x", "A", "B"), ("y", "A", "B")])
    assert [e.id for e in net.in_edges("B")] == ["x", "y"]
    assert cut_capacity(net, ["A"]) == 2


@pytest.mark.parametrize("k", [2, 3, 4])
def test_bottleneck_cutset_is_one_over_k(k):
    inst, _ = build_cx_instances(k)
    assert cutset_rate_bound(inst) == Fraction(1, k)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_disjoint_paths_cutset(k):
    assert cutset_rate_bound(disjoint_paths(k)) == 1


def test_colocated_sources_share_a_cut():
    # two pairs from one node through a single unit edge: bound 1/2
    net = Network.from_edges([("e", "s", "v"), ("f", "v", "t1"), ("g", "v", "t2")])
    inst = MultipleUnicastInstance(net, (("s", "t1"), ("s", "t2")))
    assert cutset_rate_bound(inst) == Fraction(1, 2)


def test_cutset_limit():
    edges = [(f"e{i}", f"v{i}", f"v{i + 1}") for i in range(25)]
    inst = MultipleUnicastInstance(Network.from_edges(edges), (("v0", "v25"),))
    with pytest.raises(LimitExceeded) as exc:
        cutset_rate_bound(inst)
    assert exc.value.limit == "max_cut_edges"
    assert cutset_rate_bound(inst, max_cut_edges=30) == 1


def test_gadget_a_and_b_cuts():
    for k in (2, 3):
        _, g = build_cx_instances(k)
        net = g.nec.network
        assert cut_capacity(net, [g.nec.source], g.nec.source, g.nec.terminal) == k
        rest = [v for v in net.nodes if v != g.nec.terminal]
        assert cut_capacity(net, rest, g.nec.source, g.nec.terminal) == k
        assert min_cut(net, g.nec.source, g.nec.terminal) == k


def test_cut_precondition():
    net = Network.from_edges([("e", "u", "v", 3)])
    assert cut_capacity(net, ["u"], "u", "v") == 3
    with pytest.raises(PreconditionError):
        cut_capacity(net, ["v"], "u", "v")


def test_nec_instance_checks():
    net = Network.from_edges([("e", "u", "v")])
    with pytest.raises(NetworkError):
        NECInstance(net, "u", "v", ((),))
    with pytest.raises(NetworkError):
        NECInstance(net, "u", "v", (("nope",),))
    with pytest.raises(NetworkError):
        MultipleUnicastInstance(net, (("u", "w"),))


def test_requirement_matrix_is_permutation():
    inst = disjoint_paths(3)
    m = inst.requirement_matrix()
    assert all(sum(row) == 1 for row in m)
    assert all(sum(col) == 1 for col in zip(*m))


@st.composite
def random_dags(draw):
    n_nodes = draw(st.integers(2, 6))
    nodes = [f"v{i}" for i in range(n_nodes)]
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=9))
    caps = draw(st.lists(st.integers(1, 3), min_size=len(chosen), max_size=len(chosen)))
    perm = draw(st.permutations(nodes))
    edges = tuple(Edge(f"e{j}", nodes[a], nodes[b], c)
                  for j, ((a, b), c) in enumerate(zip(chosen, caps)))
    return Network(tuple(perm), edges)


@given(random_dags())
@settings(max_examples=60, deadline=None)
def test_topological_order_is_consistent(net):
    order = validate_network(net)
    pos = {v: i for i, v in enumerate(order)}
    assert sorted(order) == sorted(net.nodes)
    assert all(pos[e.tail] < pos[e.head] for e in net.edges)


@given(random_dags(), st.data())
@settings(max_examples=60, deadline=None)
def test_cut_capacity_additive(net, data):
    part = set(data.draw(st.sets(st.sampled_from(net.nodes))))
    crossing = [e for e in net.edges if e.tail in part and e.head not in part]
    assert cut_capacity(net, part) == sum(e.capacity for e in crossing)
    half = len(crossing) // 2
    assert cut_capacity(net, part) == (edge_set_capacity(net, [e.id for e in crossing[:half]])
                                       + edge_set_capacity(net, [e.id for e in crossing[half:]]))


def _naive_cut_bound(inst):
    import itertools

    import networkx as nx

    best = None
    edges = inst.network.edges
    for size in range(1, len(edges) + 1):
        for combo in itertools.combinations(edges, size):
            g = nx.MultiDiGraph()
            g.add_nodes_from(inst.network.nodes)
            g.add_edges_from((e.tail, e.head) for e in edges if e not in combo)
            sep = sum(1 for s, t in inst.pairs if not nx.has_path(g, s, t))
            if sep:
                b = Fraction(sum(e.capacity for e in combo), sep)
                best = b if best is None or b < best else best
    return best


@given(random_dags(), st.data())
@settings(max_examples=40, deadline=None)
def test_cutset_matches_naive_enumeration(net, data):
    nodes = list(net.nodes)
    pairs = data.draw(st.lists(st.tuples(st.sampled_from(nodes), st.sampled_from(nodes)),
                               min_size=1, max_size=3))
    inst = MultipleUnicastInstance(net, tuple(pairs))
    assert cutset_rate_bound(inst) == _naive_cut_bound(inst)
