from __future__ import annotations

import dataclasses
import random

import pytest

from conftest import disjoint_paths, relay_code
from necred.codeeval import ErrorPattern, evaluate, perturb_code
from necred.counterexample import build_cx_instances
from necred.errors import CodeMismatch, NotGadgetError, PreconditionError
from necred.netmodel import MultipleUnicastInstance, Network, cut_capacity
from necred.reduction import backward_embed, build_gadget, check_gadget
from necred.verifier import verify_mu, verify_nec


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gadget_counts(k):
    inst = disjoint_paths(k)
    g = build_gadget(inst)
    net = g.nec.network
    assert len(net.nodes) == len(inst.network.nodes) + 2 * k + 2
    assert len(net.edges) == len(inst.network.edges) + 6 * k
    assert len(g.nec.adversary_class) == len(inst.network.edges) + 6 * k - 2 * k
    check_gadget(g)


def test_gadget_structure_and_cuts():
    _, g = build_cx_instances(2)
    net = g.nec.network
    assert [e.id for e in net.out_edges(g.nec.source)] == ["a.1", "a.2"]
    assert [e.id for e in net.in_edges(g.nec.terminal)] == ["b.1", "b.2"]
    assert cut_capacity(net, [g.nec.source]) == 2
    assert all(net.edge(e).capacity == 1 for r in g.roles for e in (r.x, r.y, r.zp))
    # N's edges come first, so z.i is the last input of s_i
    assert [e.id for e in net.in_edges("s1")] == ["z.1"]
    assert g.n_edges == ("s1-C", "s2-C", "C-D", "D-t1", "D-t2")


def test_name_collisions_get_fresh_ids():
    net = Network.from_edges([("a.1", "s", "t"), ("x", "A1", "B1")])
    inst = MultipleUnicastInstance(net, (("s", "t"),))
    g = build_gadget(inst)
    r = g.roles[0]
    assert r.a != "a.1" and r.a.startswith("a.1")
    assert g.nec.source not in ("s",) and g.nec.terminal != "t"
    assert r.A != "A1" and r.B != "B1"
    assert net.edge("a.1") == g.nec.network.edge("a.1")
    check_gadget(g)


def test_deterministic():
    inst = disjoint_paths(2)
    assert build_gadget(inst) == build_gadget(inst)


def test_check_gadget_catches_tampering():
    _, g = build_cx_instances(2)
    bad = dataclasses.replace(g.nec, adversary_class=g.nec.adversary_class[:-1])
    with pytest.raises(NotGadgetError):
        check_gadget(dataclasses.replace(g, nec=bad))


def test_embedded_relay_paths_zero_error():
    inst = disjoint_paths(2)
    g = build_gadget(inst)
    code = backward_embed(g, relay_code(inst, 1))
    assert code.message_widths == (2,)
    assert verify_nec(g.nec, code).epsilon == 0


def test_embedded_trace_with_x_error():
    inst = disjoint_paths(2)
    g = build_gadget(inst)
    code = backward_embed(g, relay_code(inst, 1))
    ev = evaluate(g.nec, code, 0b01, ErrorPattern.single("x.1", 1))
    assert ev.signals["x.1"] != ev.signals["y.1"]
    assert ev.signals["zp.1"] == 1 == ev.signals["b.1"]
    assert ev.outputs["t"] == 0b01


def test_embed_rejects_non_unit_rate():
    inst = disjoint_paths(2)
    g = build_gadget(inst)
    code = relay_code(inst, 2)
    bad = dataclasses.replace(code, message_widths=(1, 1))
    with pytest.raises(CodeMismatch):
        backward_embed(g, bad)


def test_build_gadget_missing_node():
    net = Network.from_edges([("e", "u", "v")])
    inst = MultipleUnicastInstance(net, (("u", "v"),))
    object.__setattr__(inst, "pairs", (("u", "w"),))
    with pytest.raises(PreconditionError):
        build_gadget(inst)


@pytest.mark.parametrize("seed", range(20))
def test_embedded_error_never_exceeds_mu_error(seed):
    rng = random.Random(seed)
    inst, g = build_cx_instances(2) if seed % 2 else (disjoint_paths(2), None)
    g = g or build_gadget(inst)
    n = 1 + seed % 2
    mu = relay_code(inst, n)
    edges = rng.sample([e.id for e in inst.network.edges], 1 + seed % 3 if seed % 2 else 1)
    mu = perturb_code(mu, edges, rng)
    eps_mu = verify_mu(inst, mu).epsilon
    eps_nec = verify_nec(g.nec, backward_embed(g, mu)).epsilon
    assert eps_nec <= eps_mu
