from __future__ import annotations

import itertools
from fractions import Fraction

import pytest

from conftest import disjoint_paths
from necred.codeeval import DECODE_FAILURE, ErrorPattern, evaluate
from necred.counterexample import (
    build_cx_code,
    build_cx_instances,
    demonstrate_unachievability,
    pieces_of,
    search_zero_error_codes,
    verify_cx_zero_error,
)
from necred.errors import LimitExceeded, PreconditionError
from necred.netmodel import cut_capacity, cutset_rate_bound


def _brute_force_n1(inst):
    """Literally enumerate every 1-bit table on every edge and decoder."""
    net = inst.network
    order = net.edge_order
    arity = {e.id: len(net.in_edges(e.tail)) + len(inst.sources_at(e.tail)) for e in order}
    dec_arity = {t: len(net.in_edges(t)) for t in inst.terminal_nodes}
    slots = list(arity) + list(dec_arity)
    sizes = [1 << a for a in arity.values()] + [1 << a for a in dec_arity.values()]
    choices = [list(itertools.product((0, 1), repeat=s)) for s in sizes]
    tuples = list(itertools.product((0, 1), repeat=inst.k))
    total = sat = 0
    for assignment in itertools.product(*choices):
        total += 1
        tab = dict(zip(slots, assignment))
        ok = True
        for m in tuples:
            sig = {}
            for e in order:
                ins = [sig[d.id] for d in net.in_edges(e.tail)]
                ins += [m[i] for i in inst.sources_at(e.tail)]
                idx = sum(v << j for j, v in enumerate(ins))
                sig[e.id] = tab[e.id][idx]
            for t in inst.terminal_nodes:
                ins = [sig[d.id] for d in net.in_edges(t)]
                idx = sum(v << j for j, v in enumerate(ins))
                (i,) = inst.terminals_at(t)
                if tab[t][idx] != m[i]:
                    ok = False
                    break
            if not ok:
                break
        sat += ok
    return total, sat


def test_instances_k2():
    inst, g = build_cx_instances(2)
    assert len(inst.network.nodes) == 6 and len(inst.network.edges) == 5
    assert len(g.nec.network.nodes) == 12 and len(g.nec.network.edges) == 17
    assert cutset_rate_bound(inst) == Fraction(1, 2)
    assert cut_capacity(g.nec.network, [g.nec.source]) == 2
    with pytest.raises(PreconditionError):
        build_cx_instances(1)


@pytest.mark.parametrize("k,n", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)])
def test_rate(k, n):
    cx = build_cx_code(k, n)
    assert cx.rate == k - Fraction(k, n)
    assert cx.code.message_widths == (k * (n - 1),)


def test_degenerate_block_length():
    with pytest.raises(PreconditionError):
        build_cx_code(2, 1)


def test_cd_carries_xor_of_pieces():
    cx = build_cx_code(2, 2)
    assert evaluate(cx.gadget.nec, cx.code, 0b01).signals["C-D"] == 1


@pytest.mark.parametrize("k,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_zero_error_and_flag_logic(k, n):
    res = verify_cx_zero_error(k, n)
    assert res.epsilon == 0
    assert res.max_flags == 1
    assert res.failures_declared == 0
    assert res.fallback_violations == 0


def test_x1_error_flags_only_branch_1():
    cx = build_cx_code(2, 3)
    for m in range(16):
        ev = evaluate(cx.gadget.nec, cx.code, m, ErrorPattern.single("x.1", 1))
        assert ev.signals["b.1"] >> 2 == 1 and ev.signals["b.2"] >> 2 == 0
        assert ev.outputs["t"] == m != DECODE_FAILURE


def test_pieces_of():
    assert pieces_of(0b1101, 2, 2) == (1, 3)


def test_n1_search_matches_brute_force_bottleneck():
    inst, _ = build_cx_instances(2)
    res = search_zero_error_codes(inst, 1)
    assert (res.codes_enumerated, res.satisfying) == _brute_force_n1(inst) == (65536, 0)


def test_n1_search_matches_brute_force_paths():
    inst = disjoint_paths(2)
    res = search_zero_error_codes(inst, 1)
    # each path: a bijective encoder and its inverse decoder
    assert (res.codes_enumerated, res.satisfying) == _brute_force_n1(inst) == (256, 4)


def test_search_limit():
    inst, _ = build_cx_instances(2)
    with pytest.raises(LimitExceeded) as exc:
        search_zero_error_codes(inst, 1, max_codes=100)
    assert exc.value.limit == "max_codes"


def test_demonstration_k2():
    rep = demonstrate_unachievability(2, (2, 3, 4))
    assert [p["rate"] for p in rep["rate_points"]] == [1, Fraction(4, 3), Fraction(3, 2)]
    assert all(p["epsilon"] == 0 for p in rep["rate_points"])
    assert rep["cutset_bound"] == Fraction(1, 2)
    assert rep["gadget_cutset_bound"] == 2
    assert rep["n1_search"] == {"codes_enumerated": 65536, "satisfying": 0}


def test_demonstration_large_k_skips_search():
    rep = demonstrate_unachievability(5, (2, 3), max_verify_runs=1000)
    assert rep["n1_search"] is None and "n1_search_skipped" in rep
    assert all(p["epsilon"] is None for p in rep["rate_points"])
    assert [p["rate"] for p in rep["rate_points"]] == [Fraction(5, 2), Fraction(10, 3)]
