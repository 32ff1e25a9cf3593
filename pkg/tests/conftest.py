from __future__ import annotations

import pytest

from necred.codeeval import LocalFunction, NetworkCode
from necred.counterexample import build_cx_instances
from necred.netmodel import MultipleUnicastInstance, Network
from necred.reduction import build_gadget


def disjoint_paths(k: int) -> MultipleUnicastInstance:
    edges = [(f"p{i}", f"s{i}", f"t{i}", 1) for i in range(1, k + 1)]
    net = Network.from_edges(edges)
    return MultipleUnicastInstance(net, tuple((f"s{i}", f"t{i}") for i in range(1, k + 1)))


def relay_code(inst: MultipleUnicastInstance, n: int) -> NetworkCode:
    """Every edge relays its first input (or the message); decoders relay."""
    net = inst.network
    enc = {}
    for e in net.edges:
        widths = [n * d.capacity for d in net.in_edges(e.tail)]
        widths += [n] * len(inst.sources_at(e.tail))
        enc[e.id] = LocalFunction.relay(widths, 0)
    dec = {t: LocalFunction.relay([n * d.capacity for d in net.in_edges(t)], 0)
           for t in inst.terminal_nodes}
    return NetworkCode(n, enc, dec, (n,) * inst.k)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def paths2():
    return disjoint_paths(2)


@pytest.fixture
def gadget_paths2(paths2):
    return build_gadget(paths2)


@pytest.fixture
def bottleneck():
    return build_cx_instances(2)


def leaky_cx_code(n: int = 3):
    """Lifted k=2 family code whose B_i also copies z'_i's low bit into payload bit 1.

    The terminal reads only payload bit 0, so the good messages are those
    with both pieces in {0, 1}.  Inside one a_i class b_i then takes two
    values, which gives lemma4_witnesses something to
    find.  Returns ``(gadget, code)``.
    """
    from necred.codeeval import DECODE_FAILURE
    from necred.counterexample import build_cx_code

    k = 2
    cx = build_cx_code(k, n, rate_k=True)
    flag = 1 << (n - 1)
    payload = flag - 1

    def b_rule(v):
        x, y, zp = v
        if x & payload == y & payload:
            return (x & 1) | ((zp & 1) << 1)
        return (zp & 1) | flag

    def decode(bs):
        flagged = [i for i, b in enumerate(bs) if b & flag]
        if len(flagged) > 1:
            return DECODE_FAILURE
        bits = [b & 1 for b in bs]
        if flagged:
            bits[flagged[0]] ^= bits[1 - flagged[0]]
        return sum(v << (j * n) for j, v in enumerate(bits))

    enc = {r.b: LocalFunction.from_callable((n,) * 3, n, b_rule) for r in cx.gadget.roles}
    dec = {cx.gadget.nec.terminal: LocalFunction.from_callable((n,) * k, k * n, decode,
                                                               allow_failure=True)}
    return cx.gadget, cx.code.replace(encoders=enc, decoders=dec)
