"""The two-hop bottleneck family and its explicit error-correcting code.

The embedded network has sources ``s_1..s_k`` feeding a relay ``C``, a single
unit edge ``C -> D`` and ``D`` fanning out to ``t_1..t_k``.  Unit rate is out
of reach there (the ``C -> D`` edge limits the common rate to ``1/k``), yet
the gadget built on it admits a zero-error code of rate ``k - k/n`` for every
block length ``n >= 2``.

Signal layout of the explicit code: the low ``n - 1`` bits of every signal
are payload, the top bit is a flag that only ``B_i`` ever sets.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction

from .codeeval import (
    DECODE_FAILURE,
    LocalFunction,
    NetworkCode,
    Relay,
    Simulator,
    Slice,
    Xor,
    check_code,
    source_slots,
    terminal_slots,
)
from .errors import LimitExceeded, PreconditionError
from .netmodel import (
    MultipleUnicastInstance,
    Network,
    cut_capacity,
    cutset_rate_bound,
)
from .reduction import GadgetInstance, build_gadget
from .verifier import (
    DEFAULT_MAX_MESSAGES,
    DEFAULT_MAX_PATTERNS,
    VerificationReport,
    enumerate_patterns,
    pattern_count,
    verify_nec,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_CODES = 1 << 24


def build_cx_instances(k: int) -> tuple[MultipleUnicastInstance, GadgetInstance]:
    if k < 2:
        raise PreconditionError("the family needs k >= 2")
    s = [f"s{i}" for i in range(1, k + 1)]
    t = [f"t{i}" for i in range(1, k + 1)]
    edges = [(f"{si}-C", si, "C", 1) for si in s]
    edges.append(("C-D", "C", "D", 1))
    edges += [(f"D-{ti}", "D", ti, 1) for ti in t]
    net = Network.from_edges(edges, nodes=s + ["C", "D"] + t)
    inst = MultipleUnicastInstance(net, tuple(zip(s, t)))
    return inst, build_gadget(inst)


@dataclass(frozen=True)
class CxCode:
    k: int
    n: int
    code: NetworkCode
    instance: MultipleUnicastInstance
    gadget: GadgetInstance
    piece_width: int

    @property
    def rate(self) -> Fraction:
        return self.code.rate

    @property
    def payload_width(self) -> int:
        return self.n - 1


def _b_rule(n: int) -> LocalFunction:
    payload = (1 << (n - 1)) - 1
    flag = 1 << (n - 1)

    def rule(v):
        x, y, zp = v
        if x & payload == y & payload:
            return x & payload
        return (zp & payload) | flag

    return LocalFunction.from_callable((n, n, n), n, rule)


def _terminal_rule(k: int, n: int, piece_width: int) -> LocalFunction:
    payload = (1 << (n - 1)) - 1

    def decode(bs):
        flagged = [i for i, b in enumerate(bs) if b >> (n - 1)]
        if len(flagged) >= 2:
            return DECODE_FAILURE
        pieces = [b & payload for b in bs]
        if flagged:
            l = flagged[0]
            for j, p in enumerate(pieces):
                if j != l:
                    pieces[l] ^= p
        out = 0
        for j, p in enumerate(pieces):
            out |= p << (j * piece_width)
        return out

    return LocalFunction.from_callable((n,) * k, k * piece_width, decode, allow_failure=True)


def build_cx_code(k: int, n: int, *, rate_k: bool = False) -> CxCode:
    """The explicit code: pieces on a/x/y/z, their xor through ``C -> D``.

    ``B_i`` forwards the x-payload with flag 0 when x and y agree and the
    z'-payload with flag 1 otherwise; ``t`` takes unflagged payloads as is
    and recovers a single flagged piece by xoring out the others.

    With ``rate_k`` the source message has ``kn`` bits and ``a_i`` carries
    the full n-bit piece ``i``; every other function is unchanged.  Only
    messages whose pieces have a zero top bit decode, which gives a rate-k
    code the forward transfer can analyse.
    """
    if k < 2:
        raise PreconditionError("the family needs k >= 2")
    if n < 2:
        raise PreconditionError("block length must be >= 2 (payload width n-1 would be 0)")
    inst, g = build_cx_instances(k)
    piece = n if rate_k else n - 1
    net = g.nec.network
    enc = {}
    for r in g.roles:
        lo = (r.index - 1) * piece
        enc[r.a] = LocalFunction((k * piece,), n, form=Slice(lo, lo + piece))
        for eid in (r.x, r.y, r.z, r.zp):
            enc[eid] = LocalFunction.relay((n,), 0)
        enc[r.b] = _b_rule(n)
    for e in inst.network.edges:
        widths = tuple(n for _ in net.in_edges(e.tail))
        if e.id == "C-D":
            enc[e.id] = LocalFunction(widths, n, form=Xor(tuple(Relay(j) for j in range(k))))
        else:
            enc[e.id] = LocalFunction.relay(widths, 0)
    dec = {g.nec.terminal: _terminal_rule(k, n, piece)}
    code = NetworkCode(n, enc, dec, (k * piece,))
    check_code(g.nec, code)
    return CxCode(k, n, code, inst, g, piece)


def pieces_of(message: int, k: int, width: int) -> tuple[int, ...]:
    return tuple((message >> (i * width)) & ((1 << width) - 1) for i in range(k))


@dataclass(frozen=True)
class CxVerification:
    report: VerificationReport
    max_flags: int
    failures_declared: int
    fallback_violations: int
    evaluations: int

    @property
    def epsilon(self) -> Fraction:
        return self.report.epsilon


def verify_cx_zero_error(k: int, n: int, *, max_patterns: int = DEFAULT_MAX_PATTERNS,
                         max_messages: int = DEFAULT_MAX_MESSAGES) -> CxVerification:
    """Verify the explicit code exhaustively and trace its flag logic.

    Besides the good/bad partition this counts, over every (message, pattern)
    run, the largest number of simultaneously flagged b-edges, how often the
    terminal declared failure, and how often a flagged B_i forwarded a payload
    other than the true xor of all pieces.
    """
    cx = build_cx_code(k, n)
    report = verify_nec(cx.gadget.nec, cx.code, max_patterns=max_patterns,
                        max_messages=max_messages)
    sim = Simulator(cx.gadget.nec, cx.code)
    roles = cx.gadget.roles
    pos = cx.gadget.nec.network.edge_index
    b_pos = [pos[r.b] for r in roles]
    payload = (1 << (n - 1)) - 1
    patterns = [sim.mask_vector(p) for p in enumerate_patterns(cx.gadget.nec, n,
                                                                 max_patterns=max_patterns)]
    max_flags = failures = bad_fallback = runs = 0
    t = cx.gadget.nec.terminal
    for m in range(1 << cx.code.message_widths[0]):
        parity = 0
        for p in pieces_of(m, k, n - 1):
            parity ^= p
        for masks in patterns:
            sig, out = sim.run_raw((m,), masks)
            runs += 1
            flags = [sig[j] >> (n - 1) for j in b_pos]
            max_flags = max(max_flags, sum(flags))
            if out[t] == DECODE_FAILURE:
                failures += 1
            for j, f in zip(b_pos, flags):
                if f and sig[j] & payload != parity:
                    bad_fallback += 1
    return CxVerification(report, max_flags, failures, bad_fallback, runs)


# ---------------------------------------------------------------------------
# exhaustive search for zero-error multiple-unicast codes


@dataclass(frozen=True)
class SearchResult:
    codes_enumerated: int
    satisfying: int


def _count_tables(domain: int, out_bits: int) -> int:
    return (1 << out_bits) ** domain


def search_zero_error_codes(inst: MultipleUnicastInstance, n: int, *, rate_bits: int | None = None,
                            max_codes: int = DEFAULT_MAX_CODES) -> SearchResult:
    """Count every length-``n`` code on ``inst`` that decodes all tuples.

    Every encoder and decoder ranges over all tables of its signature.  The
    search walks edges in topological order carrying each edge's signal as a
    vector over all joint message tuples; a table only matters through the
    input indices that actually occur, so entries at unused indices are
    counted in closed form instead of being enumerated one by one.
    """
    w = n if rate_bits is None else rate_bits
    k = inst.k
    net = inst.network
    slots = source_slots(inst)
    terms = terminal_slots(inst)
    tuples = list(itertools.product(range(1 << w), repeat=k))

    steps = []
    total = 1
    for e in net.edge_order:
        ins = [net.edge_index[d.id] for d in net.in_edges(e.tail)]
        widths = [n * d.capacity for d in net.in_edges(e.tail)]
        here = slots.get(e.tail, ())
        if here:
            widths.append(w * len(here))
        out_bits = n * e.capacity
        total *= _count_tables(1 << sum(widths), out_bits)
        steps.append((net.edge_index[e.id], ins, widths, here, out_bits))
    dec_steps = []
    for t, ix in terms.items():
        ins = [net.edge_index[d.id] for d in net.in_edges(t)]
        widths = [n * d.capacity for d in net.in_edges(t)]
        out_bits = w * len(ix)
        total *= _count_tables(1 << sum(widths), out_bits)
        dec_steps.append((ins, widths, ix, out_bits))
    if total > max_codes:
        raise LimitExceeded("max_codes", total, max_codes)

    def index_vector(sigs, ins, widths, here):
        idx = []
        for row, m in enumerate(tuples):
            val, shift = 0, 0
            for j, wd in zip(ins, widths):
                val |= sigs[j][row] << shift
                shift += wd
            for i in here:
                val |= m[i] << shift
                shift += w
            idx.append(val)
        return idx

    def decoders_ok(sigs) -> int:
        ways = 1
        for ins, widths, ix, out_bits in dec_steps:
            idx = index_vector(sigs, ins, widths, ())
            need: dict[int, int] = {}
            for row, m in enumerate(tuples):
                val, shift = 0, 0
                for i in ix:
                    val |= m[i] << shift
                    shift += w
                if need.setdefault(idx[row], val) != val:
                    return 0
            domain = 1 << sum(widths)
            ways *= _count_tables(domain - len(need), out_bits)
        return ways

    satisfying = 0

    def walk(step, sigs, mult):
        nonlocal satisfying
        if step == len(steps):
            ways = decoders_ok(sigs)
            if ways:
                satisfying += mult * ways
            return
        pos, ins, widths, here, out_bits = steps[step]
        idx = index_vector(sigs, ins, widths, here)
        used = sorted(set(idx))
        free = (1 << sum(widths)) - len(used)
        sub_mult = mult * _count_tables(free, out_bits)
        for values in itertools.product(range(1 << out_bits), repeat=len(used)):
            f = dict(zip(used, values))
            sigs[pos] = [f[v] for v in idx]
            walk(step + 1, sigs, sub_mult)
        sigs[pos] = None

    walk(0, [None] * len(net.edges), 1)
    return SearchResult(total, satisfying)


# ---------------------------------------------------------------------------
# demonstration


def demonstrate_unachievability(k: int, ns=(2, 3, 4), *, n1_search: bool = True,
                                max_patterns: int = DEFAULT_MAX_PATTERNS,
                                max_messages: int = DEFAULT_MAX_MESSAGES,
                                max_verify_runs: int = 1 << 18,
                                max_codes: int = DEFAULT_MAX_CODES) -> dict:
    """Rates reached by the explicit family versus what the embedded network allows.

    Each point ``n`` reports the exact rate ``k - k/n`` and, when the
    exhaustive run fits in ``max_verify_runs`` simulations, its verified
    error probability.  The n = 1 search only runs for ``k == 2``.
    """
    inst, g = build_cx_instances(k)
    points = []
    for n in sorted(set(ns)):
        cx = build_cx_code(k, n)
        runs = (1 << cx.code.message_widths[0]) * pattern_count(g.nec, n)
        eps = None
        if runs <= max_verify_runs:
            eps = verify_nec(g.nec, cx.code, max_patterns=max_patterns,
                             max_messages=max_messages).epsilon
        else:
            log.info("skipping verification of n=%d (%d runs)", n, runs)
        points.append({"n": n, "rate": cx.rate, "epsilon": eps})
    a_cut = cut_capacity(g.nec.network, [g.nec.source], g.nec.source, g.nec.terminal)
    out = {
        "k": k,
        "rate_points": points,
        "cutset_bound": cutset_rate_bound(inst),
        "gadget_cutset_bound": cutset_rate_bound(g.nec),
        "a_cut_capacity": a_cut,
        "n1_search": None,
    }
    if n1_search and k == 2:
        res = search_zero_error_codes(inst, 1, max_codes=max_codes)
        out["n1_search"] = {"codes_enumerated": res.codes_enumerated,
                            "satisfying": res.satisfying}
    elif n1_search:
        out["n1_search_skipped"] = f"exhaustive n=1 search only runs for k=2 (got k={k})"
    return out
