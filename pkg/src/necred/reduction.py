"""The multiple-unicast -> single-unicast NEC gadget and the backward embedding.

For an instance with pairs ``(s_i, t_i)`` the gadget adds a super source
``s``, a super terminal ``t`` and, per branch ``i``, two nodes ``A_i`` and
``B_i`` with unit-capacity edges::

    a.i : s   -> A_i        x.i, y.i : A_i -> B_i (parallel)
    z.i : A_i -> s_i        zp.i     : t_i -> B_i
    b.i : B_i -> t

The adversary may corrupt any single edge except the a- and b-edges.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codeeval import (
    Concat,
    LocalFunction,
    NetworkCode,
    Relay,
    Slice,
    check_code,
    resplit,
)
from .errors import CodeMismatch, NotGadgetError, PreconditionError
from .netmodel import Edge, MultipleUnicastInstance, NECInstance, Network

ROLE_NAMES = ("a", "x", "y", "z", "zp", "b")


@dataclass(frozen=True)
class Branch:
    index: int  # 1-based
    s_node: str
    t_node: str
    A: str
    B: str
    a: str
    x: str
    y: str
    z: str
    zp: str
    b: str

    def to_json(self):
        return {name: getattr(self, name) for name in
                ("s_node", "t_node", "A", "B") + ROLE_NAMES}


@dataclass(frozen=True)
class GadgetInstance:
    nec: NECInstance
    provenance: MultipleUnicastInstance
    roles: tuple[Branch, ...]

    @property
    def k(self) -> int:
        return len(self.roles)

    @property
    def n_edges(self) -> tuple[str, ...]:
        """Ids of the embedded network's edges."""
        return tuple(e.id for e in self.provenance.network.edges)

    def role_edges(self, name: str) -> tuple[str, ...]:
        return tuple(getattr(r, name) for r in self.roles)

    def relay_pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple((r.a, r.z) for r in self.roles)


def _fresh(name: str, taken: set[str]) -> str:
    out, j = name, 1
    while out in taken:
        out = f"{name}_{j}"
        j += 1
    taken.add(out)
    return out


def build_gadget(inst: MultipleUnicastInstance) -> GadgetInstance:
    """Wrap ``inst``'s network in the k-branch NEC gadget.

    The embedded network is copied unchanged; gadget names that collide with
    existing node or edge ids get a numeric suffix, recorded in ``roles``.
    """
    net = inst.network
    nodes = set(net.nodes)
    for s, t in inst.pairs:
        for v in (s, t):
            if v not in nodes:
                raise PreconditionError(f"pair node {v!r} is missing from the network")
    taken_nodes = set(net.nodes)
    taken_edges = set(net.edge_index)
    src = _fresh("s", taken_nodes)
    a_nodes = [_fresh(f"A{i}", taken_nodes) for i in range(1, inst.k + 1)]
    b_nodes = [_fresh(f"B{i}", taken_nodes) for i in range(1, inst.k + 1)]
    dst = _fresh("t", taken_nodes)

    edges = list(net.edges)
    roles = []
    for i, (s_i, t_i) in enumerate(inst.pairs, start=1):
        A, B = a_nodes[i - 1], b_nodes[i - 1]
        ids = {name: _fresh(f"{name}.{i}", taken_edges) for name in ROLE_NAMES}
        edges += [
            Edge(ids["a"], src, A, 1),
            Edge(ids["x"], A, B, 1),
            Edge(ids["y"], A, B, 1),
            Edge(ids["z"], A, s_i, 1),
            Edge(ids["zp"], t_i, B, 1),
            Edge(ids["b"], B, dst, 1),
        ]
        roles.append(Branch(i, s_i, t_i, A, B, **ids))

    node_order = tuple(net.nodes) + (src,) + tuple(a_nodes) + tuple(b_nodes) + (dst,)
    g_net = Network(node_order, tuple(edges))
    protected = {r.a for r in roles} | {r.b for r in roles}
    adversary = tuple((e.id,) for e in g_net.edges if e.id not in protected)
    nec = NECInstance(g_net, src, dst, adversary)
    return GadgetInstance(nec, inst, tuple(roles))


def check_gadget(g: GadgetInstance) -> None:
    """Machine-check the gadget's structural invariants."""
    net = g.nec.network
    inner = g.provenance.network
    for e in inner.edges:
        if net.edge_index.get(e.id) is None or net.edge(e.id) != e:
            raise NotGadgetError(f"embedded edge {e.id!r} altered")
    k = g.k
    if len(net.out_edges(g.nec.source)) != k or net.in_edges(g.nec.terminal) != tuple(
            net.edge(r.b) for r in g.roles):
        raise NotGadgetError("source/terminal degree mismatch")
    for r in g.roles:
        want = {
            r.a: (g.nec.source, r.A), r.x: (r.A, r.B), r.y: (r.A, r.B),
            r.z: (r.A, r.s_node), r.zp: (r.t_node, r.B), r.b: (r.B, g.nec.terminal),
        }
        for eid, (u, v) in want.items():
            e = net.edge(eid)
            if (e.tail, e.head, e.capacity) != (u, v, 1):
                raise NotGadgetError(f"branch {r.index} edge {eid!r} misplaced")
        if {e.id for e in net.out_edges(r.A)} != {r.x, r.y, r.z}:
            raise NotGadgetError(f"node {r.A!r} has unexpected out-edges")
        if [e.id for e in net.out_edges(r.B)] != [r.b]:
            raise NotGadgetError(f"node {r.B!r} has unexpected out-edges")
    protected = set(g.role_edges("a")) | set(g.role_edges("b"))
    expected = {(e.id,) for e in net.edges if e.id not in protected}
    if set(g.nec.adversary_class) != expected:
        raise NotGadgetError("adversary class is not all singletons except a/b")


# ---------------------------------------------------------------------------
# backward direction: multiple-unicast code -> NEC code


def forward_value_rule(n: int) -> LocalFunction:
    """B_i for the embedded code: forward x if x == y, else forward z'."""
    return LocalFunction.from_callable(
        (n, n, n), n, lambda v: v[0] if v[0] == v[1] else v[2]
    )


def backward_embed(g: GadgetInstance, mu_code: NetworkCode) -> NetworkCode:
    """Lift a unit-rate code for the embedded instance to a rate-k gadget code.

    The source splits its ``kn``-bit message into pieces ``M_1..M_k`` (piece
    1 in the lowest bits); ``a_i`` carries ``M_i`` and ``x_i, y_i, z_i`` relay
    it; the embedded network runs ``mu_code`` with ``z_i`` standing in for
    source ``s_i``'s message; ``z'_i`` carries ``t_i``'s decoded estimate;
    ``B_i`` forwards ``x_i`` when it agrees with ``y_i`` and ``z'_i``
    otherwise; ``t`` concatenates ``b_1..b_k``.
    """
    inst = g.provenance
    check_code(inst, mu_code)
    n = mu_code.block_length
    if any(w != n for w in mu_code.message_widths):
        raise CodeMismatch(f"embedding needs unit rate: message widths must all be {n}")
    k = g.k
    net = g.nec.network
    enc: dict[str, LocalFunction] = {}

    for r in g.roles:
        lo = (r.index - 1) * n
        enc[r.a] = LocalFunction((k * n,), n, form=Slice(lo, lo + n))
        for eid in (r.x, r.y, r.z):
            enc[eid] = LocalFunction.relay((n,), 0)
        enc[r.b] = forward_value_rule(n)

    for e in inst.network.edges:
        widths = tuple(n * d.capacity for d in net.in_edges(e.tail))
        enc[e.id] = resplit(mu_code.encoders[e.id], widths)

    for r in g.roles:
        enc[r.zp] = _estimate_on_zp(g, mu_code, r)

    dec = {g.nec.terminal: LocalFunction(
        (n,) * k, k * n, form=Concat(tuple((Relay(j), n) for j in range(k))))}
    code = NetworkCode(n, enc, dec, (k * n,))
    check_code(g.nec, code)
    return code


def _estimate_on_zp(g: GadgetInstance, mu_code: NetworkCode, r: Branch) -> LocalFunction:
    inst = g.provenance
    n = mu_code.block_length
    net = g.nec.network
    t_i = r.t_node
    dec = mu_code.decoders[t_i]
    slots = inst.terminals_at(t_i)
    offset = sum(mu_code.message_widths[j] for j in slots[:slots.index(r.index - 1)])
    in_ids = [e.id for e in net.in_edges(t_i)]
    inner_ids = [e.id for e in inst.network.in_edges(t_i)]
    widths = tuple(n * net.edge(eid).capacity for eid in in_ids)
    if in_ids == inner_ids and len(slots) == 1 and not dec.allow_failure:
        return dec
    keep = [in_ids.index(eid) for eid in inner_ids]

    def estimate(values):
        out = dec([values[j] for j in keep])
        if out < 0:
            return 0
        return (out >> offset) & ((1 << n) - 1)

    return LocalFunction.from_callable(widths, n, estimate)
