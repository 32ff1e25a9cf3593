"""JSON file formats for instances, gadgets, codes and reports."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .codeeval import (
    NetworkCode,
    decoder_input_widths,
    encoder_input_widths,
    function_from_json,
    terminal_slots,
)
from .errors import NetworkError
from .netmodel import Edge, MultipleUnicastInstance, NECInstance, Network
from .reduction import ROLE_NAMES, Branch, GadgetInstance, check_gadget


def _default(obj):
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, default=_default, indent=2, sort_keys=False)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def fraction_from_json(obj) -> Fraction:
    return Fraction(obj["num"], obj["den"])


# ---------------------------------------------------------------------------
# networks and instances


def network_to_json(net: Network) -> dict:
    return {
        "nodes": list(net.nodes),
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head, "capacity": e.capacity}
                  for e in net.edges],
    }


def network_from_json(obj) -> Network:
    try:
        edges = tuple(Edge(str(e["id"]), str(e["tail"]), str(e["head"]), e.get("capacity", 1))
                      for e in obj["edges"])
        return Network(tuple(str(v) for v in obj["nodes"]), edges)
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network description: {exc}") from exc


def instance_to_json(inst) -> dict:
    if isinstance(inst, GadgetInstance):
        out = instance_to_json(inst.nec)
        out["roles"] = {str(r.index): r.to_json() for r in inst.roles}
        return out
    out = network_to_json(inst.network)
    if isinstance(inst, MultipleUnicastInstance):
        out["kind"] = "multiple_unicast"
        out["pairs"] = [list(p) for p in inst.pairs]
    else:
        out["kind"] = "nec"
        out["source"] = inst.source
        out["terminal"] = inst.terminal
        out["adversary_class"] = [list(a) for a in inst.adversary_class]
    return out


def instance_from_json(obj):
    """Parse a multiple-unicast, NEC, or gadget (NEC plus ``roles``) description."""
    if not isinstance(obj, dict):
        raise NetworkError("instance description must be a JSON object")
    net = network_from_json(obj)
    kind = obj.get("kind")
    if kind == "multiple_unicast":
        return MultipleUnicastInstance(net, tuple(tuple(p) for p in obj["pairs"]))
    if kind != "nec":
        raise NetworkError(f"unknown instance kind {kind!r}")
    nec = NECInstance(net, obj["source"], obj["terminal"],
                      tuple(tuple(a) for a in obj.get("adversary_class", ())))
    if "roles" not in obj:
        return nec
    return _gadget_from_roles(nec, obj["roles"])


def _gadget_from_roles(nec: NECInstance, roles_obj) -> GadgetInstance:
    roles = []
    for key in sorted(roles_obj, key=int):
        r = roles_obj[key]
        roles.append(Branch(int(key), r["s_node"], r["t_node"], r["A"], r["B"],
                            **{name: r[name] for name in ROLE_NAMES}))
    gadget_edges = {getattr(r, name) for r in roles for name in ROLE_NAMES}
    gadget_nodes = {nec.source, nec.terminal} | {r.A for r in roles} | {r.B for r in roles}
    inner = Network(tuple(v for v in nec.network.nodes if v not in gadget_nodes),
                    tuple(e for e in nec.network.edges if e.id not in gadget_edges))
    prov = MultipleUnicastInstance(inner, tuple((r.s_node, r.t_node) for r in roles))
    g = GadgetInstance(nec, prov, tuple(roles))
    check_gadget(g)
    return g


def load_instance(path):
    return instance_from_json(read_json(path))


# ---------------------------------------------------------------------------
# codes


def code_from_json(obj, inst) -> NetworkCode:
    """Bind a code description to ``inst`` (widths come from the topology).

    ``message_widths`` defaults to ``n`` per pair for multiple-unicast
    instances and to ``n`` times the source's total out-capacity for NEC
    instances.
    """
    if isinstance(inst, GadgetInstance):
        inst = inst.nec
    n = int(obj["block_length"])
    if "message_widths" in obj:
        mw = tuple(int(w) for w in obj["message_widths"])
    elif isinstance(inst, NECInstance):
        mw = (n * sum(e.capacity for e in inst.network.out_edges(inst.source)),)
    else:
        mw = (n,) * inst.k
    enc = {}
    for e in inst.network.edges:
        if e.id not in obj["encoders"]:
            raise NetworkError(f"code has no encoder for edge {e.id!r}")
        enc[e.id] = function_from_json(obj["encoders"][e.id],
                                       encoder_input_widths(inst, n, mw, e.id),
                                       n * e.capacity)
    dec = {}
    for t, slots in terminal_slots(inst).items():
        if t not in obj["decoders"]:
            raise NetworkError(f"code has no decoder for terminal {t!r}")
        dec[t] = function_from_json(obj["decoders"][t], decoder_input_widths(inst, n, t),
                                    sum(mw[i] for i in slots), allow_failure=True)
    extra = set(obj["encoders"]) - set(enc)
    if extra:
        raise NetworkError(f"code names unknown edges {sorted(extra)}")
    return NetworkCode(n, enc, dec, mw)


def load_code(path, inst) -> NetworkCode:
    return code_from_json(read_json(path), inst)
