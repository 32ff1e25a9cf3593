"""Bit-vector network codes and their deterministic simulation.

Signals are plain Python ints.  A signal of width ``w`` is an integer in
``[0, 2**w)`` with bit 0 the least significant bit.  A tuple of inputs with
widths ``(w_0, w_1, ...)`` is packed into a single table index with input 0
in the lowest bits, input 1 above it, and so on.

Local encoding functions take the signals on the tail node's incoming edges
(declared edge order), followed by the node's message slot when the node
hosts one or more sources.  A message slot holding several co-located
sources is the concatenation of their messages in pair order, the first
pair in the lowest bits.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import CodeMismatch, LimitExceeded, PreconditionError
from .netmodel import MultipleUnicastInstance, NECInstance

DEFAULT_MAX_TABLE_ENTRIES = 1 << 24

# Distinguished decoder output meaning "decoding failure declared".  Never
# equal to any message, so it always counts as an error.
DECODE_FAILURE = -1


def pack(values: Sequence[int], widths: Sequence[int]) -> int:
    """Pack ``values`` into one integer, first value in the lowest bits."""
    out, shift = 0, 0
    for v, w in zip(values, widths):
        out |= v << shift
        shift += w
    return out


def unpack(index: int, widths: Sequence[int]) -> tuple[int, ...]:
    out = []
    for w in widths:
        out.append(index & ((1 << w) - 1))
        index >>= w
    return tuple(out)


# ---------------------------------------------------------------------------
# structured forms


class Form:
    """Structured description of a function of an input tuple."""

    def eval(self, inputs: Sequence[int]) -> int:
        raise NotImplementedError

    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Relay(Form):
    index: int

    def eval(self, inputs):
        return inputs[self.index]

    def to_json(self):
        return {"relay": self.index}


@dataclass(frozen=True)
class Xor(Form):
    terms: tuple[Form, ...]

    def eval(self, inputs):
        acc = 0
        for t in self.terms:
            acc ^= t.eval(inputs)
        return acc

    def to_json(self):
        return {"xor": [t.index if isinstance(t, Relay) else t.to_json() for t in self.terms]}


@dataclass(frozen=True)
class Const(Form):
    value: int

    def eval(self, inputs):
        return self.value

    def to_json(self):
        return {"const": self.value}


@dataclass(frozen=True)
class Slice(Form):
    """Bits ``[lo, hi)`` of ``of`` (input 0 by default), shifted down to bit 0."""

    lo: int
    hi: int
    of: Form = Relay(0)

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError(f"bad slice bounds [{self.lo}, {self.hi})")

    def eval(self, inputs):
        return (self.of.eval(inputs) >> self.lo) & ((1 << (self.hi - self.lo)) - 1)

    def to_json(self):
        body = {"lo": self.lo, "hi": self.hi}
        if self.of != Relay(0):
            body["of"] = self.of.to_json()
        return {"slice": body}


@dataclass(frozen=True)
class Concat(Form):
    """Concatenate ``(form, width)`` parts, first part in the lowest bits."""

    parts: tuple[tuple[Form, int], ...]

    def eval(self, inputs):
        out, shift = 0, 0
        for f, w in self.parts:
            out |= (f.eval(inputs) & ((1 << w) - 1)) << shift
            shift += w
        return out

    def to_json(self):
        return {"concat": [{"form": f.to_json(), "width": w} for f, w in self.parts]}


@dataclass(frozen=True)
class Compose(Form):
    """``stages[0] ∘ stages[1] ∘ ...``: the last stage sees the real inputs,
    each earlier stage sees the previous result as its only input."""

    stages: tuple[Form, ...]

    def eval(self, inputs):
        value = self.stages[-1].eval(inputs)
        for f in reversed(self.stages[:-1]):
            value = f.eval((value,))
        return value

    def to_json(self):
        return {"compose": [f.to_json() for f in self.stages]}


def parse_form(obj) -> Form:
    if isinstance(obj, bool):
        raise ValueError(f"not a form: {obj!r}")
    if isinstance(obj, int):
        return Relay(obj)
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"not a form: {obj!r}")
    (kind, body), = obj.items()
    if kind == "relay":
        return Relay(int(body))
    if kind == "xor":
        return Xor(tuple(parse_form(t) for t in body))
    if kind == "const":
        return Const(int(body))
    if kind == "slice":
        of = parse_form(body["of"]) if "of" in body else Relay(0)
        return Slice(int(body["lo"]), int(body["hi"]), of)
    if kind == "concat":
        return Concat(tuple((parse_form(p["form"]), int(p["width"])) for p in body))
    if kind == "compose":
        return Compose(tuple(parse_form(f) for f in body))
    raise ValueError(f"unknown form kind {kind!r}")


# ---------------------------------------------------------------------------
# local functions


@dataclass(frozen=True)
class LocalFunction:
    """A total function from an input tuple to one signal.

    Exactly one of ``table`` (indexed by the packed input tuple) and ``form``
    is set.  ``allow_failure`` lets a decoder output :data:`DECODE_FAILURE`.
    """

    input_widths: tuple[int, ...]
    output_width: int
    table: tuple[int, ...] | None = None
    form: Form | None = None
    allow_failure: bool = False

    def __post_init__(self):
        object.__setattr__(self, "input_widths", tuple(self.input_widths))
        if (self.table is None) == (self.form is None):
            raise ValueError("a local function needs exactly one of table/form")
        if self.table is not None:
            table = tuple(int(v) for v in self.table)
            object.__setattr__(self, "table", table)
            if len(table) != self.domain_size:
                raise CodeMismatch(
                    f"table has {len(table)} entries, domain has {self.domain_size}"
                )
            top = 1 << self.output_width
            for v in table:
                if not (0 <= v < top or (self.allow_failure and v == DECODE_FAILURE)):
                    raise CodeMismatch(f"table entry {v} does not fit {self.output_width} bits")

    @property
    def domain_bits(self) -> int:
        return sum(self.input_widths)

    @property
    def domain_size(self) -> int:
        return 1 << self.domain_bits

    @property
    def is_table(self) -> bool:
        return self.table is not None

    def __call__(self, inputs: Sequence[int]) -> int:
        if self.table is not None:
            return self.table[pack(inputs, self.input_widths)]
        v = self.form.eval(inputs)
        if not (0 <= v < (1 << self.output_width)):
            if not (self.allow_failure and v == DECODE_FAILURE):
                raise CodeMismatch(f"output {v} does not fit {self.output_width} bits")
        return v

    # constructors ----------------------------------------------------------

    @classmethod
    def relay(cls, input_widths, index: int = 0) -> "LocalFunction":
        widths = tuple(input_widths)
        return cls(widths, widths[index], form=Relay(index))

    @classmethod
    def from_callable(cls, input_widths, output_width: int, fn, *,
                      allow_failure: bool = False,
                      max_entries: int = DEFAULT_MAX_TABLE_ENTRIES) -> "LocalFunction":
        """Tabulate ``fn(inputs_tuple)`` over the whole domain."""
        widths = tuple(input_widths)
        size = 1 << sum(widths)
        if size > max_entries:
            raise LimitExceeded("max_table_entries", size, max_entries)
        table = tuple(fn(unpack(i, widths)) for i in range(size))
        return cls(widths, output_width, table=table, allow_failure=allow_failure)

    def with_table(self, table) -> "LocalFunction":
        return LocalFunction(self.input_widths, self.output_width, table=tuple(table),
                             allow_failure=self.allow_failure)

    def to_json(self):
        if self.table is not None:
            return {"table": list(self.table)}
        return self.form.to_json()


def expand_truth_table(f: LocalFunction,
                       max_entries: int = DEFAULT_MAX_TABLE_ENTRIES) -> LocalFunction:
    """Explicit-table equivalent of ``f``; tables are returned as is."""
    if f.is_table:
        return f
    if f.domain_size > max_entries:
        raise LimitExceeded("max_table_entries", f.domain_size, max_entries)
    return LocalFunction.from_callable(f.input_widths, f.output_width, f,
                                       allow_failure=f.allow_failure,
                                       max_entries=max_entries)


def function_from_json(obj, input_widths, output_width, *, allow_failure=False) -> LocalFunction:
    if isinstance(obj, dict) and set(obj) == {"table"}:
        return LocalFunction(input_widths, output_width, table=tuple(obj["table"]),
                             allow_failure=allow_failure)
    return LocalFunction(input_widths, output_width, form=parse_form(obj),
                         allow_failure=allow_failure)


def resplit(f: LocalFunction, widths) -> LocalFunction:
    """Same function over the same packed index, split into ``widths``."""
    widths = tuple(widths)
    if f.input_widths == widths:
        return f
    if sum(widths) != f.domain_bits:
        raise CodeMismatch(f"cannot re-split inputs {f.input_widths} into {widths}")
    return LocalFunction(widths, f.output_width, table=expand_truth_table(f).table,
                         allow_failure=f.allow_failure)


def is_relay_of(f: LocalFunction, index: int) -> bool:
    if f.form == Relay(index):
        return True
    if f.output_width != f.input_widths[index]:
        return False
    g = expand_truth_table(f)
    widths = f.input_widths
    return all(g.table[i] == unpack(i, widths)[index] for i in range(g.domain_size))


# ---------------------------------------------------------------------------
# codes and instance layout


@dataclass(frozen=True)
class NetworkCode:
    """Block length, per-edge encoders, per-terminal-node decoders.

    ``message_widths`` lists the bit width of each logical source: one entry
    per pair for a multiple-unicast instance, a single entry for an NEC
    instance.
    """

    block_length: int
    encoders: Mapping[str, LocalFunction]
    decoders: Mapping[str, LocalFunction]
    message_widths: tuple[int, ...]

    def __post_init__(self):
        if self.block_length < 1:
            raise CodeMismatch("block length must be positive")
        object.__setattr__(self, "encoders", dict(self.encoders))
        object.__setattr__(self, "decoders", dict(self.decoders))
        object.__setattr__(self, "message_widths", tuple(self.message_widths))

    @property
    def rates(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(w, self.block_length) for w in self.message_widths)

    @property
    def rate(self) -> Fraction:
        """Total source rate in bits per channel use."""
        return Fraction(sum(self.message_widths), self.block_length)

    def replace(self, *, encoders=None, decoders=None) -> "NetworkCode":
        enc = dict(self.encoders)
        enc.update(encoders or {})
        dec = dict(self.decoders)
        dec.update(decoders or {})
        return NetworkCode(self.block_length, enc, dec, self.message_widths)

    def to_json(self):
        return {
            "block_length": self.block_length,
            "message_widths": list(self.message_widths),
            "encoders": {k: f.to_json() for k, f in self.encoders.items()},
            "decoders": {k: f.to_json() for k, f in self.decoders.items()},
        }


def code_fingerprint(code: NetworkCode) -> str:
    """SHA-256 of the canonical JSON serialization of ``code``."""
    blob = json.dumps(code.to_json(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def source_slots(inst) -> dict[str, tuple[int, ...]]:
    """Map each source-hosting node to its logical source indices."""
    if isinstance(inst, NECInstance):
        return {inst.source: (0,)}
    out: dict[str, list[int]] = {}
    for i, (s, _) in enumerate(inst.pairs):
        out.setdefault(s, []).append(i)
    return {v: tuple(ix) for v, ix in out.items()}


def terminal_slots(inst) -> dict[str, tuple[int, ...]]:
    """Map each terminal node to the logical sources it must decode."""
    if isinstance(inst, NECInstance):
        return {inst.terminal: (0,)}
    out: dict[str, list[int]] = {}
    for i, (_, t) in enumerate(inst.pairs):
        out.setdefault(t, []).append(i)
    return {v: tuple(ix) for v, ix in out.items()}


def signal_width(inst, code_or_n, edge_id: str) -> int:
    n = code_or_n if isinstance(code_or_n, int) else code_or_n.block_length
    return n * inst.network.edge(edge_id).capacity


def encoder_input_widths(inst, n: int, message_widths, edge_id: str) -> tuple[int, ...]:
    net = inst.network
    tail = net.edge(edge_id).tail
    widths = [n * e.capacity for e in net.in_edges(tail)]
    slots = source_slots(inst).get(tail)
    if slots:
        widths.append(sum(message_widths[i] for i in slots))
    return tuple(widths)


def decoder_input_widths(inst, n: int, terminal: str) -> tuple[int, ...]:
    return tuple(n * e.capacity for e in inst.network.in_edges(terminal))


def check_code(inst, code: NetworkCode) -> None:
    """Raise :class:`CodeMismatch` unless ``code`` fits ``inst`` exactly."""
    net = inst.network
    n = code.block_length
    expected_sources = 1 if isinstance(inst, NECInstance) else inst.k
    if len(code.message_widths) != expected_sources:
        raise CodeMismatch(
            f"code has {len(code.message_widths)} message widths, "
            f"instance has {expected_sources} sources"
        )
    for w in code.message_widths:
        if w < 0:
            raise CodeMismatch("message widths must be nonnegative")
    if set(code.encoders) != set(net.edge_index):
        missing = set(net.edge_index) - set(code.encoders)
        extra = set(code.encoders) - set(net.edge_index)
        raise CodeMismatch(f"encoder set mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
    for e in net.edges:
        f = code.encoders[e.id]
        want = encoder_input_widths(inst, n, code.message_widths, e.id)
        if f.input_widths != want:
            raise CodeMismatch(f"encoder {e.id!r} takes widths {f.input_widths}, expected {want}")
        if f.output_width != n * e.capacity:
            raise CodeMismatch(
                f"encoder {e.id!r} outputs {f.output_width} bits, edge carries {n * e.capacity}"
            )
    terms = terminal_slots(inst)
    if set(code.decoders) != set(terms):
        raise CodeMismatch(
            f"decoders for {sorted(code.decoders)} but terminals are {sorted(terms)}"
        )
    for t, slots in terms.items():
        f = code.decoders[t]
        want = decoder_input_widths(inst, n, t)
        if f.input_widths != want:
            raise CodeMismatch(f"decoder {t!r} takes widths {f.input_widths}, expected {want}")
        out = sum(code.message_widths[i] for i in slots)
        if f.output_width != out:
            raise CodeMismatch(f"decoder {t!r} outputs {f.output_width} bits, expected {out}")


# ---------------------------------------------------------------------------
# error patterns


@dataclass(frozen=True)
class ErrorPattern:
    """Sparse edge -> nonzero xor mask assignment.

    ``realized_set`` is the adversary set the pattern realizes; it is empty
    for the no-error pattern.  Zero masks are dropped on construction.
    """

    masks: tuple[tuple[str, int], ...] = ()
    realized_set: tuple[str, ...] = field(default=None)

    def __post_init__(self):
        masks = tuple((e, int(m)) for e, m in self.masks if m)
        object.__setattr__(self, "masks", masks)
        if self.realized_set is None:
            object.__setattr__(self, "realized_set", tuple(e for e, _ in masks))
        else:
            object.__setattr__(self, "realized_set", tuple(self.realized_set))
        for _, m in masks:
            if m < 0:
                raise PreconditionError("error masks must be nonnegative")

    @classmethod
    def none(cls) -> "ErrorPattern":
        return cls()

    @classmethod
    def single(cls, edge_id: str, mask: int) -> "ErrorPattern":
        return cls(((edge_id, mask),))

    @property
    def is_zero(self) -> bool:
        return not self.masks

    def as_dict(self) -> dict[str, int]:
        return dict(self.masks)

    def touches(self, edge_id: str) -> bool:
        return any(e == edge_id for e, _ in self.masks)

    def to_json(self):
        return {e: m for e, m in self.masks}


NO_ERROR = ErrorPattern()


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class Evaluation:
    signals: dict[str, int]
    outputs: dict[str, int]


class Simulator:
    """Compiled evaluation plan for one (instance, code) pair.

    ``run`` returns the transported signal on every edge (encoder output xor
    mask) and each terminal node's decoder output.
    """

    def __init__(self, inst, code: NetworkCode, *, check: bool = True):
        if check:
            check_code(inst, code)
        self.inst = inst
        self.code = code
        net = inst.network
        self.edge_ids = tuple(e.id for e in net.edges)
        self.edge_pos = net.edge_index
        self.widths = tuple(code.block_length * e.capacity for e in net.edges)
        slots = source_slots(inst)
        self._slot_layout = {}
        for v, ix in slots.items():
            shifts, s = [], 0
            for i in ix:
                shifts.append((i, s))
                s += code.message_widths[i]
            self._slot_layout[v] = tuple(shifts)

        self._steps = []
        for e in net.edge_order:
            ins = tuple(net.edge_index[d.id] for d in net.in_edges(e.tail))
            self._steps.append(
                (net.edge_index[e.id], ins, e.tail if e.tail in slots else None,
                 code.encoders[e.id])
            )
        self._decoders = []
        for t in terminal_slots(inst):
            ins = tuple(net.edge_index[d.id] for d in net.in_edges(t))
            self._decoders.append((t, ins, code.decoders[t]))

    def normalize_message(self, message) -> tuple[int, ...]:
        if isinstance(message, int):
            message = (message,)
        message = tuple(message)
        if len(message) != len(self.code.message_widths):
            raise CodeMismatch(
                f"message has {len(message)} parts, code has {len(self.code.message_widths)} sources"
            )
        for v, w in zip(message, self.code.message_widths):
            if not 0 <= v < (1 << w):
                raise CodeMismatch(f"message part {v} does not fit {w} bits")
        return message

    def mask_vector(self, pattern: ErrorPattern | None) -> dict[int, int]:
        if pattern is None:
            return {}
        out = {}
        for eid, m in pattern.masks:
            pos = self.edge_pos.get(eid)
            if pos is None:
                raise PreconditionError(f"pattern masks unknown edge {eid!r}")
            if m >= (1 << self.widths[pos]):
                raise PreconditionError(f"mask {m} does not fit edge {eid!r}")
            out[pos] = m
        return out

    def run_raw(self, message: tuple[int, ...], masks: dict[int, int]):
        """Fast path: message already normalized, masks keyed by edge position."""
        sig = [0] * len(self.widths)
        node_msg = {}
        for v, layout in self._slot_layout.items():
            val = 0
            for i, s in layout:
                val |= message[i] << s
            node_msg[v] = val
        for pos, ins, slot_node, fn in self._steps:
            inputs = [sig[j] for j in ins]
            if slot_node is not None:
                inputs.append(node_msg[slot_node])
            out = fn(inputs)
            if pos in masks:
                out ^= masks[pos]
            sig[pos] = out
        outputs = {}
        for t, ins, fn in self._decoders:
            outputs[t] = fn([sig[j] for j in ins])
        return sig, outputs

    def run(self, message, pattern: ErrorPattern | None = None) -> Evaluation:
        msg = self.normalize_message(message)
        sig, outputs = self.run_raw(msg, self.mask_vector(pattern))
        return Evaluation(dict(zip(self.edge_ids, sig)), outputs)

    def expected_outputs(self, message: tuple[int, ...]) -> dict[str, int]:
        """What each terminal must output for ``message`` to count as decoded."""
        out = {}
        for t, slots in terminal_slots(self.inst).items():
            val, s = 0, 0
            for i in slots:
                val |= message[i] << s
                s += self.code.message_widths[i]
            out[t] = val
        return out


def evaluate(inst, code: NetworkCode, message, pattern: ErrorPattern | None = None) -> Evaluation:
    """Simulate ``code`` on ``inst`` for one message and one error pattern.

    ``message`` is an int for an NEC instance, or a tuple with one entry per
    pair for a multiple-unicast instance.
    """
    return Simulator(inst, code).run(message, pattern)


# ---------------------------------------------------------------------------
# relay normalization


def normalize_relay(inst, code: NetworkCode, edge_pairs,
                    max_entries: int = DEFAULT_MAX_TABLE_ENTRIES) -> NetworkCode:
    """Rewrite ``code`` so each ``z`` edge relays its ``a`` edge.

    For every ``(a, z)`` pair the processing that ``z``'s encoder applied to
    ``a``'s signal is moved into every function at ``z``'s head node that
    reads ``z``.  Error-free behaviour is unchanged.  Under errors on ``z``
    the adversary can only produce ``f(a ^ r)`` instead of ``f(a) ^ r``, so
    the set of correctly decodable messages never shrinks (and is unchanged
    for bijective ``f``).  Returns ``code`` itself when nothing needs moving.
    """
    net = inst.network
    check_code(inst, code)
    enc = dict(code.encoders)
    dec = dict(code.decoders)
    changed = False
    for a_id, z_id in edge_pairs:
        z = net.edge(z_id)
        tail_in = [e.id for e in net.in_edges(z.tail)]
        if a_id not in tail_in:
            raise PreconditionError(f"{a_id!r} is not an input of {z_id!r}'s tail")
        if len(tail_in) != 1 or z.tail in source_slots(inst):
            raise PreconditionError(
                f"{z_id!r}'s tail reads more than {a_id!r}; processing cannot be displaced"
            )
        f = enc[z_id]
        if is_relay_of(f, 0):
            continue
        if f.output_width != f.input_widths[0]:
            raise CodeMismatch(
                f"{z_id!r} ({f.output_width} bits) cannot relay {a_id!r} ({f.input_widths[0]} bits)"
            )
        f_table = expand_truth_table(f, max_entries)
        enc[z_id] = LocalFunction.relay(f.input_widths, 0)

        head = z.head
        pos = [e.id for e in net.in_edges(head)].index(z_id)
        for e in net.out_edges(head):
            enc[e.id] = _substitute(enc[e.id], pos, f_table, max_entries)
        if head in dec:
            dec[head] = _substitute(dec[head], pos, f_table, max_entries)
        changed = True
    if not changed:
        return code
    return NetworkCode(code.block_length, enc, dec, code.message_widths)


def _substitute(g: LocalFunction, pos: int, f: LocalFunction, max_entries: int) -> LocalFunction:
    def composed(inputs):
        inputs = list(inputs)
        inputs[pos] = f((inputs[pos],))
        return g(inputs)

    return LocalFunction.from_callable(g.input_widths, g.output_width, composed,
                                       allow_failure=g.allow_failure, max_entries=max_entries)


def perturb_code(code: NetworkCode, edge_ids, rng, *, max_changes: int | None = None,
                 max_entries: int = DEFAULT_MAX_TABLE_ENTRIES) -> NetworkCode:
    """Copy of ``code`` with random truth-table entries on ``edge_ids``.

    Each listed encoder is expanded to a table and between one and
    ``max_changes`` (default: a quarter of the table, at least one) entries are
    overwritten with uniformly random signals drawn from ``rng``
    (a :class:`random.Random`).
    """
    enc = {}
    for eid in edge_ids:
        f = expand_truth_table(code.encoders[eid], max_entries)
        table = list(f.table)
        cap = max_changes if max_changes is not None else max(1, len(table) // 4)
        for _ in range(rng.randint(1, cap)):
            table[rng.randrange(len(table))] = rng.randrange(1 << f.output_width)
        enc[eid] = f.with_table(table)
    return code.replace(encoders=enc)
