"""Exhaustive adversarial verification of network codes.

Every message is simulated under the no-error pattern and under every
admissible error pattern; a message is *good* when all of those runs decode
it correctly.  Probabilities are exact :class:`~fractions.Fraction` values.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterator

from .codeeval import (
    NO_ERROR,
    ErrorPattern,
    NetworkCode,
    Simulator,
)
from .errors import InvariantViolation, LimitExceeded, NotGadgetError, PreconditionError
from .netmodel import MultipleUnicastInstance, NECInstance

DEFAULT_MAX_PATTERNS = 1 << 20
DEFAULT_MAX_MESSAGES = 1 << 20


def pattern_count(inst: NECInstance, n: int, closed_down: bool = False) -> int:
    """Number of patterns :func:`enumerate_patterns` yields (no-error included)."""
    net = inst.network
    total = 1
    for a in inst.adversary_class:
        choices = [(1 << (n * net.edge(e).capacity)) - 1 for e in a]
        if closed_down:
            prod = 1
            for c in choices:
                prod *= c + 1
            total += prod - 1
        else:
            prod = 1
            for c in choices:
                prod *= c
            total += prod
    return total


def enumerate_patterns(inst: NECInstance, n: int, *, max_patterns: int = DEFAULT_MAX_PATTERNS,
                       closed_down: bool = False) -> Iterator[ErrorPattern]:
    """Yield the no-error pattern, then every A-error for each A in class order.

    Strict semantics put a nonzero mask on every edge of A.  With
    ``closed_down`` every nonempty subset of A is also enumerated.
    """
    count = pattern_count(inst, n, closed_down)
    if count > max_patterns:
        raise LimitExceeded("max_patterns", count, max_patterns)
    net = inst.network
    yield NO_ERROR
    for a in inst.adversary_class:
        subsets = [a]
        if closed_down:
            subsets = [s for r in range(1, len(a) + 1) for s in itertools.combinations(a, r)]
        for sub in subsets:
            ranges = [range(1, 1 << (n * net.edge(e).capacity)) for e in sub]
            for masks in itertools.product(*ranges):
                yield ErrorPattern(tuple(zip(sub, masks)), realized_set=tuple(sub))


@dataclass(frozen=True)
class VerificationReport:
    good: tuple[int, ...]
    bad: tuple[tuple[int, ErrorPattern], ...]
    message_count: int
    pattern_count: int

    @property
    def epsilon(self) -> Fraction:
        return Fraction(len(self.bad), self.message_count)

    @cached_property
    def bad_messages(self) -> frozenset[int]:
        return frozenset(m for m, _ in self.bad)

    @cached_property
    def good_set(self) -> frozenset[int]:
        return frozenset(self.good)

    def witness(self, message: int) -> ErrorPattern | None:
        for m, r in self.bad:
            if m == message:
                return r
        return None

    def to_json(self):
        eps = self.epsilon
        return {
            "epsilon": {"num": eps.numerator, "den": eps.denominator},
            "good_count": len(self.good),
            "bad": [{"message": m, "witness_pattern": r.to_json()} for m, r in self.bad],
            "pattern_count": self.pattern_count,
            "message_count": self.message_count,
        }


def _nec_chunk(inst, code, messages, patterns):
    sim = Simulator(inst, code, check=False)
    t = inst.terminal
    verdicts = []
    for m in messages:
        witness = None
        for idx, masks in patterns:
            _, out = sim.run_raw((m,), masks)
            if out[t] != m:
                witness = idx
                break
        verdicts.append((m, witness))
    return verdicts


def _chunks(seq, parts):
    size = max(1, -(-len(seq) // parts))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def verify_nec(inst: NECInstance, code: NetworkCode, *,
               max_patterns: int = DEFAULT_MAX_PATTERNS,
               max_messages: int = DEFAULT_MAX_MESSAGES,
               closed_down: bool = False,
               workers: int = 1) -> VerificationReport:
    """Partition the message space of ``code`` into good and bad messages.

    A bad message's witness is the first failing pattern in enumeration order.
    """
    sim = Simulator(inst, code)
    (width,) = code.message_widths
    n_messages = 1 << width
    if n_messages > max_messages:
        raise LimitExceeded("max_messages", n_messages, max_messages)
    patterns = list(enumerate_patterns(inst, code.block_length, max_patterns=max_patterns,
                                       closed_down=closed_down))
    keyed = [(i, sim.mask_vector(p)) for i, p in enumerate(patterns)]
    messages = list(range(n_messages))

    if workers > 1 and n_messages > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_nec_chunk, inst, code, chunk, keyed)
                       for chunk in _chunks(messages, workers)]
            verdicts = [v for f in futures for v in f.result()]
    else:
        verdicts = _nec_chunk(inst, code, messages, keyed)

    good = tuple(m for m, w in verdicts if w is None)
    bad = tuple((m, patterns[w]) for m, w in verdicts if w is not None)
    return VerificationReport(good, bad, n_messages, len(patterns))


@dataclass(frozen=True)
class MUReport:
    failures: tuple[tuple[int, ...], ...]
    message_count: int

    @property
    def epsilon(self) -> Fraction:
        return Fraction(len(self.failures), self.message_count)

    def to_json(self):
        eps = self.epsilon
        return {
            "epsilon": {"num": eps.numerator, "den": eps.denominator},
            "message_count": self.message_count,
            "failures": [list(m) for m in self.failures],
        }


def _mu_chunk(inst, code, tuples):
    sim = Simulator(inst, code, check=False)
    bad = []
    for m in tuples:
        _, out = sim.run_raw(m, {})
        if out != sim.expected_outputs(m):
            bad.append(m)
    return bad


def verify_mu(inst: MultipleUnicastInstance, code: NetworkCode, *,
              max_messages: int = DEFAULT_MAX_MESSAGES, workers: int = 1) -> MUReport:
    """Fraction of joint message tuples on which some terminal is wrong."""
    Simulator(inst, code)  # topology / width check
    total = 1 << sum(code.message_widths)
    if total > max_messages:
        raise LimitExceeded("max_messages", total, max_messages)
    tuples = list(itertools.product(*(range(1 << w) for w in code.message_widths)))
    if workers > 1 and len(tuples) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_mu_chunk, inst, code, chunk)
                       for chunk in _chunks(tuples, workers)]
            failures = [m for f in futures for m in f.result()]
    else:
        failures = _mu_chunk(inst, code, tuples)
    return MUReport(tuple(failures), total)


# ---------------------------------------------------------------------------
# cut images


@dataclass(frozen=True)
class CutImages:
    """Error-free signals on the gadget's six branch edge families.

    Each map sends a good message to its k-tuple of signals (branch 1 first).
    """

    gadget: object
    code: NetworkCode
    report: VerificationReport
    a: dict[int, tuple[int, ...]]
    b: dict[int, tuple[int, ...]]
    z: dict[int, tuple[int, ...]]
    zp: dict[int, tuple[int, ...]]
    x: dict[int, tuple[int, ...]]
    y: dict[int, tuple[int, ...]]

    @property
    def k(self) -> int:
        return len(self.gadget.roles)

    @property
    def n(self) -> int:
        return self.code.block_length

    @property
    def good(self) -> tuple[int, ...]:
        return self.report.good

    @property
    def epsilon(self) -> Fraction:
        return self.report.epsilon

    @property
    def space(self) -> int:
        """Size of ``[2^n]^k``, the rate-k message space."""
        return 1 << (self.k * self.n)

    @property
    def error_budget(self) -> Fraction:
        """``epsilon * 2^{kn}``."""
        return self.epsilon * self.space

    @cached_property
    def A_good(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self.a.values())

    @cached_property
    def B_good(self) -> frozenset[tuple[int, ...]]:
        return frozenset(self.b.values())

    @property
    def A_err_count(self) -> int:
        return self.space - len(self.A_good)

    @property
    def B_err_count(self) -> int:
        return self.space - len(self.B_good)

    def all_vectors(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(1 << self.n), repeat=self.k)

    @cached_property
    def A_err(self) -> frozenset[tuple[int, ...]]:
        return frozenset(v for v in self.all_vectors() if v not in self.A_good)

    @cached_property
    def B_err(self) -> frozenset[tuple[int, ...]]:
        return frozenset(v for v in self.all_vectors() if v not in self.B_good)

    def check_bounds(self) -> dict[str, bool]:
        budget = self.error_budget
        return {
            "A_err": self.A_err_count <= budget,
            "B_err": self.B_err_count <= budget,
        }


def cut_images(gadget, code: NetworkCode, report: VerificationReport) -> CutImages:
    """Record the error-free a/b/z/z'/x/y vectors of every good message.

    Raises :class:`InvariantViolation` if two good messages share an a- or
    b-vector; both are cuts, so that cannot happen for a correct report.
    """
    roles = getattr(gadget, "roles", None)
    if roles is None or not isinstance(getattr(gadget, "nec", None), NECInstance):
        raise NotGadgetError("cut images need a reduction gadget")
    sim = Simulator(gadget.nec, code)
    pos = gadget.nec.network.edge_index
    fams = {name: [pos[getattr(r, name)] for r in roles] for name in ("a", "b", "z", "zp", "x", "y")}
    maps: dict[str, dict[int, tuple[int, ...]]] = {name: {} for name in fams}
    for m in report.good:
        sig, _ = sim.run_raw((m,), {})
        for name, ix in fams.items():
            maps[name][m] = tuple(sig[j] for j in ix)
    for name in ("a", "b"):
        if len(set(maps[name].values())) != len(maps[name]):
            raise InvariantViolation(f"{name}(.) is not injective on the good messages")
    return CutImages(gadget, code, report, **maps)


def check_report(inst: NECInstance, code: NetworkCode, report: VerificationReport) -> None:
    """Re-evaluate every witness and confirm the good/bad partition is exact."""
    sim = Simulator(inst, code)
    if set(report.good) & report.bad_messages:
        raise InvariantViolation("a message is both good and bad")
    if len(report.good) + len(report.bad) != report.message_count:
        raise InvariantViolation("good and bad do not cover the message space")
    for m, r in report.bad:
        if sim.run(m, r).outputs[inst.terminal] == m:
            raise InvariantViolation(f"witness for message {m} does not misdecode")
    if report.pattern_count < 1:
        raise PreconditionError("report enumerated no patterns")
