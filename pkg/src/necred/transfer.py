"""Forward transfer: a rate-k gadget code -> a unit-rate multiple-unicast code.

Branches are numbered from 1, matching the gadget's edge names.  For each
branch the estimator ``psi`` guesses the b-signal from the z'-signal and
``pi`` guesses the a-signal from the b-signal; both are argmax tables over
the good messages' error-free signals.  The transferred decoder at ``t_i``
runs ``z'_i``'s encoder, then ``psi_i``, then ``pi_i``; in relay form
``z_i`` is the identity, so the result is the estimate of ``M_i``.

The remaining functions expose the counting arguments behind the error
bound as computations whose outputs can be checked independently.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .codeeval import (
    ErrorPattern,
    LocalFunction,
    NetworkCode,
    Simulator,
    code_fingerprint,
    is_relay_of,
    resplit,
)
from .errors import FingerprintMismatch, InvariantViolation, PreconditionError
from .verifier import CutImages


def _frac_json(q: Fraction):
    return {"num": q.numerator, "den": q.denominator}


def _argmax(counts: dict[int, int]) -> int:
    # largest class wins, ties to the numerically smallest candidate
    return min(counts, key=lambda c: (-counts[c], c))


@dataclass(frozen=True)
class BranchTables:
    index: int
    psi: tuple[int, ...]
    pi: tuple[int, ...]
    psi_mistakes: frozenset[int]
    pi_mistakes: frozenset[int]
    by_zp: dict = field(repr=False)
    by_zp_b: dict = field(repr=False)
    by_a: dict = field(repr=False)
    by_a_b: dict = field(repr=False)
    by_b: dict = field(repr=False)
    b_hat_for_zp: dict = field(repr=False)
    a_hat_for_b: dict = field(repr=False)

    def to_json(self):
        return {"psi": list(self.psi), "pi": list(self.pi),
                "psi_mistakes": sorted(self.psi_mistakes),
                "pi_mistakes": sorted(self.pi_mistakes)}


@dataclass(frozen=True)
class TransferTables:
    fingerprint: str
    k: int
    n: int
    branches: tuple[BranchTables, ...]

    def branch(self, i: int) -> BranchTables:
        return self.branches[i - 1]

    def to_json(self):
        return {"fingerprint": self.fingerprint, "k": self.k, "n": self.n,
                "branches": [b.to_json() for b in self.branches]}


def _classes(images: CutImages, i: int):
    j = i - 1
    by_zp, by_zp_b = defaultdict(list), defaultdict(list)
    by_a, by_a_b, by_b = defaultdict(list), defaultdict(list), defaultdict(list)
    for m in images.good:
        zp, a, b = images.zp[m][j], images.a[m][j], images.b[m][j]
        by_zp[zp].append(m)
        by_zp_b[zp, b].append(m)
        by_a[a].append(m)
        by_a_b[a, b].append(m)
        by_b[b].append(m)
    freeze = lambda d: {key: tuple(v) for key, v in d.items()}
    return freeze(by_zp), freeze(by_zp_b), freeze(by_a), freeze(by_a_b), freeze(by_b)


def _estimator(pairs: dict, key_count: int):
    table, winners = [], {}
    for key in range(key_count):
        counts = {cand: len(ms) for (k0, cand), ms in pairs.items() if k0 == key}
        if counts:
            winners[key] = _argmax(counts)
            table.append(winners[key])
        else:
            table.append(0)
    return tuple(table), winners


def build_psi(images: CutImages, i: int) -> tuple[tuple[int, ...], frozenset[int]]:
    """Table ``z'_i -> b_i`` and its mistake set over the good messages."""
    _, by_zp_b, *_ = _classes(images, i)
    table, _ = _estimator(by_zp_b, 1 << images.n)
    j = i - 1
    mistakes = frozenset(m for m in images.good if table[images.zp[m][j]] != images.b[m][j])
    return table, mistakes


def build_pi(images: CutImages, i: int) -> tuple[tuple[int, ...], frozenset[int]]:
    """Table ``b_i -> a_i`` and its mistake set over the good messages."""
    _, _, _, by_a_b, _ = _classes(images, i)
    by_b_a = {(b, a): ms for (a, b), ms in by_a_b.items()}
    table, _ = _estimator(by_b_a, 1 << images.n)
    j = i - 1
    mistakes = frozenset(m for m in images.good if table[images.b[m][j]] != images.a[m][j])
    return table, mistakes


def build_tables(images: CutImages) -> TransferTables:
    branches = []
    for i in range(1, images.k + 1):
        by_zp, by_zp_b, by_a, by_a_b, by_b = _classes(images, i)
        psi, psi_m = build_psi(images, i)
        pi, pi_m = build_pi(images, i)
        _, b_hat = _estimator(by_zp_b, 1 << images.n)
        _, a_hat = _estimator({(b, a): ms for (a, b), ms in by_a_b.items()}, 1 << images.n)
        branches.append(BranchTables(i, psi, pi, psi_m, pi_m, by_zp, by_zp_b, by_a,
                                     by_a_b, by_b, b_hat, a_hat))
    return TransferTables(code_fingerprint(images.code), images.k, images.n, tuple(branches))


# ---------------------------------------------------------------------------
# the transferred code


def transfer_code(g, nec_code: NetworkCode, tables: TransferTables) -> NetworkCode:
    """Assemble the unit-rate multiple-unicast code from a gadget code.

    Embedded edges keep their encoders; terminal ``t_i`` decodes with
    ``pi_i(psi_i(phi_{z'_i}(inputs)))``.  Requires a relay-normalized code of
    rate exactly ``k`` and tables built from that same code.
    """
    if code_fingerprint(nec_code) != tables.fingerprint:
        raise FingerprintMismatch("tables were built from a different code")
    k, n = g.k, nec_code.block_length
    if nec_code.message_widths != (k * n,):
        raise PreconditionError(
            f"transfer needs a rate-{k} code ({k * n} message bits), got {nec_code.message_widths}"
        )
    net = g.nec.network
    inst = g.provenance
    for r in g.roles:
        if not is_relay_of(nec_code.encoders[r.z], 0):
            raise PreconditionError(f"edge {r.z!r} does not relay {r.a!r}; normalize first")
        if [e.id for e in net.in_edges(r.t_node)] != [e.id for e in inst.network.in_edges(r.t_node)]:
            raise PreconditionError(f"terminal {r.t_node!r} also receives a gadget edge")

    enc = {}
    for e in inst.network.edges:
        tail = e.tail
        widths = [n * d.capacity for d in inst.network.in_edges(tail)]
        here = inst.sources_at(tail)
        if here:
            widths.append(n * len(here))
        enc[e.id] = resplit(nec_code.encoders[e.id], widths)

    dec = {}
    for t in inst.terminal_nodes:
        slots = inst.terminals_at(t)
        steps = [(nec_code.encoders[g.roles[i].zp], tables.branch(i + 1)) for i in slots]
        widths = tuple(n * d.capacity for d in inst.network.in_edges(t))

        def decode(values, steps=steps):
            out, shift = 0, 0
            for zp_fn, bt in steps:
                out |= bt.pi[bt.psi[zp_fn(values)]] << shift
                shift += n
            return out

        dec[t] = LocalFunction.from_callable(widths, n * len(slots), decode)
    return NetworkCode(n, enc, dec, (n,) * k)


# ---------------------------------------------------------------------------
# error accounting


@dataclass(frozen=True)
class BranchEvents:
    index: int
    e1: Fraction
    e2: Fraction
    e3: Fraction


@dataclass(frozen=True)
class TransferReport:
    epsilon: Fraction
    branches: tuple[BranchEvents, ...]
    eps_tau: Fraction

    @property
    def k(self) -> int:
        return len(self.branches)

    @property
    def bound(self) -> Fraction:
        return 6 * self.k * self.epsilon

    @property
    def union_bound(self) -> Fraction:
        return sum((b.e1 + b.e2 + b.e3 for b in self.branches), Fraction(0))

    @property
    def checks(self) -> dict[str, bool]:
        eps = self.epsilon
        out = {}
        for b in self.branches:
            out[f"E1[{b.index}]<=eps"] = b.e1 <= eps
            out[f"E2[{b.index}]<=2eps"] = b.e2 <= 2 * eps
            out[f"E3[{b.index}]<=3eps"] = b.e3 <= 3 * eps
        out["eps_tau<=union"] = self.eps_tau <= self.union_bound
        out["eps_tau<=6k*eps"] = self.eps_tau <= self.bound
        return out

    @property
    def holds(self) -> bool:
        return all(self.checks.values())

    def to_json(self):
        return {
            "epsilon": _frac_json(self.epsilon),
            "eps_tau": _frac_json(self.eps_tau),
            "bound_6k_eps": _frac_json(self.bound),
            "union_bound": _frac_json(self.union_bound),
            "holds": self.holds,
            "branches": [
                {"index": b.index, "E1": _frac_json(b.e1), "E2": _frac_json(b.e2),
                 "E3": _frac_json(b.e3)} for b in self.branches
            ],
        }


def transfer_report(images: CutImages, tables: TransferTables, eps_tau: Fraction) -> TransferReport:
    """Exact probabilities of the three failure events, per branch."""
    space = images.space
    z_good = {images.z[m] for m in images.good}
    e1 = 1 - Fraction(len(z_good), space)
    branches = []
    for bt in tables.branches:
        e2 = Fraction(len({images.z[m] for m in bt.psi_mistakes}), space)
        e3 = Fraction(len({images.z[m] for m in bt.pi_mistakes}), space)
        branches.append(BranchEvents(bt.index, e1, e2, e3))
    return TransferReport(images.epsilon, tuple(branches), Fraction(eps_tau))


def lemma_bounds(images: CutImages, tables: TransferTables) -> dict[str, bool]:
    """Mistake-set sizes against their budgets, plus the pigeonhole bound."""
    budget = images.error_budget
    per_b = 1 << ((images.k - 1) * images.n)
    out = {}
    for bt in tables.branches:
        out[f"|Mpsi[{bt.index}]|<=2eps*2^kn"] = len(bt.psi_mistakes) <= 2 * budget
        out[f"|Mpi[{bt.index}]|<=3eps*2^kn"] = len(bt.pi_mistakes) <= 3 * budget
        out[f"|M(b)|<=2^(k-1)n [{bt.index}]"] = all(len(v) <= per_b for v in bt.by_b.values())
    return out


# ---------------------------------------------------------------------------
# witness constructions


@dataclass(frozen=True)
class Lemma2Witness:
    vector: tuple[int, ...]
    message: int
    pattern: ErrorPattern
    m1: int
    m2: int


def _sim(images: CutImages) -> Simulator:
    return Simulator(images.gadget.nec, images.code)


def _b_vector(images, sim, message, pattern):
    ev = sim.run(message, pattern)
    return tuple(ev.signals[r.b] for r in images.gadget.roles), ev.outputs[images.gadget.nec.terminal]


def lemma2_witness(images: CutImages, i: int, m1: int, m2: int,
                   sim: Simulator | None = None) -> Lemma2Witness:
    """Find a b-vector outside the good image that decodes to ``m1`` or ``m2``.

    ``m1`` and ``m2`` must be good, share their z'_i signal and differ on
    b_i.  Corrupting x_i for ``m1`` or y_i for ``m2`` feeds B_i identical
    inputs in both runs, so at least one run moves b_i off its error-free
    value; that run's b-vector is the witness.
    """
    j = i - 1
    good = images.report.good_set
    if m1 not in good or m2 not in good:
        raise PreconditionError("both messages must be good")
    if images.zp[m1][j] != images.zp[m2][j]:
        raise PreconditionError("messages differ on z'_i")
    if images.b[m1][j] == images.b[m2][j]:
        raise PreconditionError("messages agree on b_i")
    sim = sim or _sim(images)
    r = images.gadget.roles[j]
    r1 = ErrorPattern.single(r.x, images.x[m1][j] ^ images.x[m2][j])
    vec, out = _b_vector(images, sim, m1, r1)
    if vec[j] != images.b[m1][j]:
        found = Lemma2Witness(vec, m1, r1, m1, m2)
    else:
        r2 = ErrorPattern.single(r.y, images.y[m1][j] ^ images.y[m2][j])
        vec, out = _b_vector(images, sim, m2, r2)
        if vec[j] == images.b[m2][j]:
            raise InvariantViolation("neither corrupted run moved b_i")
        found = Lemma2Witness(vec, m2, r2, m1, m2)
    if vec in images.B_good:
        raise InvariantViolation(f"witness {vec} is a good b-vector")
    if out != found.message:
        raise InvariantViolation(f"witness {vec} decodes to {out}, not {found.message}")
    return found


@dataclass(frozen=True)
class Deletion:
    zp_value: int
    pairs: tuple[tuple[int, int], ...]
    remaining: tuple[int, ...]
    class_size: int
    top_size: int

    @property
    def count(self) -> int:
        return len(self.pairs)


def pair_deletion(images: CutImages, i: int, zp_value: int) -> Deletion:
    """Greedily delete message pairs of ``M(z'_i)`` with differing b_i.

    The lexicographically smallest qualifying pair goes first.  Afterwards
    the survivors all share one b_i value, so at most the largest b_i class
    remains.
    """
    j = i - 1
    members = sorted(m for m in images.good if images.zp[m][j] == zp_value)
    if not members:
        raise PreconditionError(f"no good message has z'_{i} = {zp_value}")
    b_of = {m: images.b[m][j] for m in members}
    counts: dict[int, int] = defaultdict(int)
    for m in members:
        counts[b_of[m]] += 1
    top = counts[_argmax(counts)]

    w = list(members)
    pairs = []
    while True:
        hit = next(((p, q) for ai, p in enumerate(w) for q in w[ai + 1:] if b_of[p] != b_of[q]),
                   None)
        if hit is None:
            break
        pairs.append(hit)
        w.remove(hit[0])
        w.remove(hit[1])
    if len(w) > top or 2 * len(pairs) < len(members) - top:
        raise InvariantViolation("pair deletion left too many survivors")
    return Deletion(zp_value, tuple(pairs), tuple(w), len(members), top)


def deletion_summary(images: CutImages, i: int) -> tuple[list[Deletion], list[Lemma2Witness]]:
    """Run pair deletion on every z'_i class and build a witness per deleted pair.

    The witnesses of one branch are pairwise distinct elements of B^err.
    """
    j = i - 1
    sim = _sim(images)
    classes = sorted({images.zp[m][j] for m in images.good})
    dels = [pair_deletion(images, i, v) for v in classes]
    wits = [lemma2_witness(images, i, p, q, sim) for d in dels for p, q in d.pairs]
    if len({w.vector for w in wits}) != len(wits):
        raise InvariantViolation("two deleted pairs share a witness")
    return dels, wits


@dataclass(frozen=True)
class Lemma4Result:
    a_value: int
    L: int
    class_size: int
    witnesses: tuple[tuple[tuple[int, ...], int, ErrorPattern], ...]


def lemma4_witnesses(images: CutImages, i: int, a_value: int,
                     sim: Simulator | None = None) -> Lemma4Result:
    """Distinct B^err elements generated inside ``M(a_i = a_value)``.

    With ``L`` distinct b_i values in the class, overwriting z'_i with each
    representative's z'_i signal yields ``L - 1`` fresh b-vectors per class
    member, each decoding to that member.
    """
    j = i - 1
    members = sorted(m for m in images.good if images.a[m][j] == a_value)
    if not members:
        raise PreconditionError(f"no good message has a_{i} = {a_value}")
    reps: dict[int, int] = {}
    for m in members:
        reps.setdefault(images.b[m][j], m)
    L = len(reps)
    sim = sim or _sim(images)
    r = images.gadget.roles[j]
    out = []
    for m0 in members:
        for b_val, mj in sorted(reps.items()):
            pat = ErrorPattern.single(r.zp, images.zp[m0][j] ^ images.zp[mj][j])
            vec, dec = _b_vector(images, sim, m0, pat)
            if vec[j] != b_val:
                raise InvariantViolation("overwriting z'_i did not reproduce the representative's b_i")
            if vec == images.b[m0]:
                continue
            if dec != m0:
                raise InvariantViolation(f"{vec} decodes to {dec}, not {m0}")
            if vec in images.B_good:
                raise InvariantViolation(f"{vec} is a good b-vector")
            out.append((vec, m0, pat))
    if len({v for v, _, _ in out}) != len(out) or len(out) != (L - 1) * len(members):
        raise InvariantViolation("witness count or distinctness failed")
    return Lemma4Result(a_value, L, len(members), tuple(out))


@dataclass(frozen=True)
class PiPartition:
    A1: frozenset[int]
    A2: frozenset[int]
    M1: frozenset[int]
    M2: frozenset[int]
    checks: dict[str, bool]

    @property
    def holds(self) -> bool:
        return all(self.checks.values())


def pi_partition(images: CutImages, i: int, tables: TransferTables | None = None) -> PiPartition:
    """Split a_i values into small classes and mixed-b classes and check the counts."""
    j = i - 1
    k, n = images.k, images.n
    half_row = 1 << ((k - 1) * n)  # twice the "small class" threshold
    by_a = defaultdict(list)
    for m in images.good:
        by_a[images.a[m][j]].append(m)
    A1 = frozenset(a for a in range(1 << n) if 2 * len(by_a.get(a, ())) <= half_row)
    A2 = frozenset(a for a in range(1 << n) if a not in A1
                   and len({images.b[m][j] for m in by_a[a]}) > 1)
    M1 = frozenset(m for m in images.good if images.a[m][j] in A1)
    M2 = frozenset(m for m in images.good if images.a[m][j] in A2)
    if tables is None:
        _, pi_mistakes = build_pi(images, i)
    else:
        pi_mistakes = tables.branch(i).pi_mistakes
    budget = images.error_budget
    per_value = budget / half_row  # eps * 2^n
    checks = {
        "Mpi subset M1|M2": pi_mistakes <= (M1 | M2),
        "|A1|<=2eps*2^n": len(A1) <= 2 * per_value,
        "|A2|<=2eps*2^n": len(A2) <= 2 * per_value,
        "|M1|<=eps*2^kn": len(M1) <= budget,
        "|M2|<=2eps*2^kn": len(M2) <= 2 * budget,
    }
    return PiPartition(A1, A2, M1, M2, checks)


# ---------------------------------------------------------------------------
# end-to-end


@dataclass(frozen=True)
class TransferRun:
    code: NetworkCode
    report: object
    images: CutImages
    tables: TransferTables
    tau: NetworkCode
    mu_report: object
    transfer: TransferReport


def run_transfer(g, nec_code: NetworkCode, **limits) -> TransferRun:
    """Normalize, verify, tabulate and transfer ``nec_code``; verify the result."""
    from .codeeval import normalize_relay
    from .verifier import cut_images, verify_mu, verify_nec

    k, n = g.k, nec_code.block_length
    if nec_code.message_widths != (k * n,):
        raise PreconditionError(
            f"transfer needs a rate-{k} code ({k * n} message bits), got {nec_code.message_widths}"
        )
    mu_limits = {key: v for key, v in limits.items() if key in ("max_messages", "workers")}
    code = normalize_relay(g.nec, nec_code, g.relay_pairs())
    report = verify_nec(g.nec, code, **limits)
    images = cut_images(g, code, report)
    tables = build_tables(images)
    tau = transfer_code(g, code, tables)
    mu = verify_mu(g.provenance, tau, **mu_limits)
    return TransferRun(code, report, images, tables, tau, mu,
                       transfer_report(images, tables, mu.epsilon))
