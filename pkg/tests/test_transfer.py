from __future__ import annotations

import dataclasses
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import disjoint_paths, leaky_cx_code, relay_code
from necred.codeeval import Const, LocalFunction, Relay, Xor, normalize_relay, perturb_code
from necred.counterexample import build_cx_code
from necred.errors import FingerprintMismatch, PreconditionError
from necred.reduction import backward_embed, build_gadget
from necred.transfer import (
    build_pi,
    build_psi,
    build_tables,
    deletion_summary,
    lemma2_witness,
    lemma4_witnesses,
    lemma_bounds,
    pair_deletion,
    pi_partition,
    run_transfer,
    transfer_code,
    transfer_report,
)
from necred.verifier import VerificationReport, cut_images, verify_mu, verify_nec


def _embedded(n=1):
    inst = disjoint_paths(2)
    g = build_gadget(inst)
    return g, backward_embed(g, relay_code(inst, n))


def _images(g, code):
    return cut_images(g, code, verify_nec(g.nec, code))


def _oracle_table(pairs, size):
    """argmax over candidates with ties to the smallest; empty keys map to 0."""
    out = []
    for key in range(size):
        c = Counter(cand for k0, cand in pairs if k0 == key)
        out.append(min(c, key=lambda v: (-c[v], v)) if c else 0)
    return tuple(out)


def test_round_trip_zero_error():
    g, code = _embedded()
    run = run_transfer(g, code)
    assert run.report.epsilon == 0
    assert run.code is code
    assert run.mu_report.epsilon == 0
    assert run.transfer.eps_tau == 0 and run.transfer.holds
    for i in (1, 2):
        bt = run.tables.branch(i)
        assert bt.psi == (0, 1) and bt.pi == (0, 1)
        assert bt.psi_mistakes == bt.pi_mistakes == frozenset()
        ev = run.transfer.branches[i - 1]
        assert ev.e1 == ev.e2 == ev.e3 == 0


def test_encoders_carried_over():
    g, code = _embedded()
    run = run_transfer(g, code)
    for eid in g.n_edges:
        assert run.tau.encoders[eid]((1,)) == code.encoders[eid]((1,))


def test_empty_class_maps_to_zero():
    g, code = _embedded()
    const = LocalFunction((1,), 1, form=Const(1))
    # every z'_1 is 1, so class 0 is empty
    code = code.replace(encoders={"zp.1": const})
    img = _images(g, code)
    psi, _ = build_psi(img, 1)
    assert psi[0] == 0


@pytest.mark.parametrize("seed", range(12))
def test_tables_match_counting_oracle(seed):
    cx = build_cx_code(2, 2, rate_k=True)
    rng = random.Random(seed)
    code = perturb_code(cx.code, rng.sample(["x.1", "y.1", "C-D", "zp.2", "D-t1"], 2), rng)
    img = _images(cx.gadget, code)
    for i in (1, 2):
        j = i - 1
        psi, psi_m = build_psi(img, i)
        pi, pi_m = build_pi(img, i)
        assert psi == _oracle_table([(img.zp[m][j], img.b[m][j]) for m in img.good], 4)
        assert pi == _oracle_table([(img.b[m][j], img.a[m][j]) for m in img.good], 4)
        assert psi_m == {m for m in img.good if psi[img.zp[m][j]] != img.b[m][j]}
        assert pi_m == {m for m in img.good if pi[img.b[m][j]] != img.a[m][j]}
    assert build_tables(img) == build_tables(img)


def test_transfer_guards():
    g, code = _embedded()
    img = _images(g, code)
    tables = build_tables(img)
    other = code.replace(encoders={"x.1": LocalFunction((1,), 1, table=(0, 1))})
    with pytest.raises(FingerprintMismatch):
        transfer_code(g, other, tables)
    comp = LocalFunction((1,), 1, form=Xor((Relay(0), Const(1))))
    odd = code.replace(encoders={"z.1": comp, "p1": comp})
    with pytest.raises(PreconditionError):
        transfer_code(g, odd, build_tables(_images(g, odd)))
    # normalizing first makes it acceptable
    norm = normalize_relay(g.nec, odd, g.relay_pairs())
    tau = transfer_code(g, norm, build_tables(_images(g, norm)))
    assert verify_mu(g.provenance, tau).epsilon == 0


def test_rate_below_k_rejected():
    cx = build_cx_code(2, 2)
    with pytest.raises(PreconditionError):
        run_transfer(cx.gadget, cx.code)


def test_e1_is_missing_good_fraction():
    cx = build_cx_code(2, 2, rate_k=True)
    run = run_transfer(cx.gadget, cx.code)
    assert run.transfer.branches[0].e1 == 1 - Fraction(len(run.report.good), 16)


# ---------------------------------------------------------------------------
# deletion and witnesses on hand-built images


def _fake_images(zp, b, a=None, k=2, n=2):
    """CutImages with branch-1 vectors from the given lists; branch 2 is constant."""
    cx = build_cx_code(2, 2, rate_k=True)
    good = tuple(range(len(zp)))
    rep = VerificationReport(good, (), 1 << (k * n), 1)
    a = a or list(range(len(zp)))
    pad = lambda vals: {m: (v, 0) for m, v in enumerate(vals)}
    return dataclasses.replace(
        _images(cx.gadget, cx.code), report=rep, zp=pad(zp), b=pad(b), a=pad(a),
        z=pad(a), x=pad(a), y=pad(a))


def test_pair_deletion_all_equal():
    img = _fake_images(zp=[0, 0, 0], b=[1, 1, 1])
    assert pair_deletion(img, 1, 0).count == 0


def test_pair_deletion_one_mixed_pair():
    img = _fake_images(zp=[0, 0, 0], b=[2, 2, 3])
    d = pair_deletion(img, 1, 0)
    assert d.count == 1 and d.pairs == ((0, 2),) and d.remaining == (1,)


def test_pair_deletion_missing_class():
    img = _fake_images(zp=[0], b=[0])
    with pytest.raises(PreconditionError):
        pair_deletion(img, 1, 3)


def test_pi_partition_threshold_boundary():
    # k=2, n=2: class size 2^{(k-1)n} = 4 is not small
    img = _fake_images(zp=[0] * 5, b=[0, 1, 2, 3, 0], a=[1, 1, 1, 1, 2])
    part = pi_partition(img, 1)
    assert 1 not in part.A1 and 2 in part.A1
    assert 1 in part.A2


def test_lemma2_preconditions():
    g, code = _embedded()
    img = _images(g, code)
    with pytest.raises(PreconditionError):
        lemma2_witness(img, 1, 0, 1)  # z'_1 differs


def test_lemma4_l1_is_empty():
    g, code = _embedded()
    img = _images(g, code)
    res = lemma4_witnesses(img, 1, 0)
    assert res.L == 1 and res.witnesses == ()


def test_zero_error_partition_is_empty():
    g, code = _embedded()
    img = _images(g, code)
    part = pi_partition(img, 1)
    assert part.A1 == part.A2 == frozenset() and part.holds


def _corrupted(seed):
    rng = random.Random(seed)
    cx = build_cx_code(2, 2, rate_k=True)
    scope = list(cx.gadget.nec.adversary_edges)
    return cx, perturb_code(cx.code, rng.sample(scope, rng.randint(1, 3)), rng)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_corrupted_codes_satisfy_all_bounds(seed):
    cx, code = _corrupted(seed)
    run = run_transfer(cx.gadget, code)
    img, tables = run.images, run.tables
    assert all(img.check_bounds().values())
    assert all(lemma_bounds(img, tables).values())
    assert run.transfer.holds
    for i in (1, 2):
        dels, wits = deletion_summary(img, i)
        assert sum(d.count for d in dels) <= img.B_err_count
        for w in wits:
            assert w.vector in img.B_err and w.message in (w.m1, w.m2)
        assert pi_partition(img, i, tables).holds
        for a in {img.a[m][i - 1] for m in img.good}:
            res = lemma4_witnesses(img, i, a)
            assert len({v for v, _, _ in res.witnesses}) == (res.L - 1) * res.class_size


def test_transfer_report_zero_code():
    g, code = _embedded()
    img = _images(g, code)
    rep = transfer_report(img, build_tables(img), Fraction(0))
    assert rep.union_bound == 0 and rep.holds


def test_lemma4_two_values_two_members():
    g, code = leaky_cx_code()
    img = _images(g, code)
    res = lemma4_witnesses(img, 1, 0)
    assert res.L == 2 and res.class_size == 2
    vecs = [v for v, _, _ in res.witnesses]
    assert len(set(vecs)) == 2 and all(v in img.B_err for v in vecs)
    assert {m0 for _, m0, _ in res.witnesses} == {m for m in img.good if img.a[m][0] == 0}
