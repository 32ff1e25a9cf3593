"""Corrupt a gadget code at random and watch the counting bounds hold.

Each trial rewrites a few truth-table entries on edges the adversary can
reach, re-verifies the code exhaustively and prints the measured error next
to the transferred code's error and the 6k*eps ceiling.
"""

from __future__ import annotations

import random

from necred import backward_embed, build_gadget, run_transfer
from necred.codeeval import LocalFunction, NetworkCode, perturb_code
from necred.netmodel import MultipleUnicastInstance, Network
from necred.transfer import deletion_summary, lemma_bounds, pi_partition

net = Network.from_edges([("p1", "s1", "t1"), ("p2", "s2", "t2")])
inst = MultipleUnicastInstance(net, (("s1", "t1"), ("s2", "t2")))
relay = LocalFunction.relay((2,), 0)
mu = NetworkCode(2, {"p1": relay, "p2": relay}, {"t1": relay, "t2": relay}, (2, 2))
g = build_gadget(inst)
base = backward_embed(g, mu)
scope = list(g.nec.adversary_edges)

print(f"{'seed':>4} {'edges':<22} {'eps':>6} {'eps_tau':>8} {'6k*eps':>7}  deleted  ok")
for seed in range(12):
    rng = random.Random(seed)
    edges = rng.sample(scope, rng.randint(1, 3))
    run = run_transfer(g, perturb_code(base, edges, rng))
    img = run.images
    deleted = sum(d.count for i in (1, 2) for d in deletion_summary(img, i)[0])
    ok = (run.transfer.holds and all(lemma_bounds(img, run.tables).values())
          and all(pi_partition(img, i, run.tables).holds for i in (1, 2)))
    print(f"{seed:>4} {','.join(edges):<22} {str(img.epsilon):>6} "
          f"{str(run.transfer.eps_tau):>8} {str(run.transfer.bound):>7}  {deleted:>7}  {ok}")
