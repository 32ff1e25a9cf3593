"""Command-line front end.

Exit codes: 0 success (zero error), 1 verification found errors, 2 usage or
parse error, 3 an enumeration limit was exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import serialize
from .codeeval import code_fingerprint
from .counterexample import build_cx_code, demonstrate_unachievability
from .errors import LimitExceeded, NecredError
from .netmodel import MultipleUnicastInstance, NECInstance
from .reduction import GadgetInstance, backward_embed, build_gadget
from .transfer import (
    deletion_summary,
    lemma4_witnesses,
    lemma_bounds,
    pi_partition,
    run_transfer,
)
from .verifier import (
    DEFAULT_MAX_MESSAGES,
    DEFAULT_MAX_PATTERNS,
    verify_mu,
    verify_nec,
)

log = logging.getLogger("necred")

EXIT_OK, EXIT_ERRORS, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _emit(args, payload) -> None:
    if args.out:
        serialize.write_json(args.out, payload)
    else:
        sys.stdout.write(serialize.dumps(payload) + "\n")


def _limits(args) -> dict:
    if args.max_patterns < 1 or args.max_messages < 1 or args.workers < 1:
        raise UsageError("limits and worker count must be positive")
    return {"max_patterns": args.max_patterns, "max_messages": args.max_messages,
            "workers": args.workers}


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _load_gadget(path) -> GadgetInstance:
    inst = serialize.load_instance(path)
    if not isinstance(inst, GadgetInstance):
        raise UsageError(f"{path} is not a gadget instance (no roles)")
    return inst


def cmd_verify(args) -> int:
    _need(args, "instance", "code")
    limits = _limits(args)
    inst = serialize.load_instance(args.instance)
    code = serialize.load_code(args.code, inst)
    if isinstance(inst, GadgetInstance):
        inst = inst.nec
    if isinstance(inst, NECInstance):
        report = verify_nec(inst, code, **limits)
    else:
        report = verify_mu(inst, code, max_messages=limits["max_messages"],
                           workers=limits["workers"])
    payload = report.to_json()
    payload["code_fingerprint"] = code_fingerprint(code)
    payload["config"] = _config(args)
    _emit(args, payload)
    return EXIT_OK if report.epsilon == 0 else EXIT_ERRORS


def cmd_reduce(args) -> int:
    _need(args, "instance")
    inst = serialize.load_instance(args.instance)
    if not isinstance(inst, MultipleUnicastInstance):
        raise UsageError("reduce needs a multiple_unicast instance")
    _emit(args, serialize.instance_to_json(build_gadget(inst)))
    return EXIT_OK


def cmd_embed(args) -> int:
    _need(args, "instance", "code")
    g = _load_gadget(args.instance)
    mu_code = serialize.load_code(args.code, g.provenance)
    code = backward_embed(g, mu_code)
    _emit(args, code.to_json())
    return EXIT_OK


def cmd_transfer(args) -> int:
    _need(args, "instance", "code")
    g = _load_gadget(args.instance)
    code = serialize.load_code(args.code, g)
    run = run_transfer(g, code, **_limits(args))
    report = run.transfer.to_json()
    report["nec_code_fingerprint"] = code_fingerprint(run.code)
    report["tau_fingerprint"] = code_fingerprint(run.tau)
    report["config"] = _config(args)
    payload = {"code": run.tau.to_json(), "report": report, "tables": run.tables.to_json()}
    _emit(args, payload)
    return EXIT_OK if run.transfer.holds else EXIT_ERRORS


def cmd_analyze(args) -> int:
    _need(args, "instance", "code")
    g = _load_gadget(args.instance)
    code = serialize.load_code(args.code, g)
    run = run_transfer(g, code, **_limits(args))
    img, tables = run.images, run.tables
    branches = []
    for i in range(1, g.k + 1):
        dels, wits = deletion_summary(img, i)
        a_values = sorted({img.a[m][i - 1] for m in img.good})
        l4 = [lemma4_witnesses(img, i, a) for a in a_values]
        part = pi_partition(img, i, tables)
        bt = tables.branch(i)
        branches.append({
            "index": i,
            "psi_mistakes": len(bt.psi_mistakes),
            "pi_mistakes": len(bt.pi_mistakes),
            "pairs_deleted": sum(d.count for d in dels),
            "lemma2_witnesses": len(wits),
            "lemma4_witnesses": sum(len(r.witnesses) for r in l4),
            "pi_partition": {"A1": sorted(part.A1), "A2": sorted(part.A2),
                             "M1": len(part.M1), "M2": len(part.M2), "checks": part.checks},
        })
    payload = {
        "epsilon": run.report.epsilon,
        "good_count": len(img.good),
        "A_err": img.A_err_count,
        "B_err": img.B_err_count,
        "cut_bounds": img.check_bounds(),
        "lemma_bounds": lemma_bounds(img, tables),
        "branches": branches,
        "transfer": run.transfer.to_json(),
        "code_fingerprint": code_fingerprint(run.code),
        "config": _config(args),
    }
    _emit(args, payload)
    ok = (all(img.check_bounds().values()) and all(lemma_bounds(img, tables).values())
          and all(all(b["pi_partition"]["checks"].values()) for b in branches)
          and run.transfer.holds)
    return EXIT_OK if ok else EXIT_ERRORS


def cmd_cx(args) -> int:
    _need(args, "k")
    ns = args.n or [2, 3, 4]
    report = demonstrate_unachievability(args.k, ns, n1_search=args.n1_search,
                                         max_patterns=args.max_patterns,
                                         max_messages=args.max_messages)
    if args.write_instance or args.write_code:
        cx = build_cx_code(args.k, ns[0], rate_k=args.rate_k)
        if args.write_instance:
            serialize.write_json(args.write_instance, serialize.instance_to_json(cx.gadget))
        if args.write_code:
            serialize.write_json(args.write_code, cx.code.to_json())
    report["config"] = _config(args)
    _emit(args, report)
    verified = [p["epsilon"] for p in report["rate_points"] if p["epsilon"] is not None]
    return EXIT_OK if all(e == 0 for e in verified) else EXIT_ERRORS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="necred", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--instance")
        p.add_argument("--code")
        p.add_argument("--out")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--max-patterns", type=int, default=DEFAULT_MAX_PATTERNS)
        p.add_argument("--max-messages", type=int, default=DEFAULT_MAX_MESSAGES)
        p.add_argument("--seed", type=int, default=0)
        return p

    common(sub.add_parser("verify", help="exhaustively verify a code")).set_defaults(func=cmd_verify)
    common(sub.add_parser("reduce", help="build the NEC gadget")).set_defaults(func=cmd_reduce)
    common(sub.add_parser("embed", help="unit-rate code -> gadget code")).set_defaults(func=cmd_embed)
    common(sub.add_parser("transfer", help="gadget code -> unit-rate code")).set_defaults(
        func=cmd_transfer)
    common(sub.add_parser("analyze", help="lemma-level analysis of a gadget code")).set_defaults(
        func=cmd_analyze)
    cx = common(sub.add_parser("cx", help="counterexample family demonstration"))
    cx.add_argument("--k", type=int)
    cx.add_argument("--n", type=int, nargs="+")
    cx.add_argument("--n1-search", action="store_true")
    cx.add_argument("--write-instance")
    cx.add_argument("--write-code")
    cx.add_argument("--rate-k", action="store_true",
                    help="write the rate-k lift (usable by transfer and analyze)")
    cx.set_defaults(func=cmd_cx)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except LimitExceeded as exc:
        log.error("%s", exc)
        return EXIT_LIMIT
    except (UsageError, NecredError, json.JSONDecodeError, OSError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
