"""Command-line front end.

Inputs are JSON documents given with ``--input PATH`` (``-`` for stdin) or
inline with ``--json TEXT``. Results are JSON (or CSV for ``verify``) on
stdout or in ``--out PATH``. Exit codes: 0 success, 1 a verification check
failed, 2 invalid input, 3 solver non-convergence, 4 support violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import rules
from .diverge import DivergenceKind, divergence
from .errors import Infeasible, MaxIterExceeded, QEPError, SupportViolation, ZeroProbability
from .jsonio import (
    CONSTRAINT_TYPES,
    SchemaError,
    decode_constraint,
    decode_matrix,
    decode_resolution,
    decode_state,
    decode_vector,
    encode_real,
    encode_state,
    encode_vector,
)
from .project import SolverConfig, entropic_project, mre_posterior, total_variation, verify
from .states import Projector

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_SUPPORT = 4

RULES = ("weak-lueders", "strong-lueders", "semi-strong", "von-neumann", "quantum-jeffrey")


class UsageError(Exception):
    """Bad command-line usage that argparse cannot detect on its own."""


def _default_seed() -> int:
    raw = os.environ.get("QEP_SEED")
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QEP_SEED must be an integer, got {raw!r}") from None


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load(args) -> dict:
    if args.json is not None:
        text = args.json
    elif args.input == "-":
        text = sys.stdin.read()
    elif args.input is not None:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    else:
        raise UsageError("an input document is required (--input PATH or --json TEXT)")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("the input document must be a JSON object")
    return doc


def _field(doc: dict, *names):
    for name in names:
        if name in doc:
            return doc[name]
    raise SchemaError(f"missing field {' / '.join(repr(n) for n in names)}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _config(args) -> SolverConfig:
    kwargs = {"seed": args.seed}
    if args.tol is not None:
        kwargs["grad_tol"] = args.tol
    if args.max_iter is not None:
        kwargs["max_iter"] = args.max_iter
    return SolverConfig(**kwargs)


# --- subcommands -------------------------------------------------------------

def _cmd_update(args):
    doc = _load(args)
    rule = args.rule
    if rule == "von-neumann":
        xi = decode_vector(_field(doc, "vector", "xi"))
        P = Projector(decode_matrix(_field(doc, "projector")))
        return {"rule": rule, "vector": encode_vector(rules.strong_von_neumann(xi, P))}, EXIT_OK
    rho = decode_state(_field(doc, "state", "rho"))
    if rule == "strong-lueders":
        out = rules.strong_lueders(rho, Projector(decode_matrix(_field(doc, "projector"))))
    else:
        R = decode_resolution(_field(doc, "resolution"))
        if rule == "weak-lueders":
            out = rules.weak_lueders(rho, R)
        elif rule == "semi-strong":
            indices = [int(j) - 1 for j in _field(doc, "indices")]
            out = rules.semi_strong_lueders(rho, R, indices)
        else:
            w = args.weights if args.weights is not None else _field(doc, "weights")
            out = rules.quantum_jeffrey(rho, R, w)
    return {"rule": rule, "state": encode_state(out)}, EXIT_OK


def _cmd_distance(args):
    doc = _load(args)
    a = decode_state(_field(doc, "a", "omega", "first"))
    b = decode_state(_field(doc, "b", "phi", "second"))
    kind = DivergenceKind.parse(args.kind)
    value = divergence(kind, a, b)
    if args.finite and math.isinf(value):
        raise SupportViolation(f"{kind.value} is +inf for these arguments")
    return {"kind": kind.value, "value": encode_real(value)}, EXIT_OK


def _cmd_project(args):
    doc = _load(args)
    psi = decode_state(_field(doc, "state", "psi"))
    K = decode_constraint(doc.get("constraint", {}), args.constraint, args.weights)
    kind = DivergenceKind.parse(args.kind)
    result = entropic_project(kind, psi, K, _config(args), regularize=args.regularized)
    out = {"kind": kind.value, "constraint": args.constraint or doc["constraint"].get("type"),
           **result.to_dict()}
    return out, EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_verify(args):
    report = verify(args.theorem, args.dims, args.trials, args.seed, _config(args), args.jobs)
    text = report.to_csv() if args.report == "csv" else report.to_json()
    if report.passed:
        code = EXIT_OK
    elif any(not r.converged for r in report.records):
        code = EXIT_NOT_CONVERGED
    else:
        code = EXIT_CHECK_FAILED
    return text, code


def _cmd_classical(args):
    doc = _load(args)
    table = rules.JointTable(np.asarray(_field(doc, "table"), dtype=float))
    if args.evidence == "sharp":
        evidence = rules.Sharp(int(_field(doc, "index", "observation")) - 1)
        if not 0 <= evidence.index < table.nx:
            raise SchemaError(f"observation index must lie in 1..{table.nx}")
    else:
        f = args.weights if args.weights is not None else _field(doc, "f", "weights")
        evidence = rules.Soft(tuple(f))
        if len(evidence.f) != table.nx:
            raise SchemaError(f"{len(evidence.f)} evidence weights for {table.nx} observations")
    posterior = rules.classical_update(table, evidence)
    out = {"evidence": args.evidence, "posterior": [float(x) for x in posterior]}
    if args.mre:
        mre = mre_posterior(table, evidence, _config(args))
        out["mre_posterior"] = [float(x) for x in mre]
        out["total_variation"] = total_variation(posterior, mre)
    return out, EXIT_OK


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qep", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--input", metavar="PATH", help="JSON input file, '-' for stdin")
        src.add_argument("--json", metavar="TEXT", help="inline JSON input")

    def add_common(p):
        p.add_argument("--out", metavar="PATH", help="write the result here instead of stdout")
        p.add_argument("--seed", type=int, default=None, help="master seed (default: $QEP_SEED or 0)")

    def add_solver(p):
        p.add_argument("--tol", type=float, default=None, help="stationarity tolerance")
        p.add_argument("--max-iter", type=int, default=None, help="iteration budget per run")

    p = sub.add_parser("update", help="apply a closed-form update rule")
    add_input(p)
    add_common(p)
    p.add_argument("--rule", required=True, choices=RULES)
    p.add_argument("--weights", type=_float_list, help="quantum Jeffrey weights")
    p.set_defaults(handler=_cmd_update)

    p = sub.add_parser("distance", help="evaluate a divergence")
    add_input(p)
    add_common(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in DivergenceKind])
    p.add_argument("--finite", action="store_true", help="treat an infinite value as an error")
    p.set_defaults(handler=_cmd_distance)

    p = sub.add_parser("project", help="numerical entropic projection")
    add_input(p)
    add_common(p)
    add_solver(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in DivergenceKind])
    p.add_argument("--constraint", choices=CONSTRAINT_TYPES,
                   help="constraint type (overrides the document)")
    p.add_argument("--weights", type=_float_list, help="block weights for 'qqj'")
    p.add_argument("--regularized", action="store_true",
                   help="compress psi to the face first (d0 on qsl/support only)")
    p.set_defaults(handler=_cmd_project)

    p = sub.add_parser("verify", help="run the theorem verification harness")
    add_common(p)
    add_solver(p)
    p.add_argument("--theorem", required=True, help="T1 .. T11")
    p.add_argument("--dims", type=_int_list, default=[2, 3], help="comma-separated dimensions")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("classical", help="Bayes or Jeffrey update of a joint table")
    add_input(p)
    add_common(p)
    add_solver(p)
    p.add_argument("--evidence", required=True, choices=("sharp", "soft"))
    p.add_argument("--weights", type=_float_list, help="soft evidence marginal")
    p.add_argument("--mre", action="store_true", help="also compute the MRE posterior")
    p.set_defaults(handler=_cmd_classical)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.command == "verify" and (args.trials < 1 or args.jobs < 1):
            raise UsageError("--trials and --jobs must be positive")
        payload, code = args.handler(args)
    except UsageError as exc:
        print(f"qep: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (SupportViolation, ZeroProbability, Infeasible) as exc:
        print(f"qep: support violation: {exc}", file=sys.stderr)
        return EXIT_SUPPORT
    except MaxIterExceeded as exc:
        print(f"qep: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (QEPError, ValueError, TypeError, KeyError, IndexError, OSError) as exc:
        print(f"qep: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID

    text = payload if isinstance(payload, str) else _dump(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_NOT_CONVERGED:
        print("qep: solver did not converge", file=sys.stderr)
    elif code == EXIT_CHECK_FAILED:
        print("qep: verification checks failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
