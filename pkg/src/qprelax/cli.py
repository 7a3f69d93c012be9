"""Command-line front end.

Exit codes: 0 all verdicts pass, 2 a mathematical verdict fails,
3 solver or numerical failure, 4 invalid input.
"""

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import certify
from .builders import ProblemKind, build
from .conic import SolveOptions, Status, dump_program, solve
from .errors import InstanceFormatError, QpRelaxError
from .extreal import ExtReal, close
from .instances import (ExampleFamily, closed_form_values, example_family,
                        load_instance, validate_assumption1)
from .matrixops import build_face_data

EXIT_OK, EXIT_VERDICT, EXIT_SOLVER, EXIT_INPUT = 0, 2, 3, 4

ALL_PROBLEMS = ("r", "rd", "rplus", "sr", "srr", "srrd", "srplus")
SWEEP_DEFAULT = ("r", "rplus", "sr", "srplus")


class InputError(Exception):
    pass


@dataclass
class Solved:
    kind: ProblemKind
    status: Status
    value: ExtReal
    seconds: float
    message: str = ""

    @property
    def status_text(self):
        return self.status.name.lower()


def _solve_kind(kind, inst, face, opts, dump_dir=None, tag=""):
    prog, _ = build(kind, inst, face)
    if dump_dir:
        os.makedirs(dump_dir, exist_ok=True)
        dump_program(prog, os.path.join(dump_dir, f"{tag}{kind.value}.txt"))
    res = solve(prog, opts)
    return Solved(kind, res.status, res.value, res.solve_time, res.message)


def _face_for(inst):
    rep = validate_assumption1(inst)
    if not rep.satisfied:
        raise InputError("Slater condition (strictly feasible point, H of full "
                         "column rank p < n) fails: " + "; ".join(rep.messages))
    return build_face_data(inst, rep.slater_point)


def _parse_problems(text, default):
    if not text:
        return [ProblemKind(p) for p in default]
    out = []
    for item in text.split(","):
        item = item.strip().lower()
        if item not in ALL_PROBLEMS:
            raise InputError(f"unknown problem {item!r}; choose from "
                             + ",".join(ALL_PROBLEMS))
        out.append(ProblemKind(item))
    return out


def _load(path):
    try:
        return load_instance(path)
    except (OSError, InstanceFormatError, ValueError) as exc:
        raise InputError(f"cannot load {path}: {exc}") from exc


def _opts(args):
    return SolveOptions(feas_tol=args.feas_tol)


# ---------------------------------------------------------------- validate
def cmd_validate(args, out):
    inst = _load(args.instance)
    rep = validate_assumption1(inst)
    print(f"instance {inst.name or args.instance}: n={inst.n} m={inst.m} "
          f"p={inst.p}", file=out)
    print(f"feasible: {rep.feasible}  rank(H): {rep.rank_H}  "
          f"slack margin: {rep.margin:.6g}", file=out)
    if rep.slater_point is not None:
        print("slater point: " + " ".join(f"{v:.6g}" for v in
                                          rep.slater_point), file=out)
    if rep.satisfied:
        print("Slater condition: satisfied", file=out)
        return EXIT_OK
    for msg in rep.messages:
        print(f"Slater condition violated: {msg}", file=out)
    return EXIT_INPUT


# ----------------------------------------------------------------- compare
def _verdicts(solved, tol):
    """List of (label, verdict); verdict is 'pass', 'fail', 'n/a ...' or
    'note'."""
    out = []

    def value_match(a, b):
        return (solved[a].status is solved[b].status
                and solved[a].status is Status.OPTIMAL
                and close(solved[a].value, solved[b].value, tol))

    K = ProblemKind
    if K.R in solved and K.Rplus in solved:
        if solved[K.R].status is Status.OPTIMAL:
            out.append(("R≡R+",
                        "pass" if value_match(K.R, K.Rplus) else "fail"))
        else:
            out.append(("R≡R+", f"n/a (R {solved[K.R].status_text})"))
    if K.SR in solved and K.SRplus in solved:
        if solved[K.SR].status is Status.OPTIMAL:
            out.append(("SR≡SR+",
                        "pass" if value_match(K.SR, K.SRplus) else "fail"))
        else:
            out.append(("SR≡SR+",
                        f"n/a (SR {solved[K.SR].status_text})"))
    if K.SR in solved and K.SRR in solved:
        a, b = solved[K.SR], solved[K.SRR]
        same = a.status is b.status and (
            a.status is not Status.OPTIMAL or close(a.value, b.value, tol))
        ok = same and a.status is not Status.NUMERICAL_FAILURE
        out.append(("SR≡SRR", "pass" if ok else "fail"))
    for primal, dual, label in ((K.R, K.RD, "R≡RD (LP duality)"),
                                (K.SRR, K.SRRD, "SRR≡SRRD (strong duality)")):
        if primal in solved and dual in solved:
            a, b = solved[primal], solved[dual]
            if a.status is Status.OPTIMAL:
                ok = b.status is Status.OPTIMAL and close(a.value, b.value,
                                                          tol)
            else:
                ok = (a.status is Status.UNBOUNDED
                      and b.status is Status.INFEASIBLE)
            out.append((label, "pass" if ok else "fail"))
    for primal, plus, name in ((K.R, K.Rplus, "R"), (K.SR, K.SRplus, "SR")):
        if (primal in solved and plus in solved
                and solved[primal].status in (Status.OPTIMAL, Status.UNBOUNDED)
                and solved[plus].status is Status.INFEASIBLE):
            out.append((f"QP+ not equivalent to QP ({name}+ infeasible, "
                        f"{name} feasible)", "note"))
    return out


def cmd_compare(args, out):
    inst = _load(args.instance)
    kinds = _parse_problems(args.problems, ALL_PROBLEMS)
    face = _face_for(inst) if any(k.needs_face for k in kinds) else None
    opts = _opts(args)
    solved = {}
    for kind in kinds:
        solved[kind] = _solve_kind(kind, inst, face, opts, args.dump_program)
    print(f"{'problem':<8} {'status':<18} {'value':>22} {'time[s]':>8}",
          file=out)
    for kind, res in solved.items():
        value = "-" if res.value is None else str(res.value)
        print(f"{kind.value:<8} {res.status_text:<18} {value:>22} "
              f"{res.seconds:8.3f}", file=out)
    verdicts = _verdicts(solved, args.tol)
    for label, verdict in verdicts:
        print(f"{label}: {verdict}", file=out)
    if any(r.status is Status.NUMERICAL_FAILURE for r in solved.values()):
        return EXIT_SOLVER
    if any(v == "fail" for _, v in verdicts):
        return EXIT_VERDICT
    return EXIT_OK


# ------------------------------------------------------------------- sweep
_REFERENCE = {"r": "nu_R", "rd": "nu_R", "rplus": "nu_Rplus", "sr": "nu_SR",
              "srr": "nu_SR", "srrd": "nu_SR", "srplus": "nu_SRplus"}


@dataclass
class SweepRecord:
    alpha: float
    reference: object
    results: dict = field(default_factory=dict)   # kind value -> Solved
    passed: dict = field(default_factory=dict)    # kind value -> bool


@dataclass
class SweepResult:
    family: ExampleFamily
    alphas: list
    problems: list
    records: list

    @property
    def all_passed(self):
        return all(all(r.passed.values()) for r in self.records)

    @property
    def any_solver_failure(self):
        return any(s.status is Status.NUMERICAL_FAILURE
                   for r in self.records for s in r.results.values())


def alpha_grid(start, stop, step):
    if step <= 0:
        raise InputError("--step must be positive")
    if stop < start:
        raise InputError("--to must not be below --from")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [float(np.round(start + i * step, 12)) for i in range(count)]


def _sweep_point(family, alpha, kinds, tol, opts):
    inst = example_family(family, alpha)
    ref = closed_form_values(family, alpha)
    face = None
    if any(k.needs_face for k in kinds):
        face = _face_for(inst)
    rec = SweepRecord(alpha, ref)
    for kind in kinds:
        res = _solve_kind(kind, inst, face, opts)
        rec.results[kind.value] = res
        target = getattr(ref, _REFERENCE[kind.value])
        rec.passed[kind.value] = (res.value is not None
                                  and close(res.value, target, tol))
    return rec


def run_sweep(family, alphas, kinds, tol=1e-5, workers=1, opts=None):
    opts = opts or SolveOptions()
    family = ExampleFamily(family)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        records = list(pool.map(
            lambda a: _sweep_point(family, a, kinds, tol, opts), alphas))
    return SweepResult(family, list(alphas), [k.value for k in kinds], records)


def _ext_text(v):
    return "" if v is None else str(v)


def _ext_status(v):
    if v is None:
        return "failure"
    return {"-inf": "neg_inf", "+inf": "pos_inf"}.get(v.kind, "finite")


def write_sweep_tsv(result, fh):
    header = ["alpha", "nu_star", "nu_star_status"]
    for p in result.problems:
        header += [f"{p}_status", f"{p}_value", f"{p}_reference", f"{p}_pass"]
    writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
    writer.writerow(header)
    for rec in result.records:
        row = [repr(rec.alpha), _ext_text(rec.reference.nu_star),
               _ext_status(rec.reference.nu_star)]
        for p in result.problems:
            res = rec.results[p]
            target = getattr(rec.reference, _REFERENCE[p])
            row += [res.status_text, _ext_text(res.value), _ext_text(target),
                    "pass" if rec.passed[p] else "FAIL"]
        writer.writerow(row)


def cmd_sweep(args, out):
    try:
        family = ExampleFamily(args.family.upper())
    except ValueError as exc:
        raise InputError(f"unknown family {args.family!r}") from exc
    kinds = _parse_problems(args.problems, SWEEP_DEFAULT)
    alphas = alpha_grid(args.start, args.stop, args.step)
    result = run_sweep(family, alphas, kinds, args.tol, args.workers,
                       _opts(args))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_sweep_tsv(result, fh)
    write_sweep_tsv(result, out)
    if family is ExampleFamily.EX2 and "rplus" in result.problems:
        print("# rplus references for EX2 are published computational "
              "results, not proven values", file=out)
    if result.any_solver_failure:
        return EXIT_SOLVER
    return EXIT_OK if result.all_passed else EXIT_VERDICT


# ----------------------------------------------------------------- certify
def cmd_certify(args, out):
    inst = _load(args.instance)
    rep = validate_assumption1(inst)
    if not rep.satisfied:
        print("[FAIL] validate: Slater condition (strictly feasible point, H of "
              "full column rank p < n) fails: " + "; ".join(rep.messages),
              file=out)
        return EXIT_INPUT
    print("[pass] validate: Slater condition holds", file=out)
    opts = _opts(args)
    face = build_face_data(inst, rep.slater_point)
    if args.dump_program:
        for kind in (ProblemKind.R, ProblemKind.SRR, ProblemKind.SRRD):
            prog, _ = build(kind, inst, face)
            os.makedirs(args.dump_program, exist_ok=True)
            dump_program(prog, os.path.join(args.dump_program,
                                            f"{kind.value}.txt"))
    reports = [certify.certify_rlt(inst, args.tol, opts),
               certify.certify_sdp(inst, face, args.tol, opts,
                                   dual_source=args.dual_source)]
    for r in reports:
        print(r.to_text(), file=out)
    if any(r.solver_failure for r in reports):
        return EXIT_SOLVER
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERDICT


# -------------------------------------------------------------------- main
def make_parser():
    parser = argparse.ArgumentParser(
        prog="qprelax",
        description="RLT and SDP-RLT relaxations of nonconvex QPs with "
                    "KKT-augmented variants and certificate checking.")
    parser.add_argument("--dump-program", metavar="DIR",
                        help="write every built program to DIR as text")
    parser.add_argument("--feas-tol", type=float, default=certify.FEAS_TOL,
                        help="solver acceptance bound on primal residuals")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check data and the Slater condition")
    p.add_argument("instance")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="solve problems and compare values")
    p.add_argument("instance")
    p.add_argument("--problems", help="comma list of " + ",".join(ALL_PROBLEMS))
    p.add_argument("--tol", type=float, default=certify.VALUE_TOL)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="alpha sweep over an example family")
    p.add_argument("family", help="EX1, EX2, EX3 or EX4")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--problems", help="comma list (default r,rplus,sr,srplus)")
    p.add_argument("--tol", type=float, default=certify.VALUE_TOL)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="also write the TSV table to this file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("certify", help="end-to-end certificate pipelines")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=certify.CERT_TOL)
    p.add_argument("--dual-source", choices=("srr", "srrd"), default="srr",
                   help="take the SDP certificate from the SRR multipliers "
                        "or from a separate SRRD solve")
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QpRelaxError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
