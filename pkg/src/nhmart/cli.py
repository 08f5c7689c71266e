"""Command line entry point."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import NhmartError
from .gspace import bmoq_norm, embedding_test
from .lattice import LatticeSpec, build_lattice, validate
from .mfunc import decompose, hpq_norm, lp_norm, reconstruct
from .mixing import classify, nondegeneracy_cert
from .opnorm import norm_p
from .paraprod import KINDS, assemble, paraproduct_family_op, testing_constant
from .stopping import stopping_generations, verify_lemma
from . import io


def _floats(text: str) -> list[float]:
    return [float(eval_fraction(x)) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def eval_fraction(x: str) -> float:
    """Accepts plain numbers and a/b fractions such as 1/16."""
    x = x.strip()
    if "/" in x:
        num, den = x.split("/", 1)
        return float(num) / float(den)
    return float(x)


def _emit_rows(rows, fmt: str, out) -> None:
    out.write(ex.rows_to_csv(rows) if fmt == "csv" else ex.rows_to_json(rows) + "\n")


def cmd_validate(args, out) -> int:
    data = json.loads(Path(args.file).read_text())
    violations = validate(LatticeSpec.from_dict(data))
    for v in violations:
        out.write(f"{v}\n")
    if not violations:
        lat = build_lattice(data)
        out.write(f"ok: {lat.n} nodes, {lat.n_leaves} leaves, depth {lat.max_depth}\n")
    return 1 if violations else 0


def cmd_decompose(args, out) -> int:
    f = io.read_function(args.file)
    d = decompose(f)
    rec = io.decomposition_to_dict(d)
    rec["reconstruction_residual"] = float(np.max(np.abs(reconstruct(d).values - f.values)))
    out.write(json.dumps(rec, indent=2) + "\n")
    return 0


def cmd_norm(args, out) -> int:
    f = io.read_function(args.file)
    d = decompose(f)
    rec = {"p": args.p, "q": args.q, "extended": args.extended,
           "lp": lp_norm(f, args.p), "hpq": hpq_norm(d, args.p, args.q, extended=args.extended)}
    out.write(json.dumps(rec) + "\n")
    return 0


def cmd_embed_test(args, out) -> int:
    alpha = io.read_sequence(args.file)
    rep = embedding_test(alpha, args.p, args.q, trials=args.trials, seed=args.seed)
    out.write(json.dumps({"K": rep.K, "lower_bound": rep.lower_bound, "estimate": rep.estimate,
                          "ratio": rep.ratio, "p": rep.p, "q": rep.q, "seed": rep.seed}) + "\n")
    return 0


def cmd_para_norm(args, out) -> int:
    b = io.read_function(args.file)
    if args.kind == "pi_family":
        op = paraproduct_family_op(b)
        rep = norm_p(op, args.p, restarts=args.restarts, seed=args.seed, q=args.q)
        K = testing_constant(b, args.p, args.q)
        rec = {"kind": args.kind, "p": args.p, "q": args.q, "testing_constant": K,
               "lower_bound": rep.lower_bound, "estimate": rep.estimate,
               "ratio": rep.estimate / K if K > 0 else None}
    else:
        op = assemble(args.kind, b)
        rep = norm_p(op, args.p, restarts=args.restarts, seed=args.seed)
        rec = {"kind": args.kind, "p": args.p, "lower_bound": rep.lower_bound, "estimate": rep.estimate}
        if args.dump:
            io.write_matrix_csv(args.dump, op)
    out.write(json.dumps(rec) + "\n")
    return 0


def cmd_opnorm(args, out) -> int:
    from .lattice import load_lattice
    op = io.read_matrix_csv(args.file, load_lattice(args.lattice))
    rep = norm_p(op, args.p, restarts=args.restarts, seed=args.seed)
    out.write(json.dumps({"p": args.p, "lower_bound": rep.lower_bound, "estimate": rep.estimate,
                          "restarts_used": rep.restarts_used, "seed": rep.seed}) + "\n")
    return 0


def cmd_stopping(args, out) -> int:
    f = io.read_function(args.file)
    forest = stopping_generations(f, args.k0)
    rec = forest.to_dict(f.lattice)
    rec["violations"] = [v.__dict__ for v in verify_lemma(f, forest)]
    out.write(json.dumps(rec, indent=2) + "\n")
    return 0


def cmd_mixing_cert(args, out) -> int:
    T = io.read_transform(args.file)
    lat = T.lattice
    verdicts = {}
    if args.eps is not None:
        verdicts = {v.node: v for v in classify(T, args.p, args.eps, args.K if args.K else np.inf).verdicts}
    writer = csv.writer(out, lineterminator="\n")
    header = ["node", "parent", "small", "epsilon_nocap", "epsilon_cap", "feasible"]
    if args.eps is not None:
        header += ["epsilon_adjoint", "forward", "adjoint"]
    writer.writerow(header)
    for node in range(lat.n):
        par = lat.parent[node]
        if par < 0 or int(par) not in T.blocks:
            continue
        c = nondegeneracy_cert(T, node, args.p, args.K)
        row = [int(lat.ids[node]), int(lat.ids[par]), c.small, repr(c.epsilon_nocap),
               repr(c.epsilon_cap), c.feasible]
        if args.eps is not None:
            v = verdicts[node]
            row += [repr(v.eps_adjoint), v.forward, v.adjoint]
        writer.writerow(row)
    return 0


def cmd_counterexample(args, out) -> int:
    if args.which == "avg":
        print(f"convention: {ex.AVG_CONVENTION}", file=sys.stderr)
        rows = ex.run_avg_experiment(args.p, _ints(args.n))
    elif args.which == "basis":
        rows = []
        for n in _ints(args.n):
            rows += ex.run_basis_experiment(n, _ints(args.levels), args.p)
    elif args.which == "mixing":
        rows = ex.run_commutator_experiment(_floats(args.delta), args.p, K=args.K, with_norm=False)
    else:
        rows = ex.run_bmo_experiment(_ints(args.N), q=args.q, r=args.q)
    _emit_rows(rows, args.out, out)
    return 0


def cmd_commutator_exp(args, out) -> int:
    rows = ex.run_commutator_experiment(_floats(args.deltas), args.p, K=args.K,
                                        restarts=args.restarts, seed=args.seed)
    _emit_rows(rows, args.out, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nhmart", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a lattice file")
    s.add_argument("file")
    s.set_defaults(run=cmd_validate)

    s = sub.add_parser("decompose", help="martingale differences of a function file")
    s.add_argument("file")
    s.set_defaults(run=cmd_decompose)

    s = sub.add_parser("norm", help="L^p and square-function norms of a function file")
    s.add_argument("file")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--q", type=float, default=2.0)
    s.add_argument("--extended", action="store_true")
    s.set_defaults(run=cmd_norm)

    s = sub.add_parser("embed-test", help="Carleson constant vs embedding norm of a sequence file")
    s.add_argument("file")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--q", type=float, default=2.0)
    s.add_argument("--trials", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(run=cmd_embed_test)

    s = sub.add_parser("para-norm", help="norm of an operator built from b")
    s.add_argument("file")
    s.add_argument("--kind", choices=KINDS + ("pi_family",), default="pi")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--q", type=float, default=2.0)
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dump", help="write the dense matrix as CSV")
    s.set_defaults(run=cmd_para_norm)

    s = sub.add_parser("opnorm", help="L^p norm of a dumped operator")
    s.add_argument("file")
    s.add_argument("--lattice", required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(run=cmd_opnorm)

    s = sub.add_parser("stopping", help="stopping generations of a nonnegative function file")
    s.add_argument("file")
    s.add_argument("--k0", type=int, default=0)
    s.set_defaults(run=cmd_stopping)

    s = sub.add_parser("mixing-cert", help="per-interval non-degeneracy of a transform file")
    s.add_argument("file")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--K", type=float)
    s.add_argument("--eps", type=float)
    s.set_defaults(run=cmd_mixing_cert)

    s = sub.add_parser("counterexample", help="measure one of the explicit constructions")
    s.add_argument("which", choices=("avg", "basis", "mixing", "bmo-div"))
    s.add_argument("--n", default="8,16,32,64", help="comma-separated n values")
    s.add_argument("--levels", default="1,2,3,4", help="comma-separated depths (basis)")
    s.add_argument("--delta", default="1/4,1/16,1/64", help="comma-separated deltas (mixing)")
    s.add_argument("--N", default="5,10,20", help="comma-separated N values (bmo-div)")
    s.add_argument("--p", type=float, default=4.0)
    s.add_argument("--q", type=float, default=2.0)
    s.add_argument("--K", type=float, default=10.0)
    s.add_argument("--out", choices=("csv", "json"), default="csv")
    s.set_defaults(run=cmd_counterexample)

    s = sub.add_parser("commutator-exp", help="commutator norm against sup of differences")
    s.add_argument("--deltas", default="1/4,1/16,1/64")
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--K", type=float, default=10.0)
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", choices=("csv", "json"), default="csv")
    s.set_defaults(run=cmd_commutator_exp)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args, sys.stdout)
    except (NhmartError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
