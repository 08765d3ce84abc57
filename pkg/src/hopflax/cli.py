"""Command-line front end.

Exit status: 0 when every check passes, 1 when an invariant fails (the first
failure is named on stderr), 2 on input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import io
from .constants import kappa_p
from .convexity import c_gradients, is_c_convex, subdifferential
from .errors import HopflaxError
from .hopf_lax import TIE_TOL, inf_convolution, sup_convolution, time_derivatives
from .inequalities import ScheduleParams, constant_chain_audit, hypercontractivity_profile, random_field
from .parallel import restart_rngs
from .transport import ot_cost
from .verify import SCALES, render_table, verify_paper

DEFAULT_TOLERANCES = {"tie_tol": TIE_TOL, "convexity_tol": 1e-10}


class InputError(Exception):
    pass


def _tolerances(pairs: List[str]) -> Dict[str, float]:
    tol = dict(DEFAULT_TOLERANCES)
    for pair in pairs or []:
        name, sep, value = pair.partition("=")
        if not sep or name not in tol:
            raise InputError(f"--tol expects NAME=VALUE with NAME in {sorted(tol)}, got {pair!r}")
        try:
            tol[name] = float(value)
        except ValueError:
            raise InputError(f"--tol {name}: {value!r} is not a number") from None
    return tol


def _header_lines(args, tol) -> List[str]:
    lines = [f"hopflax {args.command} seed={args.seed}"]
    lines += [f"tol {k}={io.fmt(v)}" for k, v in sorted(tol.items())
              if k in args.tol_names]
    return lines


def _table(header, rows) -> str:
    cells = [list(header)] + [[v if isinstance(v, str) else str(v) if isinstance(v, (int, np.integer))
                               else io.fmt(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def _emit_rows(args, tol, header, rows, doc_extra=None) -> str:
    comments = _header_lines(args, tol)
    if args.format == "csv":
        return io.write_csv(header, rows, comments)
    if args.format == "table":
        return "\n".join(f"# {c}" for c in comments) + "\n" + _table(header, rows)
    doc = {"command": args.command, "seed": args.seed,
           "tolerances": {k: tol[k] for k in sorted(args.tol_names)},
           "columns": list(header), "rows": [list(r) for r in rows]}
    doc.update(doc_extra or {})
    return io.to_json(doc)


def _t_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise InputError(f"--t-grid expects T or a:b:k, got {spec!r}") from None
    if k < 1 or not (0 < a <= b):
        raise InputError(f"--t-grid needs 0 < a <= b and k >= 1, got {spec!r}")
    return np.linspace(a, b, k)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise InputError("missing required option(s): " + ", ".join("--" + n for n in missing))


# ---------------------------------------------------------------------------
# subcommands


def cmd_evolve(args, tol):
    _need(args, "space", "cost", "field")
    space = io.load_space(args.space)
    cost = io.load_cost(args.cost)
    f = io.load_field(args.field, space.n)
    rows = []
    for t in _t_grid(args.t_grid):
        P = sup_convolution(space, cost, f, t)
        Q = inf_convolution(space, cost, f, t)
        D = time_derivatives(space, cost, f, t, tol["tie_tol"])
        for x in range(space.n):
            rows.append((float(t), x, P[x], Q[x], D.dplus[x], D.dminus[x], D.maxdist[x], D.mindist[x]))
    header = ("t", "x", "Ptf", "Qtf", "dplus", "dminus", "maxdist", "mindist")
    return _emit_rows(args, tol, header, rows), None


def cmd_cconvex(args, tol):
    _need(args, "space", "cost", "field")
    space = io.load_space(args.space)
    cost = io.load_cost(args.cost)
    f = io.load_field(args.field, space.n)
    c = cost.scaled(args.K).matrix(space.dist) if args.K != 1.0 else cost.matrix(space.dist)
    check = is_c_convex(c, f, tol["convexity_tol"])
    sub = subdifferential(c, f, tie_tol=tol["tie_tol"], convexity_tol=tol["convexity_tol"])
    plus, minus, _ = c_gradients(space, cost, args.K, f, tie_tol=tol["tie_tol"])
    points = [{"x": x, "subdifferential": list(sub.sets[x]), "c_gradient_plus": plus[x],
               "c_gradient_minus": minus[x]} for x in range(space.n)]
    doc = {"command": "cconvex", "seed": args.seed,
           "tolerances": {k: tol[k] for k in sorted(args.tol_names)},
           "K": args.K, "is_c_convex": check.is_convex, "deviation": check.deviation,
           "convexified": sub.convexified, "points": points}
    if args.format == "json":
        return io.to_json(doc), None
    rows = [(x, " ".join(map(str, sub.sets[x])), plus[x], minus[x]) for x in range(space.n)]
    header = ("x", "subdifferential", "c_gradient_plus", "c_gradient_minus")
    text = _emit_rows(args, tol, header, rows)
    return text, None


def cmd_ot(args, tol):
    _need(args, "space", "cost", "mu", "nu")
    space = io.load_space(args.space)
    cost = io.load_cost(args.cost)
    mu, nu = io.load_measure(args.mu), io.load_measure(args.nu)
    if mu.n != space.n or nu.n != space.n:
        raise InputError(f"measures have {mu.n} and {nu.n} points, space has {space.n}")
    plan = ot_cost(cost.matrix(space.dist), mu, nu)
    if args.format == "json":
        doc = {"command": "ot", "cost": plan.cost, "duality_gap": plan.duality_gap,
               "pivots": plan.pivots}
        if args.plan:
            doc["plan"] = plan.pi
        return io.to_json(doc), None
    text = f"cost {io.fmt(plan.cost)}\nduality_gap {io.fmt(plan.duality_gap)}\n"
    if args.plan:
        rows = [(i, j, plan.pi[i, j]) for i, j in zip(*np.nonzero(plan.pi))]
        text += io.write_csv(("x", "y", "mass"), rows)
    return text, None


def cmd_kappa(args, tol):
    return f"{kappa_p(args.p):.8f}\n", None


def cmd_constants(args, tol):
    _need(args, "space", "mu")
    space = io.load_space(args.space)
    mu = io.load_measure(args.mu)
    audit = constant_chain_audit(space, args.p, mu, args.budget, args.seed)
    failure = None if audit.ordered else next(
        f"constant chain {c.label}" for c in audit.checks if not c.holds)
    if args.format == "json":
        return io.to_json({"command": "constants", "p": args.p, **audit.to_document()}), failure
    rows = [(name, rep.constant_estimate, rep.bound_side)
            for name, rep in (("F", audit.F), ("E", audit.E), ("D", audit.D), ("C", audit.C))]
    rows += [(c.label, c.rhs * (1 + audit.slack) - c.lhs, "pass" if c.holds else "FAIL")
             for c in audit.checks]
    return _emit_rows(args, tol, ("quantity", "value", "note"), rows), failure


def cmd_hyper(args, tol):
    _need(args, "space", "mu", "cost", "C")
    space = io.load_space(args.space)
    mu = io.load_measure(args.mu)
    cost = io.load_cost(args.cost)
    params = ScheduleParams.from_cost(cost, args.C, args.t_o)
    if args.field is not None:
        f = io.load_field(args.field, space.n)
    else:
        f = random_field(space, cost, restart_rngs(args.seed, 1)[0], 0)
    grid = None if args.t_grid is None else _t_grid(args.t_grid)
    prof = hypercontractivity_profile(space, cost, mu, params, f, grid)
    rows = [(float(t), float(k), float(H)) for t, k, H in zip(prof.t, prof.k, prof.H)]
    failure = None if prof.nonincreasing else "hypercontractive H nonincreasing"
    extra = {"H0": prof.H0, "max_increase": prof.max_increase, "admissible": params.admissible,
             "field": f}
    return _emit_rows(args, tol, ("t", "k", "H"), rows, extra), failure


def cmd_verify(args, tol):
    rows = verify_paper(args.scale, args.seed, args.beta_perturbation)
    failed = [r.label for r in rows if not r.passed]
    if args.format == "json":
        text = io.to_json({"command": "verify-paper", "scale": args.scale, "seed": args.seed,
                           "rows": [r.__dict__ for r in rows]})
    elif args.format == "csv":
        text = io.write_csv(("invariant", "passed", "slack", "cases"),
                            [(r.label, str(r.passed).lower(), r.slack, r.cases) for r in rows])
    else:
        text = render_table(rows)
    return text, failed[0] if failed else None


COMMANDS = {
    "evolve": cmd_evolve,
    "cconvex": cmd_cconvex,
    "ot": cmd_ot,
    "kappa": cmd_kappa,
    "constants": cmd_constants,
    "hyper": cmd_hyper,
    "verify-paper": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help=f"override a tolerance; one of {sorted(DEFAULT_TOLERANCES)}")

    def fmt_opt(p, default):
        p.add_argument("--format", choices=("json", "csv", "table"), default=default)

    parser = argparse.ArgumentParser(prog="hopflax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common], help="P_t f, Q_t f and their t-derivatives")
    p.add_argument("--space", type=Path)
    p.add_argument("--cost", type=Path)
    p.add_argument("--field", type=Path)
    p.add_argument("--t-grid", default="1", help="T or a:b:k (k evenly spaced times)")
    fmt_opt(p, "csv")

    p = sub.add_parser("cconvex", parents=[common], help="c-convexity test and subdifferentials")
    p.add_argument("--space", type=Path)
    p.add_argument("--cost", type=Path)
    p.add_argument("--field", type=Path)
    p.add_argument("--K", type=float, default=1.0, help="cost scale")
    fmt_opt(p, "json")

    p = sub.add_parser("ot", parents=[common], help="optimal transport cost between two measures")
    p.add_argument("--space", type=Path)
    p.add_argument("--cost", type=Path)
    p.add_argument("--mu", type=Path)
    p.add_argument("--nu", type=Path)
    p.add_argument("--plan", action="store_true", help="also print the optimal plan")
    fmt_opt(p, "table")

    p = sub.add_parser("kappa", parents=[common], help="the constant kappa_p")
    p.add_argument("--p", type=float, required=True)
    fmt_opt(p, "table")

    p = sub.add_parser("constants", parents=[common], help="estimate F, E, D, C and audit their ordering")
    p.add_argument("--space", type=Path)
    p.add_argument("--mu", type=Path)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--budget", type=int, default=32)
    fmt_opt(p, "json")

    p = sub.add_parser("hyper", parents=[common], help="hypercontractivity profile H(t)")
    p.add_argument("--space", type=Path)
    p.add_argument("--mu", type=Path)
    p.add_argument("--cost", type=Path)
    p.add_argument("--field", type=Path, default=None, help="default: a random field from --seed")
    p.add_argument("--C", type=float)
    p.add_argument("--t-o", type=float, default=None)
    p.add_argument("--t-grid", default=None, help="a:b:k; default 40 log points around t_o")
    fmt_opt(p, "table")

    p = sub.add_parser("verify-paper", parents=[common], help="run the full invariant suite")
    p.add_argument("--scale", choices=SCALES, default="smoke")
    p.add_argument("--beta-perturbation", type=float, default=0.0,
                   help="relative error injected into beta (mutation canary)")
    fmt_opt(p, "table")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = _tolerances(args.tol)
        args.tol_names = {pair.partition("=")[0] for pair in args.tol}
        text, failure = COMMANDS[args.command](args, tol)
        if args.out is not None:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    except (HopflaxError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if failure is not None:
        print(f"failed: {failure}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
