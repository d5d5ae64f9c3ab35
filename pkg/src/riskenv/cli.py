"""Command line front end.

Exit codes: 0 success / property holds, 1 property violated (a witness is
printed), 2 input error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import sys
from typing import Iterator, Sequence

import numpy as np

from riskenv.axioms import (
    AxiomKind,
    EnvelopeFlavor,
    check_axiom,
    fubini_check,
    gap_witness_var,
    random_position,
    ssd_certificate,
    trial_rng,
    verify_envelope,
)
from riskenv.errors import InvalidInput, NoWitnessFound, SpecNotPositivelyHomogeneous
from riskenv.io import read_measures, read_scenarios
from riskenv.measures import DiscreteMeasure, evaluate
from riskenv.space import ssd_dominates, uniform_refine, uniform_space

THEOREMS = {
    "envelope-monetary": EnvelopeFlavor.MONETARY,
    "envelope-coherent": EnvelopeFlavor.POS_HOMOGENEOUS,
    "envelope-law": EnvelopeFlavor.LAW_INVARIANT,
    "envelope-ssd": EnvelopeFlavor.SSD,
    "fubini": None,
    "gap-var": None,
}


class UsageError(Exception):
    pass


def fmt(value: float) -> str:
    return repr(float(value))


def fmt_vec(values) -> str:
    return "[" + " ".join(fmt(v) for v in np.asarray(values, dtype=float).reshape(-1)) + "]"


def fmt_witness(inputs: dict) -> str:
    parts = []
    for key, val in inputs.items():
        if isinstance(val, str):
            parts.append(f"{key}={val}")
        elif isinstance(val, list):
            parts.append(f"{key}=" + "[" + " ".join(fmt_vec(v) for v in val) + "]")
        elif isinstance(val, tuple):
            parts.append(f"{key}={fmt_vec(val)}")
        else:
            parts.append(f"{key}={fmt(val)}")
    return ";".join(parts)


@contextlib.contextmanager
def _output(path: str | None) -> Iterator:
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _measures(path: str | None):
    if path is None:
        raise UsageError("--measures is required for this command")
    return read_measures(path)


def cmd_compute(args) -> int:
    table = read_scenarios(args.scenarios)
    measures = _measures(args.measures)
    space = table.space
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["name", "measure", "value"])
    for j, name in enumerate(table.position_names):
        X = table.matrix[:, j]
        for m in measures:
            w.writerow([name, m.name, fmt(evaluate(m.spec, space, X))])
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 0


def _axiom_name(args) -> str:
    name = args.axiom_opt or args.axiom
    if not name:
        raise UsageError("an axiom name is required")
    return name


def cmd_check(args) -> int:
    kind = AxiomKind.parse(_axiom_name(args))
    measures = _measures(args.measures)
    space = uniform_space(args.atoms)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["measure", "axiom", "trials", "seed", "holds", "lhs", "rhs", "margin", "witness"])
    violated = False
    for m in measures:
        rep = check_axiom(kind, m.spec, space, args.trials, args.seed)
        if rep.holds:
            w.writerow([m.name, kind.value, rep.trials, rep.seed, "true", "", "", "", ""])
        else:
            violated = True
            wt = rep.witness
            w.writerow([m.name, kind.value, rep.trials, rep.seed, "false", fmt(wt.lhs), fmt(wt.rhs), fmt(wt.margin), fmt_witness(wt.inputs)])
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 1 if violated else 0


def _random_w(rng: np.random.Generator) -> DiscreteMeasure:
    k = int(rng.integers(1, 6))
    ts = list(rng.random(k))
    if rng.random() < 0.5:
        ts[0] = 0.0
    if k > 1 and rng.random() < 0.5:
        ts[-1] = 1.0
    ws = rng.dirichlet(np.ones(k))
    return DiscreteMeasure.from_pairs(list(zip(ts, ws)))


def cmd_verify(args) -> int:
    theorem = args.theorem_opt or args.theorem
    if theorem not in THEOREMS:
        raise UsageError(f"unknown theorem {theorem!r}; choose from {', '.join(THEOREMS)}")
    buf = io.StringIO()
    w = _writer(buf)
    status = 0
    if theorem == "gap-var":
        space = uniform_space(args.atoms)
        try:
            g = gap_witness_var(space, args.level, seed=args.seed)
        except NoWitnessFound as exc:
            print(f"gap-var: {exc}", file=sys.stderr)
            return 1
        _write_gap(w, g, space)
    elif theorem == "fubini":
        space = uniform_space(args.atoms)
        w.writerow(["theorem", "trials", "seed", "holds", "detail"])
        failure = None
        for t in range(args.trials):
            rng = trial_rng(args.seed, t)
            rep = fubini_check(space, random_position(rng, space.n), _random_w(rng))
            if not rep.holds:
                failure = rep
                break
        if failure is None:
            w.writerow([theorem, args.trials, args.seed, "true", ""])
        else:
            status = 1
            wt = failure.witness
            w.writerow([theorem, t + 1, args.seed, "false", f"lhs={fmt(wt.lhs)};rhs={fmt(wt.rhs)};" + fmt_witness(wt.inputs)])
    else:
        flavor = THEOREMS[theorem]
        measures = _measures(args.measures)
        space = uniform_space(args.atoms)
        w.writerow(["measure", "theorem", "trials", "seed", "holds", "detail"])
        for m in measures:
            failure = None
            for t in range(args.trials):
                X = random_position(trial_rng(args.seed, t), space.n)
                rep = verify_envelope(flavor, m.spec, space, X, args.samples, args.seed + t)
                if not rep.holds:
                    failure = rep
                    break
            if failure is None:
                w.writerow([m.name, theorem, args.trials, args.seed, "true", ""])
            else:
                status = 1
                wt = failure.witness
                detail = f"lhs={fmt(wt.lhs)};rhs={fmt(wt.rhs)};" + fmt_witness(wt.inputs)
                w.writerow([m.name, theorem, t + 1, args.seed, "false", detail])
                break
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return status


def _write_gap(w, g, space) -> None:
    cert = ssd_certificate(space, g.X, g.Y)
    w.writerow(["field", "value"])
    w.writerow(["level", fmt(g.level)])
    w.writerow(["X", fmt_vec(g.X)])
    w.writerow(["Y", fmt_vec(g.Y)])
    w.writerow(["var_X", fmt(g.var_X)])
    w.writerow(["var_Y", fmt(g.var_Y)])
    w.writerow(["ssd_dominates", "true" if g.ssd_holds else "false"])
    w.writerow(["certificate", "feasible" if cert is not None else "infeasible"])


def cmd_gap_demo(args) -> int:
    space = uniform_space(args.atoms)
    try:
        g = gap_witness_var(space, args.level, seed=args.seed)
    except NoWitnessFound as exc:
        print(f"gap-demo: {exc}", file=sys.stderr)
        return 1
    buf = io.StringIO()
    _write_gap(_writer(buf), g, space)
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 0


def cmd_certify_ssd(args) -> int:
    table = read_scenarios(args.scenarios)
    X = table.position(args.x_name)
    Y = table.position(args.y_name)
    space = table.space
    if not space.is_uniform:
        space, (X, Y) = uniform_refine(space, [X, Y])
    cert = ssd_certificate(space, X, Y)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["field", "value"])
    w.writerow(["x", args.x_name])
    w.writerow(["y", args.y_name])
    w.writerow(["ssd_dominates", "true" if ssd_dominates(space, X, Y) else "false"])
    if cert is None:
        w.writerow(["certificate", "infeasible"])
    else:
        w.writerow(["certificate", "feasible"])
        for row in cert.matrix:
            w.writerow(["D", fmt_vec(row)])
        w.writerow(["e", fmt_vec(cert.slack)])
        w.writerow(["residual", fmt(cert.residual())])
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 0 if cert is not None else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskenv", description="Risk measures on finite probability spaces")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, measures=True):
        if measures:
            sp.add_argument("--measures", help="JSON measure descriptor file")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--trials", type=int, default=1000)
        sp.add_argument("--atoms", type=int, default=4, help="equally likely states for sampled positions")
        sp.add_argument("--out", help="write the report here instead of stdout")

    sp = sub.add_parser("compute", help="evaluate measures on every position of a scenario table")
    sp.add_argument("--scenarios", required=True)
    sp.add_argument("--measures", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_compute)

    sp = sub.add_parser("check", help="search for violations of an axiom")
    sp.add_argument("axiom", nargs="?", help=", ".join(k.value for k in AxiomKind))
    sp.add_argument("--axiom", dest="axiom_opt")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("verify", help="verify an envelope identity, the distortion identity or the VaR gap")
    sp.add_argument("theorem", nargs="?", help=", ".join(THEOREMS))
    sp.add_argument("--theorem", dest="theorem_opt")
    sp.add_argument("--samples", type=int, default=50, help="accepted positions sampled per X")
    sp.add_argument("--level", type=float, default=0.5, help="VaR level for gap-var")
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("certify-ssd", help="doubly stochastic certificate that X second-order dominates Y")
    sp.add_argument("--scenarios", required=True)
    sp.add_argument("x_name")
    sp.add_argument("y_name")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_certify_ssd)

    sp = sub.add_parser("gap-demo", help="pair showing VaR is not consistent with second-order dominance")
    sp.add_argument("--level", type=float, default=0.5)
    common(sp, measures=False)
    sp.set_defaults(func=cmd_gap_demo)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecNotPositivelyHomogeneous as exc:
        print(f"error: incompatible measure: {exc}", file=sys.stderr)
    except (InvalidInput, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
