"""Command line front end: ``gdfractal <command> --system PATH ...``.

Exit codes: 0 success, 1 parse/validation/input error, 2 a report carries a
numerical-anomaly verdict.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys as _sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import attractor, boxdim
from ..errors import GDFractalError, ParseError, ValidationError
from ..measure import sample_measure
from ..model import validate_system
from ..separation import check_gdiosc, check_strong
from ..spectral import build_ratio_matrix, graph_dimension, perron_vector
from . import experiments
from .documents import load_family, load_system, parse_system, resolve_path
from .render import render

EXIT_OK, EXIT_INPUT, EXIT_ANOMALY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(_sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _num(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow([_num(x) for x in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(experiments._clean(obj), sort_keys=True, indent=2) + "\n"


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, newline="")
    else:
        _sys.stdout.write(text)


def _coords_header(d: int) -> list[str]:
    return ["x", "y", "z"][:d]


# --- commands ------------------------------------------------------------------------

def cmd_validate(args) -> int:
    text = resolve_path(args.system).read_text()
    system = parse_system(text, str(args.system), validate=False)
    report = validate_system(system)
    rows = [(v.kind, v.message) for v in report.violations]
    if args.format == "csv":
        _emit(args, _csv(["kind", "message"], rows))
    else:
        _emit(args, _json({"valid": report.ok, "vertices": list(system.vertices),
                           "edges": [e.id for e in system.edges],
                           "violations": [dict(zip(("kind", "message"), r)) for r in rows]}))
    if not report.ok:
        for r in rows:
            print(f"{args.system}: {r[1]}", file=_sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_dim(args) -> int:
    system = load_system(args.system)
    up = graph_dimension(system, "upper")
    low = graph_dimension(system, "lower")
    u = perron_vector(build_ratio_matrix(system, up.value)).vector
    if args.format == "csv":
        rows = [("s_star", up.value), ("s_prime", low.value)]
        rows += [(f"perron_{name}", float(x)) for name, x in zip(system.vertices, u)]
        _emit(args, _csv(["quantity", "value"], rows))
    else:
        _emit(args, _json({"s_star": up.value, "s_prime": low.value,
                           "perron_vector": dict(zip(system.vertices, u.tolist()))}))
    return EXIT_OK


def _epsilon(args, system) -> float:
    return args.epsilon if args.epsilon is not None else experiments.ExperimentParams().resolution(system.dim)


def cmd_attractor(args) -> int:
    system = load_system(args.system)
    c = attractor.cloud(system, args.vertex or system.vertices[0], _epsilon(args, system), args.kind)
    if args.pgm:
        render(c, args.pgm, args.pixels)
    if args.format == "csv":
        _emit(args, _csv(_coords_header(system.dim), c.points.tolist()))
    else:
        _emit(args, _json({"vertex": system.vertices[c.vertex], "kind": c.role, "epsilon": c.resolution,
                           "points": c.points}))
    return EXIT_OK


def cmd_boxdim(args) -> int:
    system = load_system(args.system)
    deltas = boxdim.geometric_deltas(args.delta_max, args.delta_min, args.steps)
    if args.analytic:
        v = system.vertex_index(args.vertex or system.vertices[0])
        series = boxdim.analytic_series(system.condensation[v], deltas)
        eps = None
    else:
        eps = args.epsilon if args.epsilon is not None else args.delta_min
        c = attractor.cloud(system, args.vertex or system.vertices[0], eps, args.kind)
        series = boxdim.box_count_series(c, deltas)
    if args.format == "csv":
        _emit(args, _csv(["delta", "count"], series.rows()))
        return EXIT_OK
    est = boxdim.estimate_dims(series, args.window)
    _emit(args, _json({"source": series.source, "epsilon": eps, "window": args.window,
                       "deltas": series.deltas, "counts": series.counts,
                       "estimate": {"slope_global": est.slope_global, "slope_upper": est.slope_upper,
                                    "slope_lower": est.slope_lower, "r2": est.r2,
                                    "window_slopes": est.window_slopes}}))
    return EXIT_OK


def cmd_cre(args) -> int:
    system = load_system(args.system)
    v = system.vertex_index(args.vertex or system.vertices[0])
    value = boxdim.cre(system.condensation[v], args.t, args.delta, args.p_grid)
    if args.format == "csv":
        _emit(args, _csv(["t", "delta", "p_grid", "cre"], [(args.t, args.delta, args.p_grid, value)]))
    else:
        _emit(args, _json({"vertex": system.vertices[v], "t": args.t, "delta": args.delta,
                           "p_grid": args.p_grid, "cre": value}))
    return EXIT_OK


def cmd_measure(args) -> int:
    system = load_system(args.system)
    if system.probabilities is None:
        raise ValidationError(f"{args.system}: no probability scheme in the document")
    s = sample_measure(system, system.probabilities, args.vertex or system.vertices[0],
                       args.samples, args.seed, args.workers)
    if args.pgm:
        render(s.points, args.pgm, args.pixels)
    if args.format == "csv":
        _emit(args, _csv(_coords_header(system.dim), s.points.tolist()))
    else:
        _emit(args, _json({"vertex": system.vertices[s.vertex], "seed": s.seed, "count": s.count,
                           "mean": s.points.mean(axis=0), "points": s.points}))
    return EXIT_OK


def cmd_osc(args) -> int:
    system = load_system(args.system)
    report = check_gdiosc(system)
    if report.gdiosc:
        eps = _epsilon(args, system)
        clouds = {v: attractor.inhomogeneous_cloud(system, v, eps) for v in range(system.n)}
        try:
            report = check_strong(system, None, clouds, report)
        except GDFractalError as exc:
            report.condition_iv.note = f"inconclusive: {exc}"
    d = report.to_dict()
    if args.format == "csv":
        rows = [(k, d[k]["holds"], json.dumps(d[k]["witness"]), d[k]["note"])
                for k in ("condition_i", "condition_ii", "condition_iii", "condition_iv")]
        _emit(args, _csv(["condition", "holds", "witness", "note"], rows))
    else:
        _emit(args, _json(d))
    return EXIT_OK


def cmd_experiment(args) -> int:
    params = experiments.ExperimentParams(epsilon=args.epsilon, window=args.window, tau=args.tau,
                                          workers=args.workers, include_timing=args.timing)
    if args.kind == "continuity":
        report = experiments.continuity_experiment(load_family(args.system), args.values, params,
                                                   empirical=not args.no_empirical)
    else:
        system = load_system(args.system)
        if args.kind == "formulas":
            report = experiments.verify_dimension_formulas(system, params)
        else:
            report = experiments.lower_bound_experiment(system, args.t or [0.3, 0.6, 0.9], params)
    if args.format == "csv":
        rows = [(v.name, v.vertex or "", v.status, v.lhs, v.rhs, v.margin) for v in report.verdicts]
        _emit(args, _csv(["verdict", "vertex", "status", "lhs", "rhs", "margin"],
                         [[("" if x is None else x) for x in r] for r in rows]))
    else:
        _emit(args, report.to_json())
    return EXIT_ANOMALY if report.has_anomaly else EXIT_OK


# --- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", required=True, help="system document path or bundled name")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--out", help="write output here instead of stdout")

    p = _Parser(prog="gdfractal", description="Graph-directed inhomogeneous fractal lab")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="parse and validate a system document")
    sub.add_parser("dim", parents=[common], help="graph dimensions s*, s' and Perron vector")

    a = sub.add_parser("attractor", parents=[common], help="deterministic point cloud")
    a.add_argument("--vertex")
    a.add_argument("--epsilon", type=float)
    a.add_argument("--kind", choices=("homogeneous", "orbital", "inhomogeneous"), default="inhomogeneous")
    a.add_argument("--pgm", help="also write a density image")
    a.add_argument("--pixels", type=int, default=512)

    b = sub.add_parser("boxdim", parents=[common], help="box-count series and slope estimates")
    b.add_argument("--vertex")
    b.add_argument("--delta-min", type=float, default=2.0 ** -12)
    b.add_argument("--delta-max", type=float, default=2.0 ** -3)
    b.add_argument("--steps", type=int, default=10)
    b.add_argument("--window", type=int, default=4)
    b.add_argument("--epsilon", type=float, help="cloud resolution (default: delta-min)")
    b.add_argument("--kind", choices=("homogeneous", "orbital", "inhomogeneous"), default="inhomogeneous")
    b.add_argument("--analytic", action="store_true", help="count the condensation set exactly")

    c = sub.add_parser("cre", parents=[common], help="(t, delta) covering regularity exponent of C")
    c.add_argument("--vertex")
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--p-grid", type=int, default=256)

    m = sub.add_parser("measure", parents=[common], help="sample the invariant measure")
    m.add_argument("--vertex")
    m.add_argument("--samples", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--pgm")
    m.add_argument("--pixels", type=int, default=512)

    o = sub.add_parser("osc", parents=[common], help="open set condition checks")
    o.add_argument("--epsilon", type=float, help="cloud resolution for condition (iv)")

    e = sub.add_parser("experiment", parents=[common], help="run a theorem experiment")
    e.add_argument("--kind", choices=("formulas", "lowerbound", "continuity"), required=True)
    e.add_argument("--epsilon", type=float)
    e.add_argument("--window", type=int, default=4)
    e.add_argument("--tau", type=float, default=0.05)
    e.add_argument("--t", type=float, nargs="+", help="t values for the lower-bound experiment")
    e.add_argument("--values", type=int, nargs="+", help="family parameter values")
    e.add_argument("--no-empirical", action="store_true", help="skip cloud estimates in continuity runs")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    return p


COMMANDS = {"validate": cmd_validate, "dim": cmd_dim, "attractor": cmd_attractor, "boxdim": cmd_boxdim,
            "cre": cmd_cre, "measure": cmd_measure, "osc": cmd_osc, "experiment": cmd_experiment}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ParseError, ValidationError, GDFractalError, ValueError, OSError) as exc:
        print(f"gdfractal {args.command}: {exc}", file=_sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
