"""Experiment orchestration: dimension formulas, the CRE lower bound and
continuity of the graph dimension along families of systems.

Verdicts are one-sided with tolerance ``tau``.  A verdict that misses by more
than ``tau`` is labelled ``numerical-anomaly``; it flags the run for review
and is never read as a counterexample.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .. import attractor, boxdim
from ..errors import HypothesisViolated, InsufficientResolution, ValidationError
from ..model import GDSystem, validate_system
from ..separation import check_gdiosc, check_strong
from ..spectral import build_ratio_matrix, graph_dimension, perron_vector
from .documents import Family, system_hash

PASS, ANOMALY, NA = "pass", "numerical-anomaly", "not-applicable"

# cross-cut sizes grow like eps^-s*; cap clouds so overlapping members stay tractable
CLOUD_BUDGET = 2 ** 18


@dataclass
class ExperimentParams:
    epsilon: float | None = None
    deltas: tuple[float, ...] = field(default_factory=lambda: boxdim.dyadic_deltas(3, 14))
    window: int = 4
    tau: float = 0.05
    p_grid: int = 256
    cre_deltas: tuple[float, ...] = field(default_factory=lambda: boxdim.dyadic_deltas(4, 20))
    workers: int = 1
    include_timing: bool = False

    def resolution(self, dim: int) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return {1: 1e-4, 2: 2.0 ** -8}.get(dim, 2.0 ** -6)

    def cloud_deltas(self, dim: int) -> tuple[float, ...]:
        """Mesh sizes usable on a cloud of resolution epsilon (delta >= epsilon)."""
        eps = self.resolution(dim)
        return tuple(d for d in self.deltas if d >= eps)

    def to_dict(self, dim: int) -> dict:
        out = asdict(self)
        out["epsilon"] = self.resolution(dim)
        out["cloud_deltas"] = list(self.cloud_deltas(dim))
        out["deltas"] = list(self.deltas)
        out["cre_deltas"] = list(self.cre_deltas)
        out.pop("workers")
        out.pop("include_timing")
        return out


@dataclass
class Verdict:
    name: str
    vertex: str | None
    status: str
    statement: str
    lhs: float | None = None
    rhs: float | None = None
    margin: float | None = None
    inputs: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    kind: str
    system_hash: str
    params: dict
    results: dict
    verdicts: list[Verdict]
    timing: dict | None = None

    @property
    def has_anomaly(self) -> bool:
        return any(v.status == ANOMALY for v in self.verdicts)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "system_hash": self.system_hash, "params": self.params,
               "results": self.results, "verdicts": [asdict(v) for v in self.verdicts]}
        if self.timing is not None:
            out["timing"] = self.timing
        return _clean(out)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _upper_leq(name, vertex, statement, lhs, rhs, tau, inputs) -> Verdict:
    margin = rhs - lhs
    return Verdict(name, vertex, PASS if margin >= -tau else ANOMALY, statement, lhs, rhs, margin, inputs)


def _series_dict(series: boxdim.BoxCountSeries, est: boxdim.DimEstimate | None) -> dict:
    out = {"source": series.source, "deltas": list(series.deltas), "counts": list(series.counts)}
    if est is not None:
        out["estimate"] = asdict(est)
    return out


def _dims(sys: GDSystem) -> dict:
    upper = graph_dimension(sys, "upper")
    lower = graph_dimension(sys, "lower")
    u = perron_vector(build_ratio_matrix(sys, upper.value)).vector
    return {"s_star": upper.value, "s_prime": lower.value, "phi_at_s_star": upper.phi_at_value,
            "perron_vector": u.tolist()}


def _estimate(series, window):
    try:
        return boxdim.estimate_dims(series, window)
    except boxdim.InsufficientData:
        return None


def _condensation_dim(sys, v, params) -> tuple[float, dict]:
    c = sys.condensation[v]
    if c.is_empty:
        return 0.0, {"empty": True}
    series = boxdim.analytic_series(c, params.deltas)
    est = boxdim.estimate_dims(series, params.window)
    return est.slope_upper, _series_dict(series, est)


def _vertex_formulas(sys: GDSystem, v: int, params: ExperimentParams) -> dict:
    eps = params.resolution(sys.dim)
    deltas = params.cloud_deltas(sys.dim)
    out = {}
    clouds = {"homogeneous": attractor.homogeneous_cloud(sys, v, eps)}
    if not sys.is_homogeneous:
        clouds["orbital"] = attractor.orbital_cloud(sys, v, eps)
        clouds["inhomogeneous"] = attractor.PointCloud(
            v, eps, attractor.unique_rows(np.vstack([clouds["homogeneous"].points,
                                                     clouds["orbital"].points])), "inhomogeneous")
    else:
        clouds["inhomogeneous"] = clouds["homogeneous"]
    for name, c in clouds.items():
        series = boxdim.box_count_series(c, deltas)
        out[name] = _series_dict(series, _estimate(series, params.window))
        out[name]["points"] = len(c)
    dc, cinfo = _condensation_dim(sys, v, params)
    out["condensation"] = cinfo
    out["condensation_upper"] = dc
    out["_cloud"] = clouds["inhomogeneous"]
    return out


def _upper(res: dict, name: str) -> float | None:
    est = res.get(name, {}).get("estimate")
    return None if est is None else est["slope_upper"]


def verify_dimension_formulas(sys: GDSystem, params: ExperimentParams | None = None) -> ExperimentReport:
    params = params or ExperimentParams()
    t0 = time.perf_counter()
    dims = _dims(sys)
    s_star = dims["s_star"]
    vertices = range(sys.n)
    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as pool:
            per = list(pool.map(lambda v: _vertex_formulas(sys, v, params), vertices))
    else:
        per = [_vertex_formulas(sys, v, params) for v in vertices]

    similar = all(e.map.is_similarity for e in sys.edges)
    osc = None
    if sys.regions is not None and sys.dim in (1, 2):
        report = check_gdiosc(sys)
        if report.gdiosc:
            try:
                report = check_strong(sys, sys.regions, {v: per[v]["_cloud"] for v in vertices}, report)
            except InsufficientResolution as exc:
                report.condition_iv.note = f"inconclusive: {exc}"
        osc = report

    inputs = {"epsilon": params.resolution(sys.dim), "deltas": list(params.cloud_deltas(sys.dim)),
              "window": params.window, "tau": params.tau}
    dcs = [p["condensation_upper"] for p in per]
    equal_c = max(dcs) - min(dcs) <= params.tau
    verdicts = []
    for v in vertices:
        name = sys.vertices[v]
        res = per[v]
        dc = res["condensation_upper"]
        bound = max(s_star, dc)
        d_o, d_f, d_phi = _upper(res, "orbital"), _upper(res, "inhomogeneous"), _upper(res, "homogeneous")
        if sys.is_homogeneous or d_o is None:
            verdicts.append(Verdict("orbital-upper-bound", name, NA, "upper dim O_i <= max(s*, upper dim C_i)",
                                    inputs=inputs))
        elif not equal_c:
            verdicts.append(Verdict("orbital-upper-bound", name, NA,
                                    "upper dim O_i <= max(s*, upper dim C_i); condensation dimensions differ",
                                    d_o, bound, bound - d_o, inputs))
        else:
            verdicts.append(_upper_leq("orbital-upper-bound", name,
                                       "upper dim O_i <= max(s*, upper dim C_i)", d_o, bound, params.tau, inputs))
        if d_f is None:
            verdicts.append(Verdict("sandwich", name, NA, "too few scales", inputs=inputs))
            continue
        low = max(d_phi, dc)
        lo_ok = d_f - low >= -params.tau
        hi_ok = bound - d_f >= -params.tau
        verdicts.append(Verdict("sandwich", name, PASS if lo_ok and hi_ok else ANOMALY,
                                "max(upper dim F_phi_i, upper dim C_i) <= upper dim F_i <= max(s*, upper dim C_i)",
                                d_f, bound, min(d_f - low, bound - d_f),
                                {**inputs, "lower_end": low, "upper_end": bound}))
        if similar and osc is not None and osc.gdisosc:
            gap = abs(d_f - bound)
            verdicts.append(Verdict("equality", name, PASS if gap <= params.tau else ANOMALY,
                                    "upper dim F_i = max(s*, upper dim C_i) under the strong open set condition",
                                    d_f, bound, params.tau - gap, inputs))
        else:
            why = "maps are not all similarities" if not similar else (
                "no open regions supplied" if osc is None else "strong open set condition not verified")
            verdicts.append(Verdict("equality", name, NA, f"not asserted: {why}", d_f, bound, None, inputs))

    results = {
        "dimensions": dims,
        "vertices": {sys.vertices[v]: {k: val for k, val in per[v].items() if not k.startswith("_")}
                     for v in vertices},
        "open_set_condition": None if osc is None else osc.to_dict(),
        "all_similarities": similar,
    }
    timing = {"seconds": time.perf_counter() - t0} if params.include_timing else None
    return ExperimentReport("formulas", system_hash(sys), params.to_dict(sys.dim), results, verdicts, timing)


def lower_bound_experiment(sys: GDSystem, t_values: Sequence[float],
                           params: ExperimentParams | None = None) -> ExperimentReport:
    params = params or ExperimentParams()
    t0 = time.perf_counter()
    first = sys.condensation[0]
    if any(c != first for c in sys.condensation):
        raise HypothesisViolated("the lower bound needs the same condensation set at every vertex")
    dims = _dims(sys)
    s_prime = dims["s_prime"]
    osc = check_gdiosc(sys) if sys.regions is not None and sys.dim in (1, 2) else None
    hyp = osc is not None and osc.gdiosc
    eps = params.resolution(sys.dim)
    deltas = params.cloud_deltas(sys.dim)
    per = {}
    for v in range(sys.n):
        c = attractor.inhomogeneous_cloud(sys, v, eps)
        series = boxdim.box_count_series(c, deltas)
        est = boxdim.estimate_dims(series, params.window)
        per[sys.vertices[v]] = _series_dict(series, est)
    cre_rows = []
    verdicts = []
    inputs = {"epsilon": eps, "deltas": list(deltas), "window": params.window, "tau": params.tau,
              "cre_deltas": list(params.cre_deltas), "p_grid": params.p_grid}
    for t in t_values:
        if first.is_empty:
            prof = None
            p_t = 0.0
        else:
            prof = boxdim.cre_profile(first, t, params.cre_deltas, params.p_grid)
            p_t = prof.p_t
        bound = p_t * t + (1 - p_t) * s_prime
        cre_rows.append({"t": t, "p_t": p_t, "bound": bound,
                         "per_delta": None if prof is None else list(prof.values)})
        for name, res in per.items():
            lower = res["estimate"]["slope_lower"]
            statement = "P_t(C) t + (1 - P_t(C)) s' <= lower dim F_i"
            if hyp:
                verdicts.append(_upper_leq("cre-lower-bound", name, statement, bound, lower, params.tau,
                                           {**inputs, "t": t}))
            else:
                verdicts.append(Verdict("cre-lower-bound", name, NA,
                                        statement + "; open set condition not verified",
                                        bound, lower, lower - bound, {**inputs, "t": t}))
    results = {"dimensions": dims, "cre": cre_rows, "vertices": per,
               "open_set_condition": None if osc is None else osc.to_dict()}
    timing = {"seconds": time.perf_counter() - t0} if params.include_timing else None
    return ExperimentReport("lowerbound", system_hash(sys), params.to_dict(sys.dim), results, verdicts, timing)


def continuity_experiment(family: Family, n_values: Sequence[int] | None = None,
                          params: ExperimentParams | None = None,
                          empirical: bool = True) -> ExperimentReport:
    params = params or ExperimentParams()
    t0 = time.perf_counter()
    n_values = list(n_values or family.values or range(2, 11))
    rows = []
    hashes = []
    dim = None
    for n in n_values:
        sys = family.instantiate(n)
        dim = sys.dim
        hashes.append(system_hash(sys))
        row = {"n": n, **{k: v for k, v in _dims(sys).items() if k != "perron_vector"}}
        if empirical:
            eps = params.resolution(sys.dim)
            if row["s_star"] > 0:
                eps = max(eps, CLOUD_BUDGET ** (-1.0 / row["s_star"]))
            c = attractor.inhomogeneous_cloud(sys, 0, eps)
            series = boxdim.box_count_series(c, [d for d in params.deltas if d >= eps])
            est = _estimate(series, params.window)
            row["epsilon"] = eps
            row["empirical_upper"] = None if est is None else est.slope_upper
        rows.append(row)

    limit = family.limit()
    check = validate_system(limit)
    lim = {"valid": check.ok, "violations": [v.message for v in check.violations]}
    verdicts = []
    s = [r["s_star"] for r in rows]
    if check.ok:
        s_inf = graph_dimension(limit).value
        lim["s_star"] = s_inf
        gaps = [abs(x - s_inf) for x in s]
        for r, g in zip(rows, gaps):
            r["gap"] = g
        decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
        verdicts.append(Verdict("graph-dimension-converges", None, PASS if decreasing else ANOMALY,
                                "|s_n* - s*| decreases along the family", gaps[-1], None, None,
                                {"n_values": n_values}))
    else:
        verdicts.append(Verdict("limit-rejected", None, PASS,
                                "limit system is not a valid contraction system; no limit dimension computed",
                                inputs={"violations": lim["violations"]}))
    constant = max(s) - min(s) <= 1e-9
    results = {"rows": rows, "limit": lim, "s_star_constant": constant, "system_hashes": hashes}
    timing = {"seconds": time.perf_counter() - t0} if params.include_timing else None
    name = family.name or family.source
    return ExperimentReport("continuity", "family:" + name, params.to_dict(dim or 1), results, verdicts, timing)


def require_valid(sys: GDSystem) -> None:
    report = validate_system(sys)
    if not report.ok:
        raise ValidationError("; ".join(v.message for v in report.violations), report)
