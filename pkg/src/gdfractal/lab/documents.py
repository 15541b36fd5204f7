"""System documents: JSON files describing a graph-directed system.

Scalars may be JSON numbers (decimals are read exactly), rational strings
such as ``"1/3"``, or expressions such as ``"sqrt(2)/2"``.  A document with
a ``family`` block is a one-parameter family; its scalar expressions may use
the parameter symbol (``n`` by default).
"""
from __future__ import annotations

import hashlib
import json
from decimal import Decimal
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Annotated, Any, Literal, Optional

import pydantic
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationInfo

from ..errors import ParseError, ValidationError
from ..measure import ProbabilityScheme
from ..model import (Box, CondensationSet, Edge, GDSystem, Point, Polyline, Segment,
                     SimilarityMap, validate_system)
from ..separation import Interval, Polygon

BUNDLED = ("paper_fig1.system", "cantor.system", "cantor_interval.system",
           "halves_point.system", "baker.system", "continuity_failure.family",
           "continuity_third.family")


def _sympy_scalar(text: str, info: ValidationInfo | None):
    import sympy

    ctx = (info.context if info is not None else None) or {}
    name = ctx.get("parameter", "n")
    sym = sympy.Symbol(name)
    try:
        expr = sympy.sympify(text, locals={name: sym}, rational=True)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse scalar {text!r}") from exc
    if "value" in ctx:
        expr = expr.subs(sym, ctx["value"])
    elif ctx.get("limit"):
        expr = sympy.limit(expr, sym, sympy.oo)
    if expr.free_symbols:
        raise ValueError(f"scalar {text!r} has unbound symbols {sorted(map(str, expr.free_symbols))}")
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    if not expr.is_real:
        raise ValueError(f"scalar {text!r} is not a finite real number")
    return float(expr)


def parse_scalar(value: Any, info: ValidationInfo | None = None):
    if isinstance(value, bool):
        raise ValueError("expected a number, got a boolean")
    if isinstance(value, (int, Decimal, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            return _sympy_scalar(value, info)
    raise ValueError(f"expected a number or numeric string, got {type(value).__name__}")


def _scalar_field(value: Any, info: ValidationInfo):
    return parse_scalar(value, info)


Num = Annotated[Any, BeforeValidator(_scalar_field)]
Vec = list[Num]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class EdgeDoc(_Strict):
    id: str
    from_: str = Field(alias="from")
    to: str
    scale: Num
    rotation_deg: Num = Fraction(0)
    reflect: bool = False
    translate: Optional[Vec] = None
    lower_scale: Optional[Num] = None
    orthogonal: Optional[list[Vec]] = None


class BoxDoc(_Strict):
    min: Vec
    max: Vec


class PrimitiveDoc(_Strict):
    point: Optional[Vec] = None
    segment: Optional[list[Vec]] = None
    box: Optional[BoxDoc] = None
    polyline: Optional[list[Vec]] = None

    @pydantic.model_validator(mode="after")
    def _one_kind(self):
        given = [k for k in ("point", "segment", "box", "polyline") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError("each primitive needs exactly one of point/segment/box/polyline")
        if self.segment is not None and len(self.segment) != 2:
            raise ValueError("a segment has exactly two endpoints")
        if self.polyline is not None and len(self.polyline) < 2:
            raise ValueError("a polyline needs at least two points")
        return self

    def build(self):
        if self.point is not None:
            return Point(tuple(self.point))
        if self.segment is not None:
            return Segment(tuple(self.segment[0]), tuple(self.segment[1]))
        if self.box is not None:
            return Box(tuple(self.box.min), tuple(self.box.max))
        return Polyline(tuple(tuple(p) for p in self.polyline))


class RegionDoc(_Strict):
    interval: Optional[Vec] = None
    polygon: Optional[list[Vec]] = None

    @pydantic.model_validator(mode="after")
    def _one_kind(self):
        if (self.interval is None) == (self.polygon is None):
            raise ValueError("a region is either an interval or a polygon")
        if self.interval is not None and len(self.interval) != 2:
            raise ValueError("an interval has two endpoints")
        return self

    def build(self):
        if self.interval is not None:
            return Interval(*self.interval)
        return Polygon(tuple(tuple(p) for p in self.polygon))


class ProbabilityDoc(_Strict):
    edges: dict[str, Num]
    condensation: Num = Fraction(0)


class FamilyDoc(_Strict):
    parameter: str = "n"
    values: Optional[list[int]] = None


class SystemDoc(_Strict):
    name: Optional[str] = None
    description: Optional[str] = None
    ambient_dim: Literal[1, 2, 3]
    vertices: list[str]
    edges: list[EdgeDoc]
    condensation: dict[str, list[PrimitiveDoc]] = {}
    regions: Optional[dict[str, RegionDoc]] = None
    probabilities: Optional[dict[str, ProbabilityDoc]] = None
    family: Optional[FamilyDoc] = None


def _loc(err: dict) -> str:
    return ".".join(str(p) for p in err["loc"])


def _read_json(text: str, source: str) -> dict:
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _validate_doc(raw: dict, source: str, context: dict | None = None) -> SystemDoc:
    try:
        return SystemDoc.model_validate(raw, context=context)
    except pydantic.ValidationError as exc:
        msgs = "; ".join(f"{_loc(e)}: {e['msg']}" for e in exc.errors())
        raise ParseError(f"{source}: {msgs}") from exc


def build_system(doc: SystemDoc, source: str = "<document>") -> GDSystem:
    names = list(doc.vertices)
    index = {v: i for i, v in enumerate(names)}
    if len(index) != len(names):
        raise ParseError(f"{source}: vertices: duplicate vertex names")

    def vid(name: str, where: str) -> int:
        if name not in index:
            raise ParseError(f"{source}: {where}: unknown vertex {name!r}")
        return index[name]

    d = doc.ambient_dim
    edges = []
    for k, e in enumerate(doc.edges):
        try:
            m = SimilarityMap.build(d, e.scale, e.translate, e.rotation_deg, e.reflect,
                                    e.orthogonal, e.lower_scale)
        except ValueError as exc:
            raise ParseError(f"{source}: edges.{k}: {exc}") from exc
        edges.append(Edge(e.id, vid(e.from_, f"edges.{k}.from"), vid(e.to, f"edges.{k}.to"), m))
    for name in doc.condensation:
        vid(name, "condensation")
    try:
        cond = tuple(CondensationSet(tuple(p.build() for p in doc.condensation.get(v, [])))
                     for v in names)
        regions = None
        if doc.regions is not None:
            for name in doc.regions:
                vid(name, "regions")
            missing = [v for v in names if v not in doc.regions]
            if missing:
                raise ParseError(f"{source}: regions: missing vertices {missing}")
            regions = tuple(doc.regions[v].build() for v in names)
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from exc
    probs = None
    if doc.probabilities is not None:
        for name in doc.probabilities:
            vid(name, "probabilities")
        weights = {}
        for p in doc.probabilities.values():
            weights.update({k: float(v) for k, v in p.edges.items()})
        probs = ProbabilityScheme(weights, tuple(
            float(doc.probabilities[v].condensation) if v in doc.probabilities else 0.0
            for v in names))
    return GDSystem(d, tuple(names), tuple(edges), cond, regions, probs)


def resolve_path(path: str | Path) -> Path:
    """A filesystem path, or the name of a bundled example document."""
    p = Path(path)
    if p.exists():
        return p
    name = str(path).removeprefix("bundled:")
    if name in BUNDLED:
        return Path(str(resources.files("gdfractal") / "data" / name))
    raise ParseError(f"{path}: no such file")


def parse_system(text: str, source: str = "<document>", validate: bool = True) -> GDSystem:
    raw = _read_json(text, source)
    doc = _validate_doc(raw, source)
    if doc.family is not None:
        raise ParseError(f"{source}: family documents need a parameter value; use load_family")
    sys = build_system(doc, source)
    if validate:
        _require_valid(sys, source)
    return sys


def _require_valid(sys: GDSystem, source: str) -> None:
    report = validate_system(sys)
    if not report.ok:
        raise ValidationError(f"{source}: " + "; ".join(v.message for v in report.violations), report)


def load_system(path: str | Path) -> GDSystem:
    p = resolve_path(path)
    return parse_system(p.read_text(encoding="utf-8"), str(path))


class Family:
    """One-parameter family of systems defined by a family document."""

    def __init__(self, raw: dict, source: str):
        self.raw = raw
        self.source = source
        fam = raw.get("family") or {}
        self.parameter = fam.get("parameter", "n") if isinstance(fam, dict) else "n"
        doc = _validate_doc(raw, source, {"parameter": self.parameter, "value": 2})
        self.values = doc.family.values if doc.family and doc.family.values else None
        self.name = doc.name

    def _build(self, context: dict) -> GDSystem:
        return build_system(_validate_doc(self.raw, self.source, {"parameter": self.parameter, **context}),
                            self.source)

    def instantiate(self, value: int) -> GDSystem:
        sys = self._build({"value": value})
        _require_valid(sys, f"{self.source} [{self.parameter}={value}]")
        return sys

    def limit(self) -> GDSystem:
        """The termwise limit system, not validated (it may be degenerate)."""
        return self._build({"limit": True})


def load_family(path: str | Path) -> Family:
    p = resolve_path(path)
    return Family(_read_json(p.read_text(encoding="utf-8"), str(path)), str(path))


# --- canonical form ---------------------------------------------------------------

def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return float(x)


def _prim(p) -> dict:
    if isinstance(p, Point):
        return {"point": [_num(x) for x in p.at]}
    if isinstance(p, Segment):
        return {"segment": [[_num(x) for x in p.a], [_num(x) for x in p.b]]}
    if isinstance(p, Box):
        return {"box": {"min": [_num(x) for x in p.lo], "max": [_num(x) for x in p.hi]}}
    return {"polyline": [[_num(x) for x in q] for q in p.points]}


def system_to_dict(sys: GDSystem) -> dict:
    out = {
        "ambient_dim": sys.dim,
        "vertices": list(sys.vertices),
        "edges": [{"id": e.id, "from": sys.vertices[e.source], "to": sys.vertices[e.target],
                   "scale": _num(e.map.scale), "lower_scale": _num(e.map.lower_scale),
                   "orthogonal": [[_num(x) for x in row] for row in e.map.orthogonal],
                   "translate": [_num(x) for x in e.map.translation]} for e in sys.edges],
        "condensation": {sys.vertices[v]: [_prim(p) for p in c]
                         for v, c in enumerate(sys.condensation) if not c.is_empty},
    }
    if sys.regions is not None:
        out["regions"] = {sys.vertices[v]: ({"interval": [_num(r.a), _num(r.b)]}
                                            if isinstance(r, Interval)
                                            else {"polygon": [[_num(x) for x in q] for q in r.points]})
                          for v, r in enumerate(sys.regions)}
    if sys.probabilities is not None:
        out["probabilities"] = {
            sys.vertices[v]: {"edges": {e.id: sys.probabilities.edge_weights.get(e.id, 0.0)
                                        for e in sys.out_edges(v)},
                              "condensation": sys.probabilities.condensation[v]}
            for v in range(sys.n)}
    return out


def system_hash(sys: GDSystem) -> str:
    blob = json.dumps(system_to_dict(sys), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
