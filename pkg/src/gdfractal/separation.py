"""Open set conditions for graph-directed inhomogeneous systems.

Regions are open intervals (d=1) or open convex polygons (d=2).  When every
number involved is rational the geometry runs in exact ``Fraction``
arithmetic with zero slack; otherwise a slack of ``FLOAT_SLACK`` absorbs
round-off (e.g. for 1/sqrt(2) scales).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .attractor import PointCloud
from .errors import InsufficientResolution, NotSimilarity, UnsupportedDimension
from .model import GDSystem, SimilarityMap, is_exact, to_scalar

FLOAT_SLACK = 1e-12


@dataclass(frozen=True)
class Interval:
    a: object
    b: object

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("interval must have a < b")

    def vertices(self):
        return [(self.a,), (self.b,)]


@dataclass(frozen=True)
class Polygon:
    """Open interior of a convex polygon given counterclockwise."""

    points: tuple[tuple, ...]

    def __post_init__(self):
        if len(self.points) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        n = len(self.points)
        turns = [_cross(self.points[i], self.points[(i + 1) % n], self.points[(i + 2) % n])
                 for i in range(n)]
        if any(t < 0 for t in turns) or all(t == 0 for t in turns):
            raise ValueError("polygon must be convex, counterclockwise and non-degenerate")

    def vertices(self):
        return list(self.points)

    def edges(self):
        n = len(self.points)
        return [(self.points[i], self.points[(i + 1) % n]) for i in range(n)]


Region = Union[Interval, Polygon]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _exact_region(r: Region) -> bool:
    return all(is_exact(x) for v in r.vertices() for x in v)


def make_region(spec) -> Region:
    if isinstance(spec, (Interval, Polygon)):
        return spec
    if len(spec) == 2 and not isinstance(spec[0], (list, tuple)):
        return Interval(to_scalar(spec[0]), to_scalar(spec[1]))
    return Polygon(tuple(tuple(to_scalar(x) for x in p) for p in spec))


def image_region(m: SimilarityMap, region: Region) -> Region:
    if not m.is_similarity:
        raise NotSimilarity("exact images are only polygonal under similarities")
    if isinstance(region, Interval):
        if m.dim != 1:
            raise UnsupportedDimension("interval regions need a 1D map")
        a, b = m.apply_exact((region.a,))[0], m.apply_exact((region.b,))[0]
        return Interval(min(a, b), max(a, b))
    if m.dim != 2:
        raise UnsupportedDimension("polygon regions need a 2D map")
    pts = [m.apply_exact(p) for p in region.points]
    det = m.orthogonal[0][0] * m.orthogonal[1][1] - m.orthogonal[0][1] * m.orthogonal[1][0]
    if det < 0:
        # reflections flip orientation; restore counterclockwise order
        pts = [pts[0]] + pts[:0:-1]
    return Polygon(tuple(pts))


# --- convex predicates -------------------------------------------------------------

def _in_closed(point, region: Region, slack) -> bool:
    if isinstance(region, Interval):
        return region.a - slack <= point[0] <= region.b + slack
    return all(_cross(p, q, point) >= -slack * max(1.0, abs(float(_len2(p, q))) ** 0.5)
               for p, q in region.edges())


def _len2(p, q):
    return (q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2


def contained(inner: Region, outer: Region, slack=0) -> bool:
    """closure(inner) within closure(outer); for convex open sets this is
    equivalent to inner being contained in outer."""
    return all(_in_closed(v, outer, slack) for v in inner.vertices())


def interiors_overlap(r1: Region, r2: Region, slack=0) -> bool:
    """True when the open sets intersect (shared boundary does not count)."""
    if isinstance(r1, Interval):
        return min(r1.b, r2.b) - max(r1.a, r2.a) > slack
    # separating axis test over both polygons' edge normals
    for poly in (r1, r2):
        for p, q in poly.edges():
            n = (q[1] - p[1], p[0] - q[0])  # outward normal for CCW order
            a = [n[0] * v[0] + n[1] * v[1] for v in r1.points]
            b = [n[0] * v[0] + n[1] * v[1] for v in r2.points]
            scale = max(1.0, float(_len2(p, q)) ** 0.5)
            if max(a) <= min(b) + slack * scale or max(b) <= min(a) + slack * scale:
                return False
    return True


def signed_depth(points: np.ndarray, region: Region) -> np.ndarray:
    """Distance to the boundary, positive inside the open region, negative outside."""
    pts = np.asarray(points, dtype=float)
    if isinstance(region, Interval):
        x = pts[:, 0]
        return np.minimum(x - float(region.a), float(region.b) - x)
    depth = np.full(len(pts), np.inf)
    for p, q in region.edges():
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = q - p
        n = np.array([-d[1], d[0]]) / np.hypot(*d)  # inward normal for CCW order
        depth = np.minimum(depth, (pts - p) @ n)
    return depth


# --- reports -----------------------------------------------------------------------

@dataclass
class Condition:
    holds: bool | None = None
    witness: object = None
    note: str = ""


@dataclass
class OSCReport:
    condition_i: Condition = field(default_factory=Condition)
    condition_ii: Condition = field(default_factory=Condition)
    condition_iii: Condition = field(default_factory=Condition)
    condition_iv: Condition = field(default_factory=Condition)
    exact: bool = True

    @property
    def gdiosc(self) -> bool:
        return bool(self.condition_i.holds and self.condition_ii.holds and self.condition_iii.holds)

    @property
    def gdisosc(self) -> bool:
        return self.gdiosc and bool(self.condition_iv.holds)

    def to_dict(self) -> dict:
        def c(x: Condition):
            return {"holds": x.holds, "witness": _jsonable(x.witness), "note": x.note}
        return {"condition_i": c(self.condition_i), "condition_ii": c(self.condition_ii),
                "condition_iii": c(self.condition_iii), "condition_iv": c(self.condition_iv),
                "gdiosc": self.gdiosc, "gdisosc": self.gdisosc, "exact_arithmetic": self.exact}


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _regions_for(sys: GDSystem, regions) -> list[Region]:
    regions = regions if regions is not None else sys.regions
    if regions is None:
        raise ValueError("no open regions supplied")
    if isinstance(regions, dict):
        regions = [regions[name] for name in sys.vertices]
    regions = [make_region(r) for r in regions]
    if len(regions) != sys.n:
        raise ValueError("one region per vertex is required")
    return regions


def check_gdiosc(sys: GDSystem, regions: Sequence | dict | None = None) -> OSCReport:
    """Conditions (i)-(iii): nested images, disjoint open images per initial
    vertex, condensation inside the closed regions."""
    if sys.dim not in (1, 2):
        raise UnsupportedDimension(f"open set checks support d = 1, 2 (got {sys.dim})")
    regs = _regions_for(sys, regions)
    exact = all(e.map.is_exact for e in sys.edges) and all(_exact_region(r) for r in regs)
    slack = 0 if exact else FLOAT_SLACK
    report = OSCReport(exact=exact)

    images = {e.id: image_region(e.map, regs[e.target]) for e in sys.edges}
    report.condition_i = Condition(True)
    for e in sys.edges:
        if not contained(images[e.id], regs[e.source], slack):
            report.condition_i = Condition(False, e.id, f"f_{e.id}(U_{sys.vertices[e.target]}) "
                                                        f"is not inside U_{sys.vertices[e.source]}")
            break

    report.condition_ii = Condition(True, note="disjointness checked per initial vertex")
    done = False
    for v in range(sys.n):
        out = sys.out_edges(v)
        for i, e in enumerate(out):
            for f in out[i + 1:]:
                if interiors_overlap(images[e.id], images[f.id], slack):
                    report.condition_ii = Condition(False, [e.id, f.id],
                                                    f"images under {e.id} and {f.id} overlap")
                    done = True
                    break
            if done:
                break
        if done:
            break

    report.condition_iii = Condition(True)
    for v, c in enumerate(sys.condensation):
        bad = next((x for p in c for x in p.vertices() if not _in_closed(x, regs[v], slack)), None)
        if bad is not None:
            w = bad[0] if sys.dim == 1 else list(bad)
            report.condition_iii = Condition(False, w, f"condensation point {_jsonable(w)} "
                                                       f"outside closure of U_{sys.vertices[v]}")
            break
    report.condition_iv = Condition(None, note="not evaluated")
    return report


def check_strong(sys: GDSystem, regions, clouds: dict[int, PointCloud] | Sequence[PointCloud],
                 base: OSCReport | None = None) -> OSCReport:
    """Condition (iv) by witness: a cloud point of F_j deeper than the cloud
    resolution inside U_j certifies ``U_j`` meets ``F_j``."""
    report = base if base is not None else check_gdiosc(sys, regions)
    if not report.gdiosc:
        report.condition_iv = Condition(None, note="conditions (i)-(iii) do not all hold")
        return report
    regs = _regions_for(sys, regions)
    clouds = clouds if isinstance(clouds, dict) else dict(enumerate(clouds))
    witnesses = []
    for v in range(sys.n):
        c = clouds[v]
        depth = signed_depth(c.points, regs[v])
        k = int(np.argmax(depth))
        if depth[k] > c.resolution:
            witnesses.append(c.points[k].tolist())
            continue
        if depth[k] < -c.resolution:
            report.condition_iv = Condition(False, sys.vertices[v],
                                            f"no point of F_{sys.vertices[v]} near U_{sys.vertices[v]}")
            return report
        raise InsufficientResolution(
            f"every cloud point at {sys.vertices[v]} is within {c.resolution} of the boundary")
    report.condition_iv = Condition(True, witnesses)
    return report
