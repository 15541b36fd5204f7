"""Graph-directed systems: vertices, edges carrying contractions, condensation
sets, path algebra and cross-cut enumeration.

Edges point from ``source`` = i(e) (the vertex whose set receives the image)
to ``target`` = t(e) (the domain vertex), so ``f_e`` maps the space of
``target`` into the space of ``source``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import InvalidDelta, NonComposablePath

Scalar = Union[Fraction, float]


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


def to_scalar(x) -> Scalar:
    """Coerce ints/strings/Decimals to Fraction; leave floats alone."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    # decimal.Decimal and friends
    return Fraction(x)


def _matmul(a, b):
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0])))
        for i in range(len(a))
    )


def _matvec(a, v):
    return tuple(sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a)))


def _exact_cos_sin(deg: Scalar) -> tuple[Scalar, Scalar]:
    if is_exact(deg) and Fraction(deg) % 90 == 0:
        q = int(Fraction(deg) / 90) % 4
        return [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)),
                (Fraction(-1), Fraction(0)), (Fraction(0), Fraction(-1))][q]
    rad = math.radians(float(deg))
    return math.cos(rad), math.sin(rad)


@dataclass(frozen=True)
class SimilarityMap:
    """Affine contraction ``x -> scale * orthogonal @ x + translation``.

    ``lower_scale`` is a declared lower Lipschitz ratio; it equals ``scale``
    for a similarity and only enters the lower-ratio dimension s'.
    Entries stay as ``Fraction`` when every input is rational.
    """

    dim: int
    scale: Scalar
    orthogonal: tuple[tuple[Scalar, ...], ...]
    translation: tuple[Scalar, ...]
    lower_scale: Scalar

    @classmethod
    def build(cls, dim: int, scale, translation=None, rotation_deg=0,
              reflect: bool = False, orthogonal=None, lower_scale=None) -> "SimilarityMap":
        if dim not in (1, 2, 3):
            raise ValueError(f"ambient dimension must be 1, 2 or 3, got {dim}")
        scale = to_scalar(scale)
        lower = scale if lower_scale is None else to_scalar(lower_scale)
        b = tuple(to_scalar(t) for t in (translation if translation is not None else [0] * dim))
        if len(b) != dim:
            raise ValueError(f"translation has {len(b)} components, expected {dim}")
        if orthogonal is not None:
            o = tuple(tuple(to_scalar(v) for v in row) for row in orthogonal)
            if len(o) != dim or any(len(row) != dim for row in o):
                raise ValueError(f"orthogonal part must be {dim}x{dim}")
            gram = np.asarray(o, dtype=float) @ np.asarray(o, dtype=float).T
            if not np.allclose(gram, np.eye(dim), atol=1e-9):
                raise ValueError("orthogonal part is not orthonormal")
        elif dim == 1:
            o = ((Fraction(-1 if reflect else 1),),)
        elif dim == 2:
            c, s = _exact_cos_sin(to_scalar(rotation_deg))
            flip = -1 if reflect else 1
            # rotation after an optional reflection in the x-axis
            o = ((c, -s * flip), (s, c * flip))
        else:
            if rotation_deg or reflect:
                raise ValueError("3D maps take an explicit orthogonal table")
            o = tuple(tuple(Fraction(int(i == j)) for j in range(3)) for i in range(3))
        return cls(dim, scale, o, b, lower)

    @property
    def is_similarity(self) -> bool:
        return self.lower_scale == self.scale

    @property
    def linear(self) -> tuple[tuple[Scalar, ...], ...]:
        return tuple(tuple(self.scale * v for v in row) for row in self.orthogonal)

    @property
    def is_exact(self) -> bool:
        return all(is_exact(v) for row in self.orthogonal for v in row) and \
            is_exact(self.scale) and all(is_exact(v) for v in self.translation)

    def matrix(self) -> np.ndarray:
        return np.asarray(self.linear, dtype=float)

    def offset(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)

    def __call__(self, points) -> np.ndarray:
        """Apply to an ``(n, d)`` array (or a single point) in floating point."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = pts.reshape(-1, self.dim)
        out = pts @ self.matrix().T + self.offset()
        return out[0] if single else out

    def apply_exact(self, point: Sequence) -> tuple:
        return tuple(a + b for a, b in zip(_matvec(self.linear, tuple(point)), self.translation))

    def compose(self, inner: "SimilarityMap") -> "SimilarityMap":
        """Return ``self o inner``."""
        o = _matmul(self.orthogonal, inner.orthogonal)
        b = tuple(a + c for a, c in zip(_matvec(self.linear, inner.translation), self.translation))
        return SimilarityMap(self.dim, self.scale * inner.scale, o, b,
                             self.lower_scale * inner.lower_scale)

    def fixed_point(self) -> np.ndarray:
        return np.linalg.solve(np.eye(self.dim) - self.matrix(), self.offset())


@dataclass(frozen=True)
class Edge:
    id: str
    source: int
    target: int
    map: SimilarityMap


# --- condensation primitives -------------------------------------------------

@dataclass(frozen=True)
class Point:
    at: tuple[Scalar, ...]

    def vertices(self):
        return [self.at]


@dataclass(frozen=True)
class Segment:
    a: tuple[Scalar, ...]
    b: tuple[Scalar, ...]

    def vertices(self):
        return [self.a, self.b]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.asarray(self.b, float) - np.asarray(self.a, float)))


@dataclass(frozen=True)
class Box:
    lo: tuple[Scalar, ...]
    hi: tuple[Scalar, ...]

    def __post_init__(self):
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box has min > max")

    def vertices(self):
        corners = [()]
        for l, h in zip(self.lo, self.hi):
            corners = [c + (v,) for c in corners for v in ((l, h) if l != h else (l,))]
        return corners


@dataclass(frozen=True)
class Polyline:
    points: tuple[tuple[Scalar, ...], ...]

    def vertices(self):
        return list(self.points)

    def segments(self) -> list[Segment]:
        return [Segment(a, b) for a, b in zip(self.points, self.points[1:])]


Primitive = Union[Point, Segment, Box, Polyline]


@dataclass(frozen=True)
class CondensationSet:
    """Finite union of compact primitives; empty means the homogeneous case."""

    primitives: tuple[Primitive, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.primitives

    def __iter__(self) -> Iterator[Primitive]:
        return iter(self.primitives)

    def __len__(self) -> int:
        return len(self.primitives)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray([v for p in self.primitives for v in p.vertices()], dtype=float)
        return pts.min(axis=0), pts.max(axis=0)


# --- the system ----------------------------------------------------------------

@dataclass(frozen=True)
class GDSystem:
    dim: int
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    condensation: tuple[CondensationSet, ...] = ()
    regions: tuple | None = None
    probabilities: object | None = None
    _out: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.condensation:
            object.__setattr__(self, "condensation",
                               tuple(CondensationSet() for _ in self.vertices))
        out = [[] for _ in self.vertices]
        for e in self.edges:
            if 0 <= e.source < len(self.vertices):
                out[e.source].append(e)
        object.__setattr__(self, "_out", tuple(tuple(x) for x in out))

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def is_homogeneous(self) -> bool:
        return all(c.is_empty for c in self.condensation)

    def out_edges(self, v: int) -> tuple[Edge, ...]:
        return self._out[v]

    def edge(self, edge_id: str) -> Edge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def vertex_index(self, v: int | str) -> int:
        if isinstance(v, str):
            return self.vertices.index(v)
        if not 0 <= v < self.n:
            raise IndexError(f"vertex {v} out of range [0, {self.n})")
        return v

    def scales(self, kind: str = "upper") -> list[Scalar]:
        return [_edge_ratio(e, kind) for e in self.edges]


def _edge_ratio(e: Edge, kind: str) -> Scalar:
    if kind == "upper":
        return e.map.scale
    if kind == "lower":
        return e.map.lower_scale
    raise ValueError(f"ratio kind must be 'upper' or 'lower', got {kind!r}")


# --- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, kind: str, message: str) -> None:
        self.violations.append(Violation(kind, message))


def _reachable(sys: GDSystem, start: int, reverse: bool = False) -> set[int]:
    adj = [[] for _ in range(sys.n)]
    for e in sys.edges:
        if reverse:
            adj[e.target].append(e.source)
        else:
            adj[e.source].append(e.target)
    seen, todo = {start}, [start]
    while todo:
        for w in adj[todo.pop()]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def validate_system(sys: GDSystem) -> ValidationReport:
    report = ValidationReport()
    if sys.n < 1:
        report.add("empty", "system has no vertices")
        return report
    if len(set(sys.vertices)) != sys.n:
        report.add("duplicate-vertex", "vertex names are not unique")
    ids = [e.id for e in sys.edges]
    if len(set(ids)) != len(ids):
        report.add("duplicate-edge", "edge ids are not unique")
    for e in sys.edges:
        for end in (e.source, e.target):
            if not 0 <= end < sys.n:
                report.add("unknown-vertex", f"edge {e.id} references vertex {end}")
        if e.map.dim != sys.dim:
            report.add("dimension-mismatch",
                       f"edge {e.id} map acts on R^{e.map.dim}, system is R^{sys.dim}")
        if not 0 < e.map.scale < 1:
            report.add("non-contraction", f"edge {e.id} has scale {e.map.scale} outside (0, 1)")
        if not 0 < e.map.lower_scale:
            report.add("bad-lower-scale", f"edge {e.id} has lower scale {e.map.lower_scale} <= 0")
        if e.map.lower_scale > e.map.scale:
            report.add("lower-exceeds-upper",
                       f"edge {e.id} lower scale {e.map.lower_scale} > scale {e.map.scale}")
    if len(sys.condensation) != sys.n:
        report.add("condensation-count", "one condensation set per vertex is required")
    for v, c in enumerate(sys.condensation):
        for p in c:
            if any(len(x) != sys.dim for x in p.vertices()):
                report.add("dimension-mismatch",
                           f"condensation primitive at {sys.vertices[v]} is not in R^{sys.dim}")
    if any(r.kind == "unknown-vertex" for r in report.violations):
        return report
    for v in range(sys.n):
        if not sys.out_edges(v):
            report.add("no-outgoing-edge", f"vertex {sys.vertices[v]} has no outgoing edge")
    if len(_reachable(sys, 0)) != sys.n or len(_reachable(sys, 0, reverse=True)) != sys.n:
        report.add("not-strongly-connected", "not strongly connected")
    return report


# --- paths ---------------------------------------------------------------------

@dataclass(frozen=True)
class PathCode:
    edges: tuple[str, ...]
    ratio: Scalar
    lower_ratio: Scalar
    start: int
    end: int

    @classmethod
    def from_edges(cls, sys: GDSystem, edge_ids: Sequence[str]) -> "PathCode":
        if not edge_ids:
            raise NonComposablePath("a path needs at least one edge")
        edges = [sys.edge(i) for i in edge_ids]
        for a, b in zip(edges, edges[1:]):
            if a.target != b.source:
                raise NonComposablePath(
                    f"t({a.id}) = {sys.vertices[a.target]} but i({b.id}) = {sys.vertices[b.source]}")
        ratio, lower = Fraction(1), Fraction(1)
        for e in edges:
            ratio *= e.map.scale
            lower *= e.map.lower_scale
        return cls(tuple(edge_ids), ratio, lower, edges[0].source, edges[-1].target)

    def __len__(self) -> int:
        return len(self.edges)

    def parent(self, sys: GDSystem) -> "PathCode | None":
        """e^- : the path with its last edge removed (None for single edges)."""
        if len(self.edges) == 1:
            return None
        last = sys.edge(self.edges[-1]).map
        return PathCode(self.edges[:-1], self.ratio / last.scale,
                        self.lower_ratio / last.lower_scale, self.start,
                        sys.edge(self.edges[-2]).target)

    def is_prefix_of(self, other: "PathCode") -> bool:
        return len(self.edges) < len(other.edges) and other.edges[:len(self.edges)] == self.edges


def compose_path(path: PathCode | Sequence[str], sys: GDSystem) -> SimilarityMap:
    """``f_{e_1} o f_{e_2} o ... o f_{e_k}``."""
    ids = path.edges if isinstance(path, PathCode) else tuple(path)
    if not isinstance(path, PathCode):
        PathCode.from_edges(sys, ids)  # composability check
    else:
        for a, b in zip(ids, ids[1:]):
            if sys.edge(a).target != sys.edge(b).source:
                raise NonComposablePath(f"{a} -> {b} is not composable")
    m = sys.edge(ids[0]).map
    for i in ids[1:]:
        m = m.compose(sys.edge(i).map)
    return m


def cross_cut(sys: GDSystem, vertex: int | str, delta, ratio_kind: str = "upper") -> list[PathCode]:
    """Paths e from ``vertex`` with ratio(e) < delta <= ratio(e^-).

    The empty prefix has ratio 1.  Output is in depth-first order following
    edge declaration order, which is deterministic.
    """
    delta = to_scalar(delta)
    if not 0 < delta <= 1:
        raise InvalidDelta(f"delta must lie in (0, 1], got {delta}")
    if isinstance(delta, float) and all(is_exact(_edge_ratio(e, ratio_kind)) for e in sys.edges):
        # a float like 0.05 means 1/20; compare exact ratios against its decimal value
        delta = Fraction(repr(delta))
    v0 = sys.vertex_index(vertex)
    rmax = max(_edge_ratio(e, ratio_kind) for e in sys.edges)
    cutoff = max(1, math.ceil(math.log(delta) / math.log(rmax))) if delta < 1 else 1
    out: list[PathCode] = []
    # stack of (edge ids, ratio, lower ratio, end vertex); reversed push keeps DFS order
    stack = [((e.id,), e.map.scale, e.map.lower_scale, e.target)
             for e in reversed(sys.out_edges(v0))]
    while stack:
        ids, r, lr, end = stack.pop()
        key = r if ratio_kind == "upper" else lr
        if key < delta:
            out.append(PathCode(ids, r, lr, v0, end))
            continue
        assert len(ids) <= cutoff + 1, "cross-cut expansion exceeded its cutoff length"
        for e in reversed(sys.out_edges(end)):
            stack.append((ids + (e.id,), r * e.map.scale, lr * e.map.lower_scale, e.target))
    return out


def first_cycle(sys: GDSystem, v: int) -> tuple[str, ...]:
    """Shortest cycle through ``v``; ties broken by edge declaration order."""
    queue = deque([(e.target, (e.id,)) for e in sys.out_edges(v)])
    seen: set[int] = set()
    while queue:
        w, ids = queue.popleft()
        if w == v:
            return ids
        if w in seen:
            continue
        seen.add(w)
        queue.extend((e.target, ids + (e.id,)) for e in sys.out_edges(w))
    raise ValueError(f"vertex {sys.vertices[v]} lies on no cycle")
