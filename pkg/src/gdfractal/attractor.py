"""Finite point clouds approximating homogeneous attractors, orbital sets and
inhomogeneous attractors.

Generation is deterministic path expansion: every path from the vertex is
extended edge by edge until its ratio drops below the resolution, so the
cut paths form a cross-cut and their images cover the attractor at that
scale.  No random iteration is involved.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.spatial import cKDTree

from .errors import HomogeneousSystem, InvalidDelta
from .model import Box, CondensationSet, GDSystem, Point, Polyline, Segment, compose_path, first_cycle

ROLES = ("homogeneous", "orbital", "inhomogeneous", "condensation")


@dataclass(frozen=True)
class PointCloud:
    vertex: int | None
    resolution: float
    points: np.ndarray
    role: str

    def __len__(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def unique_rows(points: np.ndarray) -> np.ndarray:
    """Sorted distinct rows; a canonical, order-independent set representation."""
    if len(points) == 0:
        return points
    return np.unique(points, axis=0)


# --- condensation sampling -----------------------------------------------------

def _sample_segment(a, b, spacing: float) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = int(np.ceil(np.linalg.norm(b - a) / spacing - 1e-12)) + 1
    t = np.linspace(0.0, 1.0, max(n, 2) if np.any(a != b) else 1)
    return a + t[:, None] * (b - a)


def _sample_box(lo, hi, spacing: float) -> np.ndarray:
    axes = []
    for l, h in zip(np.asarray(lo, float), np.asarray(hi, float)):
        n = int(np.ceil((h - l) / spacing - 1e-12)) + 1 if h > l else 1
        axes.append(np.linspace(l, h, n))
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def sample_primitive(p, spacing: float) -> np.ndarray:
    if isinstance(p, Point):
        return np.asarray([p.at], dtype=float)
    if isinstance(p, Segment):
        return _sample_segment(p.a, p.b, spacing)
    if isinstance(p, Box):
        return _sample_box(p.lo, p.hi, spacing)
    if isinstance(p, Polyline):
        return np.vstack([_sample_segment(s.a, s.b, spacing) for s in p.segments()])
    raise TypeError(f"unknown primitive {p!r}")


def condensation_samples(C: CondensationSet, spacing: float, dim: int | None = None,
                         vertex: int | None = None) -> PointCloud:
    """Samples with every point of every primitive within ``spacing`` of one of them.

    An empty condensation set yields an empty cloud (the homogeneous case).
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if C.is_empty:
        d = dim if dim is not None else 1
        return PointCloud(vertex, spacing, np.empty((0, d)), "condensation")
    pts = unique_rows(np.vstack([sample_primitive(p, spacing) for p in C]))
    return PointCloud(vertex, spacing, pts, "condensation")


# --- path expansion ------------------------------------------------------------

TIE = 1e-12


@dataclass
class _Paths:
    linear: np.ndarray   # (m, d, d)
    offset: np.ndarray   # (m, d)
    end: np.ndarray      # (m,) terminal vertex t(e)
    ratio: np.ndarray    # (m,)

    def __len__(self):
        return len(self.end)

    def take(self, mask) -> "_Paths":
        return _Paths(self.linear[mask], self.offset[mask], self.end[mask], self.ratio[mask])

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Apply path i to pts[i]."""
        return np.einsum("mij,mj->mi", self.linear, pts) + self.offset


def _expand(sys: GDSystem, vertex: int, eps: float) -> Iterator[tuple[_Paths, _Paths]]:
    """Yield ``(alive, cut)`` per path length: alive have ratio > eps, cut have
    ratio <= eps with parent ratio > eps.

    Unlike ``cross_cut`` a path of ratio exactly eps stops here: every piece of
    the cloud then has relative diameter at most eps.  Float products of exact
    ratios are matched with a relative tolerance of ``TIE``.
    """
    d = sys.dim
    mats = [e.map.matrix() for e in sys.edges]
    offs = [e.map.offset() for e in sys.edges]
    scales = [float(e.map.scale) for e in sys.edges]
    out = sys.out_edges(vertex)
    idx = [sys.edges.index(e) for e in out]
    paths = _Paths(np.stack([mats[i] for i in idx]).reshape(-1, d, d),
                   np.stack([offs[i] for i in idx]).reshape(-1, d),
                   np.array([e.target for e in out], dtype=np.int64),
                   np.array([scales[i] for i in idx]))
    while len(paths):
        cut = paths.ratio <= eps * (1 + TIE)
        alive = paths.take(~cut)
        yield alive, paths.take(cut)
        parts = []
        for k, e in enumerate(sys.edges):
            sel = alive.end == e.source
            if not sel.any():
                continue
            p = alive.take(sel)
            parts.append(_Paths(p.linear @ mats[k], p.offset + p.linear @ offs[k],
                                np.full(len(p), e.target, dtype=np.int64), p.ratio * scales[k]))
        if not parts:
            break
        paths = _Paths(*(np.concatenate([getattr(p, f) for p in parts])
                         for f in ("linear", "offset", "end", "ratio")))


def seed_points(sys: GDSystem) -> np.ndarray:
    """Per vertex, the fixed point of the composed map of its first cycle.

    That fixed point lies in the homogeneous attractor of the vertex.
    """
    return np.stack([compose_path(first_cycle(sys, v), sys).fixed_point() for v in range(sys.n)])


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise InvalidDelta(f"resolution must lie in (0, 1), got {eps}")


def homogeneous_cloud(sys: GDSystem, vertex, eps: float) -> PointCloud:
    _check_eps(eps)
    v = sys.vertex_index(vertex)
    seeds = seed_points(sys)
    chunks = [cut.apply(seeds[cut.end]) for _, cut in _expand(sys, v, eps) if len(cut)]
    return PointCloud(v, eps, unique_rows(np.vstack(chunks)), "homogeneous")


def _orbital_points(sys: GDSystem, v: int, eps: float, spacing: float) -> np.ndarray:
    seeds = seed_points(sys)
    # representative for pruned tails: a condensation point of the domain vertex
    reps = np.array([np.asarray(c.primitives[0].vertices()[0], dtype=float)
                     if not c.is_empty else seeds[j] for j, c in enumerate(sys.condensation)])
    chunks = []
    own = sys.condensation[v]
    if not own.is_empty:
        chunks.append(condensation_samples(own, spacing).points)
    for alive, cut in _expand(sys, v, eps):
        if len(cut):
            chunks.append(cut.apply(reps[cut.end]))
        if not len(alive):
            continue
        # resample each domain set so that image spacing stays near ``spacing``
        keys = np.stack([alive.end.astype(float), alive.ratio], axis=1)
        groups, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        for g, (end, ratio) in enumerate(groups):
            c = sys.condensation[int(end)]
            if c.is_empty:
                continue
            samples = condensation_samples(c, spacing / ratio).points
            p = alive.take(inverse == g)
            img = np.einsum("mij,kj->mki", p.linear, samples) + p.offset[:, None, :]
            chunks.append(img.reshape(-1, sys.dim))
    return np.vstack(chunks)


def orbital_cloud(sys: GDSystem, vertex, eps: float, spacing: float | None = None) -> PointCloud:
    _check_eps(eps)
    if sys.is_homogeneous:
        raise HomogeneousSystem("every condensation set is empty; the orbital set is empty")
    v = sys.vertex_index(vertex)
    spacing = eps / 2 if spacing is None else spacing
    return PointCloud(v, eps, unique_rows(_orbital_points(sys, v, eps, spacing)), "orbital")


def inhomogeneous_cloud(sys: GDSystem, vertex, eps: float, spacing: float | None = None) -> PointCloud:
    hom = homogeneous_cloud(sys, vertex, eps)
    if sys.is_homogeneous:
        return PointCloud(hom.vertex, eps, hom.points, "inhomogeneous")
    orb = orbital_cloud(sys, vertex, eps, spacing)
    return PointCloud(hom.vertex, eps, unique_rows(np.vstack([hom.points, orb.points])),
                      "inhomogeneous")


def cloud(sys: GDSystem, vertex, eps: float, kind: str = "inhomogeneous",
          spacing: float | None = None) -> PointCloud:
    if kind == "homogeneous":
        return homogeneous_cloud(sys, vertex, eps)
    if kind == "orbital":
        return orbital_cloud(sys, vertex, eps, spacing)
    if kind == "inhomogeneous":
        return inhomogeneous_cloud(sys, vertex, eps, spacing)
    if kind == "condensation":
        v = sys.vertex_index(vertex)
        return condensation_samples(sys.condensation[v], spacing or eps / 2, sys.dim, v)
    raise ValueError(f"unknown cloud kind {kind!r}")


# --- diagnostics -----------------------------------------------------------------

def hausdorff_one_sided(a: np.ndarray, b: np.ndarray) -> float:
    """sup over x in a of dist(x, b)."""
    if len(a) == 0:
        return 0.0
    d, _ = cKDTree(b).query(a)
    return float(d.max())


def self_similarity_residual(sys: GDSystem, clouds: dict[int, PointCloud], vertex: int,
                             spacing: float | None = None) -> float:
    """One-sided distance from ``clouds[vertex]`` to the union of edge images of the
    clouds at the domain vertices (plus condensation samples)."""
    images = [e.map(clouds[e.target].points) for e in sys.out_edges(vertex)]
    c = sys.condensation[vertex]
    if not c.is_empty:
        images.append(condensation_samples(c, spacing or clouds[vertex].resolution / 2).points)
    return hausdorff_one_sided(clouds[vertex].points, np.vstack(images))
