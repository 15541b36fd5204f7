"""Exact sampling of inhomogeneous graph-directed invariant measures.

A draw from ``mu_v`` runs the edge Markov chain from ``v``: at vertex j it
stops with probability ``p_j`` and draws ``x ~ lambda_j``, otherwise it takes
edge e with probability ``p^j_e`` and moves to t(e).  The draw is the
composition of the visited maps applied to x.

Randomness is split into fixed blocks of sample indices, each with its own
Philox stream keyed by ``(seed, vertex, block)``, so output does not depend
on how many worker threads generate the blocks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InsufficientSamples, InvalidScheme, NoCondensation
from .model import Box, CondensationSet, GDSystem, Point, Polyline, Segment

BLOCK = 4096
MAX_STEPS = 1_000_000


@dataclass(frozen=True)
class ProbabilityScheme:
    edge_weights: Mapping[str, float]
    condensation: tuple[float, ...]

    def validate(self, sys: GDSystem) -> None:
        if len(self.condensation) != sys.n:
            raise InvalidScheme("one condensation weight per vertex is required")
        unknown = set(self.edge_weights) - {e.id for e in sys.edges}
        if unknown:
            raise InvalidScheme(f"weights for unknown edges: {sorted(unknown)}")
        for v in range(sys.n):
            w = [self.edge_weights.get(e.id, 0.0) for e in sys.out_edges(v)]
            p = self.condensation[v]
            if min(w + [p]) < 0:
                raise InvalidScheme(f"negative weight at vertex {sys.vertices[v]}")
            if abs(sum(w) + p - 1) > 1e-9:
                raise InvalidScheme(f"weights at vertex {sys.vertices[v]} sum to {sum(w) + p}")
            if p > 0 and sys.condensation[v].is_empty:
                raise InvalidScheme(f"vertex {sys.vertices[v]} has p > 0 but no condensation set")
            if p == 0 and not sys.condensation[v].is_empty:
                raise InvalidScheme(f"vertex {sys.vertices[v]} has a condensation set but p = 0")
        stops = {v for v in range(sys.n) if self.condensation[v] > 0}
        if not stops:
            raise NoCondensation("every condensation weight is zero; the chain never stops")
        # every vertex must reach a stopping vertex along positive-weight edges
        ok = set(stops)
        changed = True
        while changed:
            changed = False
            for e in sys.edges:
                if e.source not in ok and e.target in ok and self.edge_weights.get(e.id, 0) > 0:
                    ok.add(e.source)
                    changed = True
        if len(ok) != sys.n:
            raise NoCondensation("some vertices cannot reach a stopping vertex")

    def options(self, sys: GDSystem, v: int) -> tuple[np.ndarray, list]:
        """Cumulative probabilities of [stop, edge_1, edge_2, ...] at vertex v."""
        out = sys.out_edges(v)
        probs = [self.condensation[v]] + [self.edge_weights.get(e.id, 0.0) for e in out]
        return np.cumsum(probs), list(out)


def uniform_scheme(sys: GDSystem, stop: float) -> ProbabilityScheme:
    """Equal edge weights with condensation weight ``stop`` at non-empty vertices."""
    weights, cond = {}, []
    for v in range(sys.n):
        p = stop if not sys.condensation[v].is_empty else 0.0
        out = sys.out_edges(v)
        for e in out:
            weights[e.id] = (1 - p) / len(out)
        cond.append(p)
    return ProbabilityScheme(weights, tuple(cond))


# --- condensation measures --------------------------------------------------------

def primitive_weight(p) -> float:
    """Mass of a primitive under the (unnormalized) condensation measure:
    1 for a point, length for segments and polylines, volume of the
    non-degenerate sides for boxes."""
    if isinstance(p, Point):
        return 1.0
    if isinstance(p, Segment):
        return p.length
    if isinstance(p, Polyline):
        return sum(s.length for s in p.segments())
    if isinstance(p, Box):
        sides = [float(h - l) for l, h in zip(p.lo, p.hi) if h > l]
        return float(np.prod(sides)) if sides else 1.0
    raise TypeError(f"unknown primitive {p!r}")


def _weights(C: CondensationSet) -> np.ndarray:
    w = np.array([primitive_weight(p) for p in C], dtype=float)
    if w.sum() == 0:
        w = np.ones(len(w))
    return w / w.sum()


def _draw_segment(a, b, u):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a + u[:, None] * (b - a)


def sample_condensation(C: CondensationSet, m: int, rng: np.random.Generator, dim: int) -> np.ndarray:
    """``m`` draws from the uniform measure on the primitives of ``C``."""
    w = _weights(C)
    which = rng.choice(len(w), size=m, p=w)
    u = rng.random((m, dim))
    out = np.empty((m, dim))
    for k, p in enumerate(C):
        sel = which == k
        if not sel.any():
            continue
        uk = u[sel]
        if isinstance(p, Point):
            out[sel] = np.asarray(p.at, dtype=float)
        elif isinstance(p, Segment):
            out[sel] = _draw_segment(p.a, p.b, uk[:, 0])
        elif isinstance(p, Box):
            lo = np.asarray(p.lo, dtype=float)
            out[sel] = lo + uk * (np.asarray(p.hi, dtype=float) - lo)
        else:
            segs = p.segments()
            lengths = np.array([s.length for s in segs])
            cum = np.cumsum(lengths) / lengths.sum()
            # one uniform picks the arc-length position along the whole polyline
            pos = uk[:, 0]
            j = np.minimum(np.searchsorted(cum, pos, side="right"), len(segs) - 1)
            start = np.concatenate([[0.0], cum[:-1]])
            local = (pos - start[j]) / (cum[j] - start[j])
            pts = np.empty((len(pos), dim))
            for s_idx, s in enumerate(segs):
                sj = j == s_idx
                pts[sj] = _draw_segment(s.a, s.b, local[sj])
            out[sel] = pts
    return out


def condensation_mass(C: CondensationSet, lo, hi) -> float:
    """lambda(B) for the closed box B = [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    w = _weights(C)
    total = 0.0
    for wk, p in zip(w, C):
        total += wk * _fraction_in_box(p, lo, hi)
    return total


def _segment_fraction(a, b, lo, hi) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t0, t1 = 0.0, 1.0
    for j in range(len(a)):
        d = b[j] - a[j]
        if d == 0:
            if not lo[j] <= a[j] <= hi[j]:
                return 0.0
            continue
        ta, tb = sorted(((lo[j] - a[j]) / d, (hi[j] - a[j]) / d))
        t0, t1 = max(t0, ta), min(t1, tb)
    return max(0.0, t1 - t0)


def _fraction_in_box(p, lo, hi) -> float:
    if isinstance(p, Point):
        x = np.asarray(p.at, dtype=float)
        return float(np.all((x >= lo) & (x <= hi)))
    if isinstance(p, Segment):
        return _segment_fraction(p.a, p.b, lo, hi)
    if isinstance(p, Polyline):
        segs = p.segments()
        lengths = np.array([s.length for s in segs])
        fr = np.array([_segment_fraction(s.a, s.b, lo, hi) for s in segs])
        return float((fr * lengths).sum() / lengths.sum())
    plo = np.asarray(p.lo, dtype=float)
    phi = np.asarray(p.hi, dtype=float)
    frac = 1.0
    for j in range(len(plo)):
        if phi[j] == plo[j]:
            frac *= float(lo[j] <= plo[j] <= hi[j])
        else:
            frac *= max(0.0, min(phi[j], hi[j]) - max(plo[j], lo[j])) / (phi[j] - plo[j])
    return frac


# --- sampling -------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureSample:
    vertex: int
    points: np.ndarray
    seed: int
    count: int


def _sample_block(sys: GDSystem, scheme: ProbabilityScheme, v0: int, n: int,
                  rng: np.random.Generator) -> np.ndarray:
    d = sys.dim
    opts = [scheme.options(sys, v) for v in range(sys.n)]
    mats = {e.id: e.map.matrix() for e in sys.edges}
    offs = {e.id: e.map.offset() for e in sys.edges}
    lin = np.tile(np.eye(d), (n, 1, 1))
    off = np.zeros((n, d))
    cur = np.full(n, v0, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    out = np.empty((n, d))
    steps = 0
    while active.any():
        steps += 1
        if steps > MAX_STEPS:
            raise NoCondensation("sampling chain failed to stop")
        idx = np.flatnonzero(active)
        u = rng.random(len(idx))
        for v in range(sys.n):
            here = cur[idx] == v
            if not here.any():
                continue
            iv = idx[here]
            cum, edges = opts[v]
            choice = np.minimum(np.searchsorted(cum, u[here] * cum[-1], side="right"), len(cum) - 1)
            stop = iv[choice == 0]
            if len(stop):
                x = sample_condensation(sys.condensation[v], len(stop), rng, d)
                out[stop] = np.einsum("mij,mj->mi", lin[stop], x) + off[stop]
                active[stop] = False
            for k, e in enumerate(edges, start=1):
                go = iv[choice == k]
                if not len(go):
                    continue
                off[go] += lin[go] @ offs[e.id]
                lin[go] = lin[go] @ mats[e.id]
                cur[go] = e.target
    return out


def sample_measure(sys: GDSystem, scheme: ProbabilityScheme, vertex, n: int, seed: int,
                   workers: int = 1) -> MeasureSample:
    scheme.validate(sys)
    v = sys.vertex_index(vertex)
    if n < 1:
        raise ValueError("need at least one sample")
    sizes = [min(BLOCK, n - k) for k in range(0, n, BLOCK)]

    def run(block: int) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, v, block])))
        return _sample_block(sys, scheme, v, sizes[block], rng)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return MeasureSample(v, np.vstack(parts), seed, n)


def mean_fixed_point(sys: GDSystem, scheme: ProbabilityScheme) -> np.ndarray:
    """Means of all ``mu_i`` from the affine first-moment equations
    ``E_i = sum_e p_e (A_e E_t(e) + b_e) + p_i m_i``."""
    d, n = sys.dim, sys.n
    a = np.eye(n * d)
    rhs = np.zeros(n * d)
    for e in sys.edges:
        p = scheme.edge_weights.get(e.id, 0.0)
        i, t = e.source, e.target
        a[i * d:(i + 1) * d, t * d:(t + 1) * d] -= p * e.map.matrix()
        rhs[i * d:(i + 1) * d] += p * e.map.offset()
    for i, c in enumerate(sys.condensation):
        if scheme.condensation[i] > 0:
            centers = np.array([_primitive_mean(p) for p in c])
            rhs[i * d:(i + 1) * d] += scheme.condensation[i] * (_weights(c) @ centers)
    return np.linalg.solve(a, rhs).reshape(n, d)


def _primitive_mean(p) -> np.ndarray:
    if isinstance(p, Point):
        return np.asarray(p.at, dtype=float)
    if isinstance(p, Segment):
        return 0.5 * (np.asarray(p.a, float) + np.asarray(p.b, float))
    if isinstance(p, Box):
        return 0.5 * (np.asarray(p.lo, float) + np.asarray(p.hi, float))
    segs = p.segments()
    lengths = np.array([s.length for s in segs])
    mids = np.array([_primitive_mean(s) for s in segs])
    return lengths @ mids / lengths.sum()


# --- invariance check ---------------------------------------------------------------

def _in_box(points: np.ndarray, lo, hi) -> np.ndarray:
    return np.all((points >= lo) & (points <= hi), axis=1)


def invariance_residual(samples: Mapping[int, np.ndarray | MeasureSample], sys: GDSystem,
                        scheme: ProbabilityScheme, probe_boxes: Sequence[tuple],
                        min_samples: int = 10_000) -> float:
    """max over probe boxes B and vertices i of
    |mu_i(B) - sum_e p_e mu_t(e)(f_e^-1 B) - p_i lambda_i(B)| with empirical mu."""
    pts = {}
    for v, s in samples.items():
        arr = s.points if isinstance(s, MeasureSample) else np.asarray(s, dtype=float)
        if len(arr) < min_samples:
            raise InsufficientSamples(f"vertex {v}: {len(arr)} samples < {min_samples}")
        pts[v] = arr.reshape(len(arr), sys.dim)
    for v in list(pts):
        for e in sys.out_edges(v):
            if e.target not in pts:
                raise InsufficientSamples(f"no samples for domain vertex {sys.vertices[e.target]}")
    images = {e.id: e.map(pts[e.target]) for v in pts for e in sys.out_edges(v)}
    worst = 0.0
    for lo, hi in probe_boxes:
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        for v in pts:
            lhs = _in_box(pts[v], lo, hi).mean()
            rhs = sum(scheme.edge_weights.get(e.id, 0.0) * _in_box(images[e.id], lo, hi).mean()
                      for e in sys.out_edges(v))
            if scheme.condensation[v] > 0:
                rhs += scheme.condensation[v] * condensation_mass(sys.condensation[v], lo, hi)
            worst = max(worst, abs(lhs - rhs))
    return float(worst)


def random_probe_boxes(points: np.ndarray, count: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic axis-aligned probe boxes inside the padded bounding box."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-9)
    lo, hi = lo - pad, hi + pad
    rng = np.random.default_rng(seed)
    boxes = []
    for _ in range(count):
        a, b = rng.random((2, len(lo)))
        boxes.append((lo + np.minimum(a, b) * (hi - lo), lo + np.maximum(a, b) * (hi - lo)))
    return boxes
