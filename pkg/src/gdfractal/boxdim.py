"""Grid box counting, exact counts for condensation primitives, log-log slope
estimates and covering regularity exponents.

Cells are the half-open boxes ``prod [k_j*delta, (k_j+1)*delta)`` anchored at
the origin.  Cell indices are computed as ``floor(x/delta)`` with quotients
within ``SNAP`` (relative) of an integer snapped to it, so points that sit on
a cell boundary in exact arithmetic land in the cell they belong to despite
float round-off.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .attractor import PointCloud
from .errors import EmptyCloud, InsufficientData
from .model import Box, CondensationSet, Point, Polyline, Segment

SNAP = 1e-9


def cell_index(x, delta: float) -> np.ndarray:
    q = np.asarray(x, dtype=float) / delta
    r = np.rint(q)
    q = np.where(np.abs(q - r) <= SNAP * np.maximum(1.0, np.abs(q)), r, q)
    return np.floor(q).astype(np.int64)


def _count_unique_rows(idx: np.ndarray) -> int:
    if idx.shape[1] == 1:
        return len(np.unique(idx[:, 0]))
    shifted = idx - idx.min(axis=0)
    span = shifted.max(axis=0) + 1
    if np.prod(span.astype(float)) < 2 ** 62:
        key = np.zeros(len(idx), dtype=np.int64)
        for j in range(idx.shape[1]):
            key = key * span[j] + shifted[:, j]
        return len(np.unique(key))
    return len(np.unique(idx, axis=0))


def count_boxes(cloud: PointCloud | np.ndarray, delta: float) -> int:
    """Number of occupied grid cells of side ``delta``."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise EmptyCloud("cannot count boxes of an empty cloud")
    if delta <= 0:
        raise ValueError("delta must be positive")
    return _count_unique_rows(cell_index(pts, delta))


@dataclass(frozen=True)
class BoxCountSeries:
    deltas: tuple[float, ...]
    counts: tuple[int, ...]
    source: str = "cloud"

    def __post_init__(self):
        if len(self.deltas) != len(self.counts):
            raise ValueError("deltas and counts differ in length")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ValueError("deltas must be strictly decreasing")

    def rows(self):
        return list(zip(self.deltas, self.counts))


def geometric_deltas(delta_max: float, delta_min: float, steps: int) -> tuple[float, ...]:
    if steps < 2:
        return (float(delta_max),)
    return tuple(float(x) for x in np.geomspace(delta_max, delta_min, steps))


def dyadic_deltas(k_min: int = 3, k_max: int = 14, base: float = 2.0) -> tuple[float, ...]:
    return tuple(float(base) ** -k for k in range(k_min, k_max + 1))


def box_count_series(cloud: PointCloud | np.ndarray, deltas: Sequence[float]) -> BoxCountSeries:
    return BoxCountSeries(tuple(float(d) for d in deltas),
                          tuple(count_boxes(cloud, d) for d in deltas), "cloud")


# --- exact counts of primitives --------------------------------------------------

@dataclass
class _CellSets:
    boxes: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)  # inclusive index ranges
    cells: list[np.ndarray] = field(default_factory=list)


def _segment_cells(a, b, delta: float) -> np.ndarray:
    """Cells met by the closed segment [a, b]: endpoints, every grid-plane
    crossing point and the midpoints between consecutive crossings."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ts = [np.array([0.0, 1.0])]
    for j in range(len(a)):
        if a[j] == b[j]:
            continue
        lo, hi = sorted((a[j], b[j]))
        ks = np.arange(math.ceil(lo / delta - SNAP), math.floor(hi / delta + SNAP) + 1)
        ts.append(np.clip((ks * delta - a[j]) / (b[j] - a[j]), 0.0, 1.0))
    t = np.unique(np.concatenate(ts))
    t = np.concatenate([t, 0.5 * (t[1:] + t[:-1])])
    pts = a + t[:, None] * (b - a)
    # crossing points lie on cell faces; snap them along the crossed axis
    return np.unique(cell_index(pts, delta), axis=0)


def _add_primitive(acc: _CellSets, p, delta: float) -> None:
    if isinstance(p, Point):
        i = cell_index(np.asarray(p.at, dtype=float), delta)
        acc.boxes.append((i, i))
    elif isinstance(p, Box):
        acc.boxes.append((cell_index(np.asarray(p.lo, float), delta),
                          cell_index(np.asarray(p.hi, float), delta)))
    elif isinstance(p, Segment):
        a = np.asarray(p.a, dtype=float)
        b = np.asarray(p.b, dtype=float)
        if np.count_nonzero(a != b) <= 1:
            lo, hi = np.minimum(a, b), np.maximum(a, b)
            acc.boxes.append((cell_index(lo, delta), cell_index(hi, delta)))
        else:
            acc.cells.append(_segment_cells(a, b, delta))
    elif isinstance(p, Polyline):
        for s in p.segments():
            _add_primitive(acc, s, delta)
    else:
        raise TypeError(f"unknown primitive {p!r}")


def _box_volume(lo, hi) -> int:
    return int(np.prod((hi - lo + 1).astype(object))) if np.all(hi >= lo) else 0


def _union_volume(boxes) -> int:
    """Cell count of a union of index boxes by inclusion-exclusion."""
    total = 0
    for r in range(1, len(boxes) + 1):
        for combo in itertools.combinations(boxes, r):
            lo = np.max([b[0] for b in combo], axis=0)
            hi = np.min([b[1] for b in combo], axis=0)
            total += (-1) ** (r + 1) * _box_volume(lo, hi)
    return total


def analytic_count(C: CondensationSet, delta: float) -> int:
    """Exact number of grid cells met by the union of the primitives of ``C``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if C.is_empty:
        return 0
    acc = _CellSets()
    for p in C:
        _add_primitive(acc, p, delta)
    boxes = acc.boxes
    if len(boxes) > 12:
        # fall back to explicit enumeration when inclusion-exclusion explodes
        grids = [np.stack(np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)],
                                      indexing="ij"), -1).reshape(-1, len(lo)) for lo, hi in boxes]
        acc.cells.extend(grids)
        boxes = []
    count = _union_volume(boxes)
    if acc.cells:
        cells = np.unique(np.vstack(acc.cells), axis=0)
        inside = np.zeros(len(cells), dtype=bool)
        for lo, hi in boxes:
            inside |= np.all((cells >= lo) & (cells <= hi), axis=1)
        count += int((~inside).sum())
    return int(count)


def analytic_series(C: CondensationSet, deltas: Sequence[float]) -> BoxCountSeries:
    return BoxCountSeries(tuple(float(d) for d in deltas),
                          tuple(analytic_count(C, d) for d in deltas), "analytic")


# --- slopes ----------------------------------------------------------------------

@dataclass(frozen=True)
class DimEstimate:
    slope_global: float
    slope_upper: float
    slope_lower: float
    window: int
    r2: float
    window_slopes: tuple[float, ...] = ()


def _slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if np.ptp(y) == 0:
        return 0.0, 1.0
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.rvalue ** 2)


def estimate_dims(series: BoxCountSeries, window: int = 4) -> DimEstimate:
    """OLS slope of log N against log(1/delta), plus max/min slopes over sliding
    windows of ``window`` consecutive points in the finest half of the series
    (finite-range proxies for the upper and lower box dimensions)."""
    n = len(series.deltas)
    if window < 2:
        raise ValueError("window must be at least 2")
    if n < window + 1:
        raise InsufficientData(f"need at least {window + 1} scales, got {n}")
    x = -np.log(np.asarray(series.deltas, dtype=float))
    y = np.log(np.asarray(series.counts, dtype=float))
    slope, r2 = _slope(x, y)
    start = min(n // 2, n - window)
    windows = tuple(_slope(x[i:i + window], y[i:i + window])[0]
                    for i in range(start, n - window + 1))
    return DimEstimate(slope, max(windows), min(windows), window, r2, windows)


# --- covering regularity exponents --------------------------------------------------

@dataclass(frozen=True)
class CREEstimate:
    t: float
    deltas: tuple[float, ...]
    values: tuple[float, ...]
    p_t: float


def cre(C: CondensationSet, t: float, delta: float, p_grid: int = 256) -> float:
    """sup of p in {0, 1/p_grid, ..., 1} with N_{delta^p}(C) >= delta^(-p t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if p_grid < 64:
        raise ValueError("p_grid must be at least 64")
    best = 0.0
    inv = 1.0 / float(delta)
    for k in range(p_grid + 1):
        p = k / p_grid
        need = inv ** (p * t)
        if analytic_count(C, float(delta) ** p) >= need * (1 - 1e-12):
            best = p
    return best


def cre_profile(C: CondensationSet, t: float, deltas: Sequence[float], p_grid: int = 256) -> CREEstimate:
    deltas = tuple(float(d) for d in deltas)
    if len(deltas) < 4:
        raise InsufficientData("need at least 4 scales for a t-CRE estimate")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly decreasing")
    values = tuple(cre(C, t, d, p_grid) for d in deltas)
    tail = values[len(values) // 2:]
    return CREEstimate(float(t), deltas, values, min(tail))


def pt_estimate(C: CondensationSet, t: float, deltas: Sequence[float], p_grid: int = 256) -> float:
    """liminf proxy for the t-CRE: minimum over the finest half of ``deltas``."""
    return cre_profile(C, t, deltas, p_grid).p_t
