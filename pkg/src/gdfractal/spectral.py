"""Ratio matrices, Perron-Frobenius data and the graph dimension.

``M(s)[i, j] = sum of rho_e**s`` over edges from vertex i to vertex j, and
``Phi(s)`` is the spectral radius of ``M(s)``.  The graph dimension is the
root of ``Phi(s) = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BracketFailure, ConvergenceFailure, NotIrreducible
from .model import GDSystem, _edge_ratio, cross_cut, is_exact

RADIUS_TOL = 1e-13
ROOT_TOL = 1e-9


@dataclass(frozen=True)
class RatioMatrix:
    entries: tuple[tuple, ...]
    s: float
    kind: str = "upper"

    @property
    def n(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)


@dataclass(frozen=True)
class PerronData:
    radius: float
    vector: np.ndarray
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class GraphDimension:
    value: float
    phi_at_value: float
    bracket: tuple[float, float]
    iterations: int
    kind: str = "upper"


def _power(rho, s):
    if is_exact(rho) and float(s).is_integer():
        return Fraction(rho) ** int(s)
    return float(rho) ** float(s)


def build_ratio_matrix(sys: GDSystem, s, kind: str = "upper") -> RatioMatrix:
    if s < 0:
        raise ValueError(f"exponent must be >= 0, got {s}")
    m = [[Fraction(0)] * sys.n for _ in range(sys.n)]
    for e in sys.edges:
        m[e.source][e.target] += _power(_edge_ratio(e, kind), s)
    return RatioMatrix(tuple(tuple(row) for row in m), s, kind)


def _as_array(M) -> np.ndarray:
    a = M.array() if isinstance(M, RatioMatrix) else np.asarray(M, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if (a < 0).any():
        raise ValueError("matrix must be nonnegative")
    return a


def _check_irreducible(a: np.ndarray) -> None:
    n = a.shape[0]
    if (a.sum(axis=1) == 0).any() or (a.sum(axis=0) == 0).any():
        raise NotIrreducible("matrix has a zero row or column")
    pattern = a > 0
    for adj in (pattern, pattern.T):
        seen = {0}
        todo = [0]
        while todo:
            i = todo.pop()
            for j in np.flatnonzero(adj[i]):
                if j not in seen:
                    seen.add(int(j))
                    todo.append(int(j))
        if len(seen) != n:
            raise NotIrreducible("nonzero pattern is not strongly connected")


def perron_vector(M, tol: float = RADIUS_TOL, max_iter: int = 200_000) -> PerronData:
    """Perron root and positive eigenvector (sum 1) of an irreducible matrix.

    Power iteration on ``M + c I`` with ``c`` the mean row sum, which makes
    the iteration matrix primitive even when ``M`` is periodic.  Stops when
    the Collatz-Wielandt bounds ``min (Mu)_i/u_i <= r <= max (Mu)_i/u_i``
    agree to ``tol`` relative.
    """
    a = _as_array(M)
    _check_irreducible(a)
    n = a.shape[0]
    if n == 1:
        return PerronData(float(a[0, 0]), np.ones(1), 0.0, 0)
    shift = a.sum() / n
    b = a + shift * np.eye(n)
    u = np.ones(n) / n
    for it in range(1, max_iter + 1):
        w = b @ u
        u = w / w.max()
        mu = a @ u
        q = mu / u
        lo, hi = q.min(), q.max()
        if hi - lo <= tol * hi:
            break
    else:
        raise ConvergenceFailure(
            f"power iteration did not converge in {max_iter} steps (near-reducible input?)")
    u = u / u.sum()
    r = 0.5 * (lo + hi)
    residual = float(np.abs(a @ u - r * u).max())
    return PerronData(float(r), u, residual, it)


def spectral_radius(M) -> float:
    return perron_vector(M).radius


def phi(sys: GDSystem, s: float, kind: str = "upper") -> float:
    return spectral_radius(build_ratio_matrix(sys, s, kind))


def graph_dimension(sys: GDSystem, kind: str = "upper", tol: float = 1e-15) -> GraphDimension:
    """Root of ``Phi(s) = 1`` by bisection (Phi is continuous, strictly decreasing)."""
    p0 = phi(sys, 0, kind)
    if p0 < 1 - 1e-12:
        raise BracketFailure(f"Phi(0) = {p0} < 1; the graph cannot carry an attractor")
    if p0 <= 1 + 1e-12:
        return GraphDimension(0.0, p0, (0.0, 0.0), 0, kind)
    lo, hi = 0.0, 1.0
    while phi(sys, hi, kind) >= 1:
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise BracketFailure("Phi(s) stays above 1; scales are not contractive")
    bracket = (lo, hi)
    it = 0
    while hi - lo > tol * max(1.0, hi) and it < 200:
        it += 1
        mid = 0.5 * (lo + hi)
        if phi(sys, mid, kind) >= 1:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    value = phi(sys, s, kind)
    if abs(value - 1) > ROOT_TOL:
        raise ConvergenceFailure(f"|Phi(s*) - 1| = {abs(value - 1):.3g} after bisection")
    return GraphDimension(s, value, bracket, it, kind)


@dataclass(frozen=True)
class CrossCutBound:
    bound: float
    cardinality: int
    holds: bool


def cross_cut_bound_check(sys: GDSystem, vertex, delta) -> CrossCutBound:
    """Compare |T_i| at scale delta with (delta*rho_min)^(-s*) * u_max/u_min."""
    cut = cross_cut(sys, vertex, delta, "upper")
    dim = graph_dimension(sys)
    u = perron_vector(build_ratio_matrix(sys, dim.value)).vector
    rho_min = min(float(e.map.scale) for e in sys.edges)
    bound = (float(delta) * rho_min) ** (-dim.value) * (u.max() / u.min())
    # slack for the floating Perron vector only
    return CrossCutBound(float(bound), len(cut), len(cut) <= bound * (1 + 1e-9))

