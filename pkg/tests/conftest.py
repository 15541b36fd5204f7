from fractions import Fraction

import numpy as np
import pytest

from gdfractal.model import Box, CondensationSet, Edge, GDSystem, Point, Segment, SimilarityMap


def make_system(edges, vertices=("v",), dim=1, condensation=None, regions=None, probabilities=None):
    """edges: (id, source name, target name, scale[, translation[, lower]])"""
    index = {v: i for i, v in enumerate(vertices)}
    built = []
    for spec in edges:
        eid, src, dst, scale = spec[:4]
        trans = spec[4] if len(spec) > 4 else None
        lower = spec[5] if len(spec) > 5 else None
        built.append(Edge(eid, index[src], index[dst],
                          SimilarityMap.build(dim, scale, trans, lower_scale=lower)))
    cond = ()
    if condensation is not None:
        cond = tuple(CondensationSet(tuple(condensation.get(v, ()))) for v in vertices)
    return GDSystem(dim, tuple(vertices), tuple(built), cond, regions, probabilities)


def random_system(rng: np.random.Generator, max_vertices=3, lower=False, max_scale=0.7, max_extra=2):
    n = int(rng.integers(1, max_vertices + 1))
    names = tuple(f"v{i}" for i in range(n))
    edges = []
    k = 0
    for i in range(n):
        # ring edge keeps the graph strongly connected
        targets = [(i + 1) % n] + list(rng.integers(0, n, size=int(rng.integers(0, max_extra + 1))))
        for t in targets:
            s = float(rng.uniform(0.08, max_scale))
            lo = s * float(rng.uniform(0.3, 1.0)) if lower else None
            edges.append((f"e{k}", names[i], names[int(t)], s, [float(rng.uniform(0, 1))], lo))
            k += 1
    return make_system(edges, names)


def enumerate_cut(sys, v0, delta, max_len=60):
    """Independent breadth-first enumeration of the cross-cut."""
    exact = all(isinstance(e.map.scale, Fraction) for e in sys.edges)
    delta = Fraction(str(delta)) if exact else float(delta)
    found = []
    frontier = [((), Fraction(1) if exact else 1.0, v0)]
    for _ in range(max_len):
        nxt = []
        for ids, r, v in frontier:
            for e in sys.out_edges(v):
                rr = r * (e.map.scale if exact else float(e.map.scale))
                if rr < delta:
                    found.append(ids + (e.id,))
                else:
                    nxt.append((ids + (e.id,), rr, e.target))
        frontier = nxt
        if not frontier:
            break
    assert not frontier
    return found


@pytest.fixture
def cantor():
    return make_system([("l", "v", "v", Fraction(1, 3), [0]), ("r", "v", "v", Fraction(1, 3), [Fraction(2, 3)])])


@pytest.fixture
def cantor_interval():
    return make_system([("l", "v", "v", Fraction(1, 3), [0]), ("r", "v", "v", Fraction(1, 3), [Fraction(2, 3)])],
                       condensation={"v": [Segment((Fraction(1, 3),), (Fraction(2, 3),))]})


@pytest.fixture
def fig1():
    return make_system([("e1", "v1", "v2", Fraction(1, 2)), ("e2", "v1", "v1", Fraction(1, 4)),
                        ("e3", "v1", "v2", Fraction(1, 6)), ("e4", "v2", "v2", Fraction(1, 8)),
                        ("e5", "v2", "v1", Fraction(1, 10))], ("v1", "v2"))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.LINES):
        terminalreporter.write_line(line)


__all__ = ["make_system", "random_system", "enumerate_cut", "Box", "Point", "Segment"]
