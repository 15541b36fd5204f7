from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import enumerate_cut, make_system, random_system
from gdfractal.errors import InvalidDelta, NonComposablePath
from gdfractal.model import PathCode, SimilarityMap, compose_path, cross_cut, first_cycle, validate_system


def kinds(report):
    return {v.kind for v in report.violations}


def test_rotation_by_quarter_turn_is_exact():
    m = SimilarityMap.build(2, Fraction(1, 2), [1, 0], rotation_deg=90)
    assert m.is_exact
    assert m.apply_exact((Fraction(1), Fraction(0))) == (Fraction(1), Fraction(1, 2))


def test_reflection_then_rotation():
    m = SimilarityMap.build(2, 1 / 2, rotation_deg=0, reflect=True)
    np.testing.assert_allclose(m([[1.0, 1.0]]), [[0.5, -0.5]])


def test_compose_and_fixed_point():
    f = SimilarityMap.build(1, Fraction(1, 3), [Fraction(2, 3)])
    g = SimilarityMap.build(1, Fraction(1, 2), [0])
    fg = f.compose(g)
    assert fg.scale == Fraction(1, 6)
    assert fg.apply_exact((Fraction(1),)) == f.apply_exact(g.apply_exact((Fraction(1),)))
    np.testing.assert_allclose(f.fixed_point(), [1.0])


def test_path_ratio_is_product(fig1):
    p = PathCode.from_edges(fig1, ["e1", "e4", "e5"])
    assert p.ratio == Fraction(1, 2) * Fraction(1, 8) * Fraction(1, 10)
    assert (p.start, p.end) == (0, 0)
    assert p.parent(fig1).edges == ("e1", "e4")


def test_non_composable_path(fig1):
    with pytest.raises(NonComposablePath):
        PathCode.from_edges(fig1, ["e1", "e2"])


def test_compose_path_matches_sequential_application(fig1):
    m = compose_path(["e2", "e3", "e5"], fig1)
    x = np.array([[0.37]])
    direct = fig1.edge("e2").map(fig1.edge("e3").map(fig1.edge("e5").map(x)))
    np.testing.assert_allclose(m(x), direct)


def test_cross_cut_fig1_half(fig1):
    assert [p.edges for p in cross_cut(fig1, "v1", Fraction(1, 2))] == [
        ("e1", "e4"), ("e1", "e5"), ("e2",), ("e3",)]


def test_cross_cut_delta_one_is_all_edges(fig1):
    assert [p.edges for p in cross_cut(fig1, "v1", 1)] == [("e1",), ("e2",), ("e3",)]


@pytest.mark.parametrize("delta", [0, -0.1, 1.5])
def test_cross_cut_rejects_bad_delta(fig1, delta):
    with pytest.raises(InvalidDelta):
        cross_cut(fig1, "v1", delta)


def test_cross_cut_lower_ratios():
    sys = make_system([("a", "v", "v", 0.5, [0], 0.25), ("b", "v", "v", 0.5, [0.5], 0.5)])
    cut = cross_cut(sys, "v", 0.3, "lower")
    assert [p.edges for p in cut] == [("a",), ("b", "a"), ("b", "b")]


def test_first_cycle(fig1):
    assert first_cycle(fig1, 0) == ("e2",)
    two = make_system([("x", "a", "b", 0.5), ("y", "b", "a", 0.5)], ("a", "b"))
    assert first_cycle(two, 0) == ("x", "y")


class TestValidation:
    def test_valid(self, fig1):
        assert validate_system(fig1).ok

    def test_non_contraction(self):
        assert "non-contraction" in kinds(validate_system(make_system([("e", "v", "v", 1.0)])))

    def test_lower_exceeds_upper(self):
        sys = make_system([("e", "v", "v", 0.5, [0], 0.6)])
        assert "lower-exceeds-upper" in kinds(validate_system(sys))

    def test_not_strongly_connected(self):
        sys = make_system([("a", "x", "x", 0.5), ("b", "x", "y", 0.5), ("c", "y", "y", 0.5)], ("x", "y"))
        report = validate_system(sys)
        assert "not-strongly-connected" in kinds(report)

    def test_missing_outgoing_edge(self):
        sys = make_system([("a", "x", "y", 0.5)], ("x", "y"))
        assert "no-outgoing-edge" in kinds(validate_system(sys))

    def test_duplicate_edge_id(self):
        sys = make_system([("a", "v", "v", 0.5), ("a", "v", "v", 0.25)])
        assert "duplicate-edge" in kinds(validate_system(sys))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), delta=st.sampled_from([0.3, 0.1, 0.03]))
def test_cross_cut_is_prefix_free_and_complete(seed, delta):
    rng = np.random.default_rng(seed)
    sys = random_system(rng)
    for v in range(sys.n):
        cut = cross_cut(sys, v, delta)
        assert sorted(p.edges for p in cut) == sorted(enumerate_cut(sys, v, delta))
        for p in cut:
            assert p.ratio < delta
            parent = p.parent(sys)
            assert (1 if parent is None else parent.ratio) >= delta
        # completeness: a long random walk has exactly one prefix in the cut
        edges = set(p.edges for p in cut)
        w, walk = v, []
        for _ in range(64):
            out = sys.out_edges(w)
            e = out[int(rng.integers(len(out)))]
            walk.append(e.id)
            w = e.target
        hits = [k for k in range(1, 65) if tuple(walk[:k]) in edges]
        assert len(hits) == 1
