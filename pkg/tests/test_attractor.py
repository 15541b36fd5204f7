from fractions import Fraction

import numpy as np
import pytest

from conftest import make_system
from gdfractal import attractor
from gdfractal.errors import HomogeneousSystem, InvalidDelta
from gdfractal.model import Box, CondensationSet, Point, Segment

EPS5 = 3.0 ** -5


def cantor_level(k):
    """Left endpoints of the level-k Cantor intervals, built by digits."""
    pts = [0.0]
    for j in range(1, k + 1):
        pts = [x + d * 2 * 3.0 ** -j for x in pts for d in (0, 1)]
    return np.sort(np.array(pts))


def test_cantor_level_five(cantor):
    c = attractor.homogeneous_cloud(cantor, "v", EPS5)
    assert len(c) == 32
    np.testing.assert_allclose(np.sort(c.points[:, 0]), cantor_level(5), atol=1e-15)


@pytest.mark.parametrize("eps,count", [(EPS5 * 1.001, 32), (EPS5 * 0.999, 64), (3.0 ** -6, 64)])
def test_cloud_level_follows_resolution(cantor, eps, count):
    assert len(attractor.homogeneous_cloud(cantor, "v", eps)) == count


def test_single_loop_collapses_to_fixed_point():
    sys = make_system([("h", "v", "v", Fraction(1, 2), [0])])
    c = attractor.homogeneous_cloud(sys, "v", 1e-3)
    assert c.points.tolist() == [[0.0]]


def test_homogeneous_points_lie_near_attractor(cantor):
    c = attractor.homogeneous_cloud(cantor, "v", 1e-3)
    fine = cantor_level(12)[:, None]
    assert attractor.hausdorff_one_sided(c.points, fine) < 1e-3


@pytest.mark.parametrize("eps", [0, 1, 2])
def test_bad_resolution(cantor, eps):
    with pytest.raises(InvalidDelta):
        attractor.homogeneous_cloud(cantor, "v", eps)


def test_orbital_requires_condensation(cantor):
    with pytest.raises(HomogeneousSystem):
        attractor.orbital_cloud(cantor, "v", 1e-3)


def test_orbital_of_point_condensation():
    sys = make_system([("a", "v", "v", Fraction(1, 2), [0]), ("b", "v", "v", Fraction(1, 2), [Fraction(1, 2)])],
                      condensation={"v": [Point((Fraction(2),))]})
    c = attractor.orbital_cloud(sys, "v", 1e-2)
    pts = c.points[:, 0]
    assert 2.0 in pts
    assert pts.min() >= 0 and pts.max() <= 2


def images_of_two(depth_ratio):
    """Hand enumeration: images of 2 under all compositions with ratio >= depth_ratio."""
    out = {Fraction(2)}
    level = {Fraction(2)}
    r = Fraction(1)
    while r / 2 >= depth_ratio:
        r /= 2
        level = {x / 2 for x in level} | {x / 2 + Fraction(1, 2) for x in level}
        out |= level
    return out


def test_orbital_eighth_matches_hand_enumeration():
    sys = make_system([("a", "v", "v", Fraction(1, 2), [0]), ("b", "v", "v", Fraction(1, 2), [Fraction(1, 2)])],
                      condensation={"v": [Point((Fraction(2),))]})
    pts = set(attractor.orbital_cloud(sys, "v", 1 / 8).points[:, 0].tolist())
    assert pts == {float(x) for x in images_of_two(Fraction(1, 8))}


def test_condensation_examples():
    seg = attractor.condensation_samples(CondensationSet((Segment((0, 0), (1, 0)),)), 0.25)
    assert len(seg) == 5
    box = attractor.condensation_samples(CondensationSet((Box((0, 0), (1, 1)),)), 0.5)
    assert len(box) == 9
    pt = attractor.condensation_samples(CondensationSet((Point((2,)),)), 0.01)
    assert pt.points.tolist() == [[2.0]]


def test_inhomogeneous_contains_both(cantor_interval):
    h = attractor.homogeneous_cloud(cantor_interval, "v", 1e-3)
    o = attractor.orbital_cloud(cantor_interval, "v", 1e-3)
    f = attractor.inhomogeneous_cloud(cantor_interval, "v", 1e-3)
    assert len(f) >= max(len(h), len(o))
    assert attractor.hausdorff_one_sided(h.points, f.points) == 0
    assert attractor.hausdorff_one_sided(o.points, f.points) == 0


def test_orbital_cloud_is_self_similar(cantor_interval):
    eps = 1e-3
    clouds = {0: attractor.inhomogeneous_cloud(cantor_interval, 0, eps)}
    assert attractor.self_similarity_residual(cantor_interval, clouds, 0, eps) < 2 * eps


def test_condensation_segment_sampling_spacing():
    pts = attractor.sample_primitive(Segment((0,), (1,)), 0.1)
    assert pts[0, 0] == 0 and pts[-1, 0] == 1
    assert np.diff(pts[:, 0]).max() <= 0.1 + 1e-15


def test_deterministic(cantor_interval):
    a = attractor.inhomogeneous_cloud(cantor_interval, "v", 1e-3).points
    b = attractor.inhomogeneous_cloud(cantor_interval, "v", 1e-3).points
    assert a.tobytes() == b.tobytes()


def test_two_vertex_cloud(fig1):
    c = attractor.homogeneous_cloud(fig1, "v2", 1e-3)
    assert len(c) > 0 and c.dim == 1
