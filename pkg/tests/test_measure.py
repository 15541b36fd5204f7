from fractions import Fraction

import numpy as np
import pytest

from conftest import make_system
from gdfractal import attractor
from gdfractal.errors import InsufficientSamples, InvalidScheme, NoCondensation
from gdfractal.measure import (ProbabilityScheme, condensation_mass, invariance_residual, mean_fixed_point,
                               primitive_weight, random_probe_boxes, sample_measure, uniform_scheme)
from gdfractal.model import Box, CondensationSet, Point, Segment


def halves(condensation=None):
    return make_system([("a", "v", "v", Fraction(1, 2), [0]), ("b", "v", "v", Fraction(1, 2), [Fraction(1, 2)])],
                       condensation=condensation or {"v": [Point((Fraction(2),))]})


SCHEME = ProbabilityScheme({"a": 0.4, "b": 0.4}, (0.2,))


def test_first_moment_oracle():
    # E = 0.4 E/2 + 0.4 (E/2 + 1/2) + 0.2 * 2  gives  E = 1
    assert mean_fixed_point(halves(), SCHEME)[0, 0] == pytest.approx(1.0, abs=1e-12)
    s = sample_measure(halves(), SCHEME, "v", 100_000, seed=7)
    assert s.points.mean() == pytest.approx(1.0, abs=0.02)


def test_mean_within_three_standard_errors():
    s = sample_measure(halves(), SCHEME, "v", 50_000, seed=11)
    se = s.points.std() / np.sqrt(len(s.points))
    assert abs(s.points.mean() - 1.0) < 3 * se


def test_stop_immediately_draws_from_condensation():
    scheme = ProbabilityScheme({"a": 0.0, "b": 0.0}, (1.0,))
    s = sample_measure(halves(), scheme, "v", 1000, seed=1)
    assert np.all(s.points == 2.0)


def test_same_seed_same_samples_any_worker_count():
    a = sample_measure(halves(), SCHEME, "v", 20_000, seed=5, workers=1).points
    b = sample_measure(halves(), SCHEME, "v", 20_000, seed=5, workers=4).points
    c = sample_measure(halves(), SCHEME, "v", 20_000, seed=6).points
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_samples_lie_on_the_attractor():
    sys = halves()
    pts = sample_measure(sys, SCHEME, "v", 20_000, seed=3).points
    cloud = attractor.inhomogeneous_cloud(sys, "v", 1e-3)
    assert attractor.hausdorff_one_sided(pts, cloud.points) <= 1e-3


class TestSchemeValidation:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(InvalidScheme):
            sample_measure(halves(), ProbabilityScheme({"a": 0.5, "b": 0.4}, (0.2,)), "v", 10, 0)

    def test_negative_weight(self):
        with pytest.raises(InvalidScheme):
            sample_measure(halves(), ProbabilityScheme({"a": -0.2, "b": 1.0}, (0.2,)), "v", 10, 0)

    def test_chain_that_never_stops(self):
        sys = make_system([("a", "v", "v", 0.5, [0]), ("b", "v", "v", 0.5, [0.5])])
        with pytest.raises(NoCondensation):
            sample_measure(sys, ProbabilityScheme({"a": 0.5, "b": 0.5}, (0.0,)), "v", 10, 0)

    def test_nonempty_condensation_needs_positive_weight(self):
        with pytest.raises(InvalidScheme):
            sample_measure(halves(), ProbabilityScheme({"a": 0.5, "b": 0.5}, (0.0,)), "v", 10, 0)

    def test_uniform_scheme(self):
        s = uniform_scheme(halves(), 0.2)
        assert s.edge_weights == {"a": 0.4, "b": 0.4}


class TestInvariance:
    def test_exact_sampler_residual(self):
        sys = halves()
        s = sample_measure(sys, SCHEME, "v", 100_000, seed=7)
        probes = random_probe_boxes(s.points, 20, seed=0)
        assert invariance_residual({0: s}, sys, SCHEME, probes) <= 0.02

    def test_wrong_samples_have_large_residual(self):
        sys = halves()
        fake = np.full((20_000, 1), 0.3)
        probes = [(np.array([0.25]), np.array([0.35]))]
        assert invariance_residual({0: fake}, sys, SCHEME, probes) > 0.9

    def test_nearly_homogeneous(self):
        sys = halves()
        scheme = ProbabilityScheme({"a": 0.495, "b": 0.495}, (0.01,))
        s = sample_measure(sys, scheme, "v", 100_000, seed=2)
        probes = random_probe_boxes(s.points, 20, seed=1)
        assert invariance_residual({0: s}, sys, scheme, probes) <= 0.03

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            invariance_residual({0: np.zeros((10, 1))}, halves(), SCHEME, [])

    def test_interval_condensation(self):
        sys = halves({"v": [Segment((Fraction(1, 4),), (Fraction(3, 4),))]})
        s = sample_measure(sys, SCHEME, "v", 100_000, seed=9)
        probes = random_probe_boxes(s.points, 20, seed=2)
        assert invariance_residual({0: s}, sys, SCHEME, probes) <= 0.02


def test_condensation_mass_weights():
    c = CondensationSet((Segment((0,), (1,)), Segment((2,), (4,))))
    # length-weighted: 1/3 on [0,1], 2/3 on [2,4]
    assert condensation_mass(c, [0.5], [3.0]) == pytest.approx(0.5 / 3 + 1 / 3)
    assert primitive_weight(Box((0, 0), (2, 3))) == 6
    assert primitive_weight(Point((1,))) == 1
