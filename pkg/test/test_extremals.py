"""Module tests for the vako.extremals module"""

import numpy as np
import pytest
import scipy.linalg

from vako import extremals, geometry, problems
from vako.common import (ContactVerdict, DiscreteCurve, InconsistentControls,
                         Regularity)
from vako.geometry import Point


def x_line(samples=101):
    times = np.linspace(0.0, 1.0, samples)
    return DiscreteCurve(times, np.outer(times, [1.0, 0.0, 0.0]))


def ends(curve):
    return Point(curve.q[0]), Point(curve.q[-1])


def random_horizontal(chart, seed, samples=101):
    """A horizontal curve with controls a + b sin(pi t) from a point in [0.5, 1]^n."""
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, samples)
    a = rng.uniform(0.5, 1.0, chart.k)
    b = rng.uniform(0.25, 0.5, chart.k)
    u = a + np.outer(np.sin(np.pi * times), b)
    return geometry.integrate_horizontal(chart, times, rng.uniform(0.5, 1.0, chart.n), u)


@pytest.fixture(scope="module")
def heisenberg():
    return problems.builtin("heisenberg").chart


@pytest.fixture(scope="module")
def martinet():
    return problems.builtin("martinet").chart


class TestTransport:
    def test_heisenberg_against_expm(self, heisenberg):
        transport = extremals.transport_covectors(heisenberg, x_line())
        generator = np.zeros((3, 3))
        generator[1, 2] = 0.5
        for t, Phi in zip(transport.times[::20], transport.Phi[::20]):
            np.testing.assert_allclose(Phi, scipy.linalg.expm(t * generator), atol=1e-12)

    def test_martinet_line_is_trivial(self, martinet):
        transport = extremals.transport_covectors(martinet, x_line())
        np.testing.assert_allclose(transport.Phi, np.tile(np.eye(3), (101, 1, 1)), atol=1e-14)

    def test_controls_must_match(self, heisenberg):
        curve = x_line().with_controls(np.tile([0.0, 1.0], (101, 1)))
        with pytest.raises(InconsistentControls):
            extremals.transport_covectors(heisenberg, curve)


class TestAbnormal:
    def test_martinet_line_is_singular(self, martinet):
        curve = x_line()
        result = extremals.abnormal_test(martinet, curve, *ends(curve))
        assert result.verdict is Regularity.Singular
        assert result.basis.dim == 1
        end = result.basis.at_end()[:, 0]
        np.testing.assert_allclose(np.abs(end) / np.linalg.norm(end), [0.0, 0.0, 1.0],
                                   atol=1e-10)
        assert result.basis.constraint_residual <= 1e-12
        np.testing.assert_allclose(result.basis.norm_ratios(), 1.0, atol=1e-12)

    def test_heisenberg_line_is_regular(self, heisenberg):
        curve = x_line()
        result = extremals.abnormal_test(heisenberg, curve, *ends(curve))
        assert result.verdict is Regularity.Regular
        assert result.basis is None

    def test_heisenberg_circle_is_regular(self, heisenberg):
        times = np.linspace(0.0, 1.0, 201)
        angle = 2 * np.pi * times
        r = 1.0 / (2 * np.pi)
        q = np.column_stack([r * np.sin(angle), r * (1 - np.cos(angle)),
                             (angle - np.sin(angle)) * r * r / 2])
        curve = DiscreteCurve(times, q)
        result = extremals.abnormal_test(heisenberg, curve, *ends(curve), tol=1e-6)
        assert result.verdict is Regularity.Regular

    def test_full_rank_is_regular(self):
        chart = problems.builtin("flat-3").chart
        curve = x_line()
        assert extremals.abnormal_test(chart, curve, *ends(curve)).verdict is Regularity.Regular

    def test_integrable_distribution_is_singular(self):
        # dz annihilates the flat plane field along every curve
        chart = problems.builtin("flat-2").chart
        curve = x_line()
        result = extremals.abnormal_test(chart, curve, *ends(curve))
        assert result.verdict is Regularity.Singular
        assert result.basis.dim == 1


class TestOracles:
    def test_martinet_oracle_agrees(self, martinet):
        curve = x_line()
        result = extremals.abnormal_test(martinet, curve, *ends(curve))
        annihilator = extremals.endpoint_map_oracle(martinet, curve, Point(curve.q[0]))
        assert annihilator.shape == (3, 1)
        assert extremals.agreement_angle(result.basis.at_end(), annihilator) <= 1e-3

    def test_heisenberg_oracle_is_empty(self, heisenberg):
        curve = x_line()
        assert extremals.endpoint_map_oracle(heisenberg, curve, Point(curve.q[0])).shape == (3, 0)

    def test_full_rank_oracle_is_empty(self):
        chart = problems.builtin("flat-3").chart
        curve = x_line()
        assert extremals.endpoint_map_oracle(chart, curve, Point(curve.q[0])).shape == (3, 0)

    def test_agreement_angle(self):
        e3 = np.array([[0.0], [0.0], [1.0]])
        assert extremals.agreement_angle(np.zeros((3, 0)), np.zeros((3, 0))) == 0.0
        assert extremals.agreement_angle(e3, np.zeros((3, 0))) == pytest.approx(np.pi / 2)
        assert extremals.agreement_angle(e3, -2.0 * e3) == pytest.approx(0.0, abs=1e-12)

    def test_submersion(self, heisenberg, martinet):
        curve = x_line()
        assert (extremals.constraint_submersion_test(heisenberg, curve, *ends(curve))
                is Regularity.Regular)
        assert (extremals.constraint_submersion_test(martinet, curve, *ends(curve))
                is Regularity.Singular)


class TestContact:
    def test_heisenberg_is_contact(self, heisenberg):
        points = np.random.default_rng(5).uniform(-2.0, 2.0, (20, 3))
        results = extremals.contact_test(heisenberg, points)
        assert all(r.verdict is ContactVerdict.NondegenerateOnAnnihilator for r in results)

    def test_martinet_degenerates_on_surface(self, martinet):
        result, off = extremals.contact_test(martinet, [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        assert result.verdict is ContactVerdict.Degenerate
        assert result.directions.shape[0] == 3
        assert off.verdict is ContactVerdict.NondegenerateOnAnnihilator

    def test_full_rank_is_vacuous(self):
        chart = problems.builtin("flat-3").chart
        results = extremals.contact_test(chart, np.zeros((2, 3)))
        assert [r.verdict for r in results] == [ContactVerdict.NondegenerateOnAnnihilator] * 2


class TestRandomCurves:
    @pytest.mark.parametrize("name", ["flat-2", "flat-3", "driven-flat", "heisenberg",
                                      "heisenberg-potential", "martinet"])
    def test_oracle_agreement(self, name):
        chart = problems.builtin(name).chart
        for seed in range(5):
            curve = random_horizontal(chart, seed)
            result = extremals.abnormal_test(chart, curve, *ends(curve))
            annihilator = extremals.endpoint_map_oracle(chart, curve, Point(curve.q[0]))
            characteristics = (np.zeros((chart.n, 0)) if result.basis is None
                               else result.basis.at_end())
            assert characteristics.shape == annihilator.shape
            assert extremals.agreement_angle(characteristics, annihilator) <= 1e-3

    @pytest.mark.parametrize("scale, shift", [(0.5, 0.0), (3.0, 0.0), (1.0, 1.5)])
    def test_verdict_survives_reparametrization(self, heisenberg, martinet, scale, shift):
        line = x_line()
        moved = DiscreteCurve(shift + scale * line.times, line.q)
        result = extremals.abnormal_test(martinet, moved, *ends(moved))
        assert result.verdict is Regularity.Singular
        assert result.basis.dim == 1
        end = result.basis.at_end()[:, 0]
        np.testing.assert_allclose(np.abs(end) / np.linalg.norm(end), [0.0, 0.0, 1.0],
                                   atol=1e-10)

        curve = random_horizontal(heisenberg, seed=0)
        moved = DiscreteCurve(shift + scale * curve.times, curve.q)
        assert (extremals.abnormal_test(heisenberg, moved, *ends(moved)).verdict
                is Regularity.Regular)

    def test_scaled_line_keeps_its_characteristic(self, martinet):
        fast = DiscreteCurve(x_line().times, 2.0 * x_line().q)
        result = extremals.abnormal_test(martinet, fast, *ends(fast))
        assert result.verdict is Regularity.Singular
        assert result.basis.dim == 1

    def test_characteristics_vanish_nowhere(self, martinet):
        flat = problems.builtin("flat-2").chart
        for seed in range(3):
            curve = random_horizontal(flat, seed)
            basis = extremals.abnormal_test(flat, curve, *ends(curve)).basis
            assert np.all(basis.norm_ratios() > 0.1)

        times = np.linspace(0.0, 1.0, 101)
        for speed in (1.0 + 0.5 * np.sin(np.pi * times), 2.0 - times):
            u = np.column_stack([speed, np.zeros_like(times)])
            curve = geometry.integrate_horizontal(martinet, times, [0.3, 0.0, 0.2], u)
            basis = extremals.abnormal_test(martinet, curve, *ends(curve)).basis
            assert basis is not None
            assert np.all(basis.norm_ratios() > 0.1)
