"""Module tests for the vako.hamiltonian module"""

import numpy as np
import pytest

from vako import flow, hamiltonian, numerics, problems
from vako.common import NotPositiveDefinite


def heisenberg_H(q, p):
    x, y, _ = q
    return 0.5 * ((p[0] - y * p[2] / 2) ** 2 + (p[1] + x * p[2] / 2) ** 2)


ALL_BUILTINS = ["flat-2", "flat-3", "driven-flat", "heisenberg", "heisenberg-potential",
                "martinet"]

CONSTRAINED_BUILTINS = [name for name in ALL_BUILTINS if name != "flat-3"]


def phase_samples(problem, count, seed):
    """Seeded (t, q, p) triples in [0, 2] x [-2, 2]^n x [-2, 2]^n."""
    rng = np.random.default_rng(seed)
    times = rng.uniform(0.0, 2.0, count)
    points = rng.uniform(-2.0, 2.0, (count, problem.n))
    covectors = rng.uniform(-2.0, 2.0, (count, problem.n))
    return list(zip(times, points, covectors))


@pytest.fixture(scope="module")
def heisenberg():
    return problems.builtin("heisenberg")


class TestLagrangian:
    def test_energy_of_kinetic_lagrangian(self, heisenberg):
        assert heisenberg.lagr.energy(0.0, np.zeros(3), [3.0, 4.0]) == pytest.approx(12.5)

    def test_dq_of_potential(self):
        lagr = problems.builtin("heisenberg-potential").lagr
        np.testing.assert_allclose(lagr.dq(0.0, [0.1, 0.2, 0.7], [1.0, 0.0]),
                                   [0.0, 0.0, -0.7], atol=1e-12)

    def test_dq_by_differences(self, heisenberg):
        chart = heisenberg.chart
        lagr = hamiltonian.ConstrainedLagrangian(chart, lambda t, q, u: q[0] * u @ u)
        np.testing.assert_allclose(lagr.dq(0.0, [1.0, 0.0, 0.0], [1.0, 2.0]),
                                   [5.0, 0.0, 0.0], atol=1e-7)

    def test_metric_must_be_positive(self, heisenberg):
        data = hamiltonian.SubRiemannianData(lambda t, q: np.diag([1.0, -1.0]))
        with pytest.raises(NotPositiveDefinite):
            hamiltonian.check_subriemannian(data, [np.zeros(3)])

    def test_metric_must_be_symmetric(self):
        data = hamiltonian.SubRiemannianData(lambda t, q: np.array([[1.0, 0.1], [0.0, 1.0]]))
        with pytest.raises(NotPositiveDefinite):
            data.G(0.0, np.zeros(3))


class TestHamiltonian:
    @pytest.mark.parametrize("q, p", [
        ([0.0, 0.0, 0.0], [0.3, -0.7, 5.0]),
        ([1.0, 2.0, 3.0], [0.4, -0.1, 0.2]),
        ([-0.5, 0.25, 1.0], [1.0, 1.0, -2.0]),
    ])
    def test_closed_form(self, heisenberg, q, p):
        value = hamiltonian.eval_H(heisenberg.dh, 0.0, q, p)
        assert value.H == pytest.approx(heisenberg_H(q, p), abs=1e-12)

    def test_origin_value(self, heisenberg):
        assert hamiltonian.eval_H(heisenberg.dh, 0.0, np.zeros(3),
                                  [0.3, -0.7, 1.0]).H == pytest.approx(0.29, abs=1e-12)

    def test_potential_shifts_value(self):
        dh = problems.builtin("heisenberg-potential").dh
        assert dh.eval(0.0, [0.0, 0.0, 2.0], [0.3, -0.7, 0.0]).H == pytest.approx(2.29)

    def test_gradient(self, heisenberg):
        q = np.array([1.0, 2.0, 3.0])
        p = np.array([0.4, -0.1, 0.2])
        grad = hamiltonian.grad_H(heisenberg.dh, 0.0, q, p)
        np.testing.assert_allclose(grad.dq, [0.0, -0.02, 0.0], atol=1e-12)
        np.testing.assert_allclose(grad.dp, [0.2, 0.0, -0.2], atol=1e-12)
        np.testing.assert_allclose(grad.dq,
                                   numerics.fd_gradient(lambda x: heisenberg_H(x, p), q),
                                   atol=1e-7)

    def test_generic_path_matches_closed_form(self, heisenberg):
        generic = hamiltonian.DegenerateHamiltonian(heisenberg.lagr, generic=True)
        q = np.array([0.3, -1.2, 0.5])
        p = np.array([1.0, -0.5, 0.8])
        assert generic.eval(0.0, q, p).H == pytest.approx(heisenberg.dh.eval(0.0, q, p).H,
                                                          abs=1e-10)
        np.testing.assert_allclose(generic.grad(0.0, q, p).dq,
                                   heisenberg.dh.grad(0.0, q, p).dq, atol=1e-9)

    def test_annihilator_does_not_change_H(self, heisenberg):
        # Adding theta(q) to p leaves p restricted to D untouched
        q = np.array([1.0, 2.0, 3.0])
        p = np.array([0.4, -0.1, 0.2])
        theta = heisenberg.chart.frame.theta(0.0, q)[0]
        assert (heisenberg.dh.eval(0.0, q, p + 3.0 * theta).H
                == pytest.approx(heisenberg.dh.eval(0.0, q, p).H, abs=1e-12))

    def test_time_dependent(self):
        dh = problems.builtin("driven-flat").dh
        value = dh.eval(np.pi / 2, [2.0, 0.0, 0.0], [1.0, 1.0, 5.0])
        assert value.H == pytest.approx(1.0 + 2.0, abs=1e-12)
        grad = dh.grad(np.pi / 2, [2.0, 0.0, 0.0], [1.0, 1.0, 5.0])
        np.testing.assert_allclose(grad.dq, [1.0, 0.0, 0.0], atol=1e-12)


class TestHamiltonianProperties:
    @pytest.mark.parametrize("name", CONSTRAINED_BUILTINS)
    def test_annihilator_shifts(self, name):
        problem = problems.builtin(name)
        shifts = np.random.default_rng(11).uniform(-2.0, 2.0, (100, problem.chart.corank))
        for (t, q, p), c in zip(phase_samples(problem, 100, seed=1), shifts):
            shifted = p + c @ problem.chart.frame.theta(t, q)
            assert (problem.dh.eval(t, q, shifted).H
                    == pytest.approx(problem.dh.eval(t, q, p).H, abs=1e-10))

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_gradient_against_differences(self, name):
        problem = problems.builtin(name)
        dh = problem.dh
        for t, q, p in phase_samples(problem, 50, seed=2):
            grad = hamiltonian.grad_H(dh, t, q, p)
            np.testing.assert_allclose(
                grad.dq, numerics.fd_gradient(lambda x: dh.eval(t, x, p).H, q), atol=1e-6)
            np.testing.assert_allclose(
                grad.dp, numerics.fd_gradient(lambda x: dh.eval(t, q, x).H, p), atol=1e-6)

    @pytest.mark.parametrize("name", CONSTRAINED_BUILTINS)
    def test_velocity_is_horizontal(self, name):
        problem = problems.builtin(name)
        for t, q, p in phase_samples(problem, 50, seed=3):
            dp = problem.dh.grad(t, q, p).dp
            np.testing.assert_allclose(problem.chart.frame.theta(t, q) @ dp, 0.0, atol=1e-12)

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_lift_and_minimizer_are_inverse(self, name):
        problem = problems.builtin(name)
        rng = np.random.default_rng(4)
        for t, q, p in phase_samples(problem, 50, seed=4):
            u = rng.uniform(-2.0, 2.0, problem.k)
            lifted = flow.lift_from_velocity(problem.lagr, t, q, u)
            np.testing.assert_allclose(problem.dh.eval(t, q, lifted).u, u, atol=1e-10)

            value = problem.dh.eval(t, q, p)
            back = flow.lift_from_velocity(problem.lagr, t, q, value.u)
            np.testing.assert_allclose(problem.dh.restrict(t, q, back), value.rho, atol=1e-10)

    @pytest.mark.parametrize("name", ALL_BUILTINS)
    def test_generic_path_matches_fast_path(self, name):
        problem = problems.builtin(name)
        generic = hamiltonian.DegenerateHamiltonian(problem.lagr, generic=True)
        for t, q, p in phase_samples(problem, 20, seed=5):
            fast = problem.dh.grad(t, q, p)
            slow = generic.grad(t, q, p)
            assert slow.H == pytest.approx(fast.H, abs=1e-9)
            np.testing.assert_allclose(slow.u, fast.u, atol=1e-9)
            np.testing.assert_allclose(slow.dq, fast.dq, atol=1e-8)
            np.testing.assert_allclose(slow.dp, fast.dp, atol=1e-9)
