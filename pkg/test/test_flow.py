"""Module tests for the vako.flow module"""

import mpmath
import numpy as np
import pytest

from vako import flow, geometry, hamiltonian, problems
from vako.common import NonFiniteEvaluation


@pytest.fixture(scope="module")
def heisenberg():
    return problems.builtin("heisenberg")


def blowup_hamiltonian():
    """H = p^2/2 - q^4 on the line, whose solutions escape in finite time."""
    chart = geometry.ChartProblem(1, 1, problems.flat_frame(1, 1), name="escape")
    lagr = hamiltonian.ConstrainedLagrangian(
        chart, lambda t, q, u: 0.5 * u @ u + q[0] ** 4,
        dL_dq=lambda t, q, u: np.array([4.0 * q[0] ** 3]),
        dL_du=lambda t, q, u: np.asarray(u, dtype=float),
        d2L_du2=lambda t, q, u: np.eye(1),
        inverse=lambda t, q, rho: np.asarray(rho, dtype=float))
    return hamiltonian.DegenerateHamiltonian(lagr)


class CountingHamiltonian:
    """Forwards gradient evaluations to a Hamiltonian and counts them."""
    def __init__(self, dh):
        self.dh = dh
        self.problem = dh.problem
        self.grads = 0

    def grad(self, t, q, p, warm=None):
        self.grads += 1
        return self.dh.grad(t, q, p, warm)


# Initial states of the autonomous builtins with curved solutions
AUTONOMOUS_STATES = {
    "heisenberg": ([0.0, 0.0, 0.0], [1.0, 0.0, 2.0]),
    "heisenberg-potential": ([0.0, 0.0, 0.5], [1.0, 0.5, 2.0]),
    "martinet": ([0.0, 0.5, 0.0], [1.0, 0.5, 1.0]),
}


class TestIntegrate:
    def test_straight_extremal(self, heisenberg):
        path = flow.integrate_hamilton(heisenberg.dh, 0.0, 1.0, np.zeros(3), [1.0, 0.0, 0.0], 100)
        np.testing.assert_allclose(path.q[-1], [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(path.p[-1], [1.0, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(path.u, np.tile([1.0, 0.0], (101, 1)), atol=1e-12)

    def test_circle_closes(self, heisenberg):
        path = flow.integrate_hamilton(heisenberg.dh, 0.0, 1.0, np.zeros(3),
                                       [1.0, 0.0, 2 * np.pi], 1000)
        np.testing.assert_allclose(path.q[-1, :2], 0.0, atol=1e-9)
        assert abs(path.q[-1, 2]) == pytest.approx(1.0 / (4 * np.pi), abs=1e-9)
        # p_z is a first integral
        np.testing.assert_allclose(path.p[:, 2], 2 * np.pi, atol=1e-12)

    def test_report(self, heisenberg):
        path = flow.integrate_hamilton(heisenberg.dh, 0.0, 1.0, np.zeros(3),
                                       [1.0, 0.0, 2 * np.pi], 1000)
        report = flow.flow_report(path, heisenberg.chart, heisenberg.autonomous)
        assert report.energy_drift <= 1e-9
        assert report.horizontality_max <= 1e-4
        assert report.steps == 1000
        assert report.wall_time >= 0.0

    def test_time_dependent_momentum(self):
        problem = problems.builtin("driven-flat")
        path = flow.integrate_hamilton(problem.dh, 0.0, 2.0, np.zeros(3),
                                       [0.5, 0.0, 0.0], 400)
        np.testing.assert_allclose(path.p[:, 0], 0.5 - 1.0 + np.cos(path.times), atol=1e-10)
        report = flow.flow_report(path, problem.chart, problem.autonomous)
        assert report.energy_drift is None

    def test_curve_carries_controls(self, heisenberg):
        path = flow.integrate_hamilton(heisenberg.dh, 0.0, 0.5, [1.0, 1.0, 0.0],
                                       [0.0, 1.0, 0.0], 50)
        curve = path.curve
        assert curve.u.shape == (51, 2)
        assert len(path) == 51
        np.testing.assert_array_equal(path.p0, [0.0, 1.0, 0.0])

    def test_one_gradient_per_stage(self, heisenberg):
        counted = CountingHamiltonian(heisenberg.dh)
        path = flow.integrate_hamilton(counted, 0.0, 1.0, np.zeros(3), [1.0, 0.5, 3.0], 40)
        assert counted.grads == 4 * 40 + 1
        for t, q, p, u, H in zip(path.times, path.q, path.p, path.u, path.H):
            value = heisenberg.dh.eval(t, q, p)
            assert H == pytest.approx(value.H, abs=1e-12)
            np.testing.assert_allclose(u, value.u, atol=1e-12)

    def test_escape_reports_time(self):
        dh = blowup_hamiltonian()
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(NonFiniteEvaluation) as exc:
                flow.integrate_hamilton(dh, 0.0, 5.0, [1.0], [1.0], 500)
        assert 0.0 < exc.value.time <= 5.0


class TestLift:
    def test_lift_on_D(self, heisenberg):
        p = flow.lift_from_velocity(heisenberg.lagr, 0.0, [1.0, 2.0, 3.0], [1.0, 2.0])
        np.testing.assert_allclose(p, [1.0, 2.0, 0.0], atol=1e-12)

    def test_lift_with_complement(self, heisenberg):
        p = flow.lift_from_velocity(heisenberg.lagr, 0.0, [1.0, 2.0, 3.0], [1.0, 2.0],
                                    lambda_Dprime=[3.0])
        np.testing.assert_allclose(p, [4.0, 0.5, 3.0], atol=1e-12)
        assert heisenberg.dh.eval(0.0, [1.0, 2.0, 3.0], p).u == pytest.approx([1.0, 2.0])


class TestTaylorOracle:
    def test_heisenberg_against_taylor_series(self, heisenberg):
        def rhs(t, state):
            x, y, z, px, py, pz = state
            u1 = px - y * pz / 2
            u2 = py + x * pz / 2
            return [u1, u2, (x * u2 - y * u1) / 2, -u2 * pz / 2, u1 * pz / 2, 0]

        p0 = [1.0, 0.5, 3.0]
        solution = mpmath.odefun(rhs, 0, [0, 0, 0] + p0)
        expected = np.array([float(v) for v in solution(1)])
        path = flow.integrate_hamilton(heisenberg.dh, 0.0, 1.0, np.zeros(3), p0, 1000)
        np.testing.assert_allclose(path.q[-1], expected[:3], atol=1e-9)
        np.testing.assert_allclose(path.p[-1], expected[3:], atol=1e-9)


class TestConservation:
    @pytest.mark.parametrize("name", sorted(AUTONOMOUS_STATES))
    def test_energy_drift(self, name):
        problem = problems.builtin(name)
        q0, p0 = AUTONOMOUS_STATES[name]
        path = flow.integrate_hamilton(problem.dh, 0.0, 1.0, q0, p0, 1000)
        assert flow.flow_report(path, problem.chart, problem.autonomous).energy_drift <= 1e-8

    @pytest.mark.parametrize("name", sorted(AUTONOMOUS_STATES))
    def test_observed_order(self, name):
        problem = problems.builtin(name)
        q0, p0 = AUTONOMOUS_STATES[name]

        def final_state(steps):
            path = flow.integrate_hamilton(problem.dh, 0.0, 1.0, q0, p0, steps)
            return np.concatenate([path.q[-1], path.p[-1]])

        reference = final_state(640)
        errors = [np.max(np.abs(final_state(steps) - reference)) for steps in (20, 40, 80)]
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(orders >= 3.7), errors

    def test_flat_drift_vanishes(self):
        problem = problems.builtin("flat-2")
        path = flow.integrate_hamilton(problem.dh, 0.0, 1.0, np.zeros(3), [1.0, -2.0, 0.5], 1000)
        assert flow.flow_report(path, problem.chart, problem.autonomous).energy_drift <= 1e-12
