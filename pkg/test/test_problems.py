"""Module tests for the vako.problems module"""

import numpy as np
import pytest

from vako import problems
from vako.common import DegenerateFrame, DimensionMismatch, NotHyperRegular, UnknownProblem

from test.problem_files import DOUBLE_WELL_INLINE, HEISENBERG_INLINE


class TestBuiltins:
    def test_names(self):
        assert problems.names() == ["flat-k", "driven-flat", "heisenberg",
                                    "heisenberg-potential", "martinet"]

    def test_every_builtin_builds(self):
        for name in problems.names():
            problem = problems.builtin(name.replace("-k", "-2"))
            assert problem.facts
            assert set(problem.default_bvp) == {"P", "Q", "anchor_p"}

    def test_unknown(self):
        with pytest.raises(UnknownProblem):
            problems.builtin("moebius")
        with pytest.raises(UnknownProblem):
            problems.builtin("flat-0")

    def test_flat_dimensions(self):
        problem = problems.builtin("flat-2", dim=5)
        assert (problem.n, problem.k) == (5, 2)
        np.testing.assert_array_equal(problem.default_bvp["Q"].q, [1.0, 1.0, 0.0, 0.0, 0.0])
        assert problems.builtin("flat-4").n == 4
        assert problems.builtin("flat-3").chart.corank == 0

    def test_fixed_dimension(self):
        with pytest.raises(DimensionMismatch):
            problems.builtin("heisenberg", dim=4)
        assert problems.builtin("martinet", dim=3).n == 3

    def test_autonomy(self):
        assert problems.builtin("heisenberg").autonomous
        assert not problems.builtin("driven-flat").autonomous

    def test_martinet_frame_annihilated(self):
        chart = problems.builtin("martinet").chart
        for q in np.random.default_rng(2).uniform(-3.0, 3.0, (10, 3)):
            np.testing.assert_allclose(chart.frame.theta(0.0, q) @ chart.frame.X(0.0, q), 0.0,
                                       atol=1e-14)


class TestInline:
    def test_heisenberg_matches_builtin(self):
        inline = problems.from_inline(HEISENBERG_INLINE["inline"])
        builtin = problems.builtin("heisenberg")
        assert inline.name == "heisenberg-inline"
        rng = np.random.default_rng(11)
        for q, p in zip(rng.uniform(-1.0, 1.0, (5, 3)), rng.uniform(-1.0, 1.0, (5, 3))):
            assert inline.dh.eval(0.0, q, p).H == pytest.approx(builtin.dh.eval(0.0, q, p).H,
                                                               abs=1e-12)
            np.testing.assert_allclose(inline.dh.grad(0.0, q, p).dq,
                                       builtin.dh.grad(0.0, q, p).dq, atol=1e-12)

    def test_potential(self):
        spec = dict(HEISENBERG_INLINE["inline"], potential=[[0.5, [0, 0, 2]]])
        inline = problems.from_inline(spec)
        assert inline.lagr.value(0.0, [0.0, 0.0, 2.0], [0.0, 0.0]) == pytest.approx(-2.0)

    def test_general_lagrangian(self):
        # L = u^2 / 2 + q u on the line
        spec = {"n": 1, "k": 1, "frame": [[[[1.0, [0]]]]],
                "lagrangian": [[0.5, [0, 2]], [1.0, [1, 1]]]}
        problem = problems.from_inline(spec)
        assert problem.name == "inline"
        np.testing.assert_allclose(problem.lagr.du(0.0, [2.0], [3.0]), [5.0])
        np.testing.assert_allclose(problem.lagr.dq(0.0, [2.0], [3.0]), [3.0])
        assert problem.dh.eval(0.0, [2.0], [5.0]).u == pytest.approx([3.0], abs=1e-9)

    def test_singular_fiber_hessian(self):
        # u^4/4 has a flat bottom at u = 0
        spec = {"n": 1, "k": 1, "frame": [[[[1.0, [0]]]]], "lagrangian": [[0.25, [0, 4]]]}
        with pytest.raises(NotHyperRegular):
            problems.from_inline(spec)

    def test_double_well_builds(self):
        problem = problems.from_inline(DOUBLE_WELL_INLINE["inline"])
        np.testing.assert_allclose(problem.lagr.d2u(0.0, [0.0], [0.0]), [[-1.0]])

    def test_frame_shape(self):
        spec = dict(HEISENBERG_INLINE["inline"], k=1)
        with pytest.raises(DimensionMismatch):
            problems.from_inline(spec)

    def test_bad_annihilator(self):
        spec = dict(HEISENBERG_INLINE["inline"],
                    annihilator=[[[[1.0, [0, 0, 0]]], [], []]])
        with pytest.raises(DegenerateFrame):
            problems.from_inline(spec)
