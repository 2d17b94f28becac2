"""Module tests for the vako.config module"""

import numpy as np
import pytest

from vako import config
from vako.config import ConfigError, ProblemFile
from vako.geometry import LevelSet, Point, Whole

from test.problem_files import (HEISENBERG, HEISENBERG_BVP, HEISENBERG_INLINE,
                                problem_data, write_problem)


def load(tmp_path, data):
    return ProblemFile(write_problem(tmp_path, data))


class TestProblemFile:
    def test_defaults(self, tmp_path):
        problem_file = load(tmp_path, problem_data(HEISENBERG))
        assert problem_file.problem.builtin == "heisenberg"
        assert problem_file.ivp is None
        assert problem_file.bvp is None
        assert problem_file.check.eps == 1e-4
        assert problem_file.check.probe_samples == 101
        assert problem_file.legendre.samples == 50
        assert problem_file.legendre.radius == 1.0

    def test_blocks(self, tmp_path):
        problem_file = load(tmp_path, problem_data(
            HEISENBERG, ivp={"p0": [1, 0, 0], "t-span": [0, 2]}, bvp=HEISENBERG_BVP))
        assert problem_file.ivp.p0 == [1, 0, 0]
        assert problem_file.ivp.t_span == [0, 2]
        assert problem_file.ivp.steps == config.DEFAULT_IVP_STEPS
        bvp = problem_file.bvp
        assert bvp.steps == 100
        assert bvp.anchor_p == [0.9, 0.1, 0.1]
        assert bvp.tolerance == config.DEFAULT_TOLERANCE
        assert bvp.seed == 0

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            ProblemFile(str(tmp_path / "absent.json"))
        assert "Cannot find problem file" in str(exc.value)

    def test_invalid_json(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load(tmp_path, '{"problem": ')
        assert "Invalid JSON" in str(exc.value)

    def test_not_an_object(self, tmp_path):
        with pytest.raises(ConfigError):
            load(tmp_path, "[1, 2]")

    def test_missing_problem(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load(tmp_path, {"ivp": {}})
        assert "Missing mandatory field 'problem'" in str(exc.value)

    def test_unexpected_field(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load(tmp_path, problem_data(HEISENBERG, ivp={"p0": [1, 0, 0], "p1": [0, 0, 0]}))
        assert "'p1'" in str(exc.value)

    @pytest.mark.parametrize("block", [
        {"ivp": {"steps": 0}},
        {"ivp": {"steps": 2.5}},
        {"ivp": {"t-span": [1, 0]}},
        {"ivp": {"p0": [1, "x", 0]}},
        {"check": {"eps": 0.5}},
        {"check": {"gprime": [[1, 0], [0]]}},
        {"legendre": {"radius": -1}},
        {"legendre": {"seed": "zero"}},
        {"bvp": {"P": {"type": "point", "at": [0, 0, 0]}}},
        {"bvp": {"P": {"type": "sphere"}, "Q": {"type": "whole"}}},
    ])
    def test_bad_blocks(self, tmp_path, block):
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data(HEISENBERG, **block))


class TestProblem:
    def test_needs_exactly_one_source(self, tmp_path):
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data({}))
        both = dict(HEISENBERG, **HEISENBERG_INLINE)
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data(both))

    def test_builtin_must_be_string(self, tmp_path):
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data({"builtin": 3}))

    def test_inline(self, tmp_path):
        inline = load(tmp_path, problem_data(HEISENBERG_INLINE)).problem.inline
        assert (inline.n, inline.k) == (3, 2)
        assert inline.lagrangian is None
        assert inline.as_dict()["name"] == "heisenberg-inline"

    def test_inline_rank(self, tmp_path):
        bad = {"inline": dict(HEISENBERG_INLINE["inline"], k=4)}
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data(bad))

    def test_inline_needs_one_lagrangian(self, tmp_path):
        both = {"inline": dict(HEISENBERG_INLINE["inline"], lagrangian=[])}
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data(both))
        neither = {"inline": dict(HEISENBERG_INLINE["inline"])}
        del neither["inline"]["metric"]
        with pytest.raises(ConfigError):
            load(tmp_path, problem_data(neither))


class TestSubmanifold:
    def test_point(self):
        point = config.Submanifold({"type": "point", "at": [1, 2, 3]}, "P").build(3)
        assert isinstance(point, Point)
        np.testing.assert_array_equal(point.q, [1.0, 2.0, 3.0])

    def test_point_dimension(self):
        with pytest.raises(ConfigError):
            config.Submanifold({"type": "point", "at": [1, 2]}, "P").build(3)

    def test_levelset(self):
        data = {"type": "levelset", "rows": [[0, 0, 1]], "offset": [0.5]}
        levelset = config.Submanifold(data, "Q").build(3)
        assert isinstance(levelset, LevelSet)
        assert levelset.dim(3) == 2

    def test_levelset_needs_matching_offset(self):
        with pytest.raises(ConfigError):
            config.Submanifold({"type": "levelset", "rows": [[0, 0, 1]], "offset": [0, 1]}, "Q")
        with pytest.raises(ConfigError):
            config.Submanifold({"type": "levelset", "rows": [[0, 0, 1]]}, "Q")

    def test_whole(self):
        assert isinstance(config.Submanifold({"type": "whole"}, "Q").build(4), Whole)

    def test_point_needs_coordinates(self):
        with pytest.raises(ConfigError) as exc:
            config.Submanifold({"type": "point"}, "P")
        assert "'at' in P" in str(exc.value)


class TestThreads:
    def test_default(self, monkeypatch):
        monkeypatch.delenv(config.THREADS_ENV, raising=False)
        assert config.thread_count() == 1

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv(config.THREADS_ENV, "4")
        assert config.thread_count() == 4
        monkeypatch.setenv(config.THREADS_ENV, "0")
        assert config.thread_count() == 1

    def test_bad_value(self, monkeypatch):
        monkeypatch.setenv(config.THREADS_ENV, "many")
        with pytest.raises(ConfigError):
            config.thread_count()
