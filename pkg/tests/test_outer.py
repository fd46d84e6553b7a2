import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chipletdse.errors import ConfigurationError
from chipletdse.optimizer.outer import (CompositionSpace, OuterObjective, TraceRow, _gp_targets,
                                        co_optimize, derive_seed, evaluations_to_optimum,
                                        random_search)
from chipletdse.scenario import load_scenario


@pytest.fixture(scope="module")
def reduced():
    return load_scenario("scenario_reduced")


def test_single_feasible_composition(reduced):
    space = CompositionSpace.for_problem(reduced.problem, [1, 0])
    r = co_optimize(reduced.problem, 5, 50, 0, space=space)
    assert [t.alpha for t in r.trace] == [(1, 0)]
    assert r.best is not None and r.best.composition.total == (1, 0)


def test_no_feasible_composition(reduced):
    space = CompositionSpace.for_problem(reduced.problem, [0, 0])
    with pytest.raises(ConfigurationError):
        co_optimize(reduced.problem, 5, 50, 0, space=space)


def test_trace_monotone_and_deterministic(reduced):
    space = reduced.space()
    a = co_optimize(reduced.problem, 12, 60, 3, space=space)
    b = co_optimize(reduced.problem, 12, 60, 3, space=space)
    assert a.trace == b.trace
    inc = [t.incumbent_edp for t in a.trace]
    assert all(x >= y for x, y in zip(inc, inc[1:]))
    assert inc[-1] == a.best_edp
    assert len({t.alpha for t in a.trace}) == len(a.trace)


def test_archive_only_thermally_feasible(reduced):
    r = co_optimize(reduced.problem, 9, 60, 0, space=reduced.space())
    assert len(r.archive) > 0
    assert all(p.evaluation.feasible for p in r.archive.items())


def test_threads_do_not_change_result(reduced):
    space = reduced.space()
    a = co_optimize(reduced.problem, 10, 40, 5, space=space, threads=1)
    b = co_optimize(reduced.problem, 10, 40, 5, space=space, threads=4)
    assert a.trace == b.trace


def test_pool_restricted_to_area_feasible(reduced):
    space = reduced.space()
    rng = np.random.default_rng(0)
    for a in space.sample(rng, 100):
        assert space.feasible(a)
    # 4x4 grid: no more than 16 surface chiplets
    assert not space.feasible((6, 6)) or sum((6, 6)) <= 16


def test_random_search_visits_distinct(reduced):
    r = random_search(reduced.problem, 10, 40, 1, space=reduced.space())
    assert len({t.alpha for t in r.trace}) == 10


def test_gp_targets_replace_infinity():
    y = _gp_targets([math.e, math.inf, 1.0])
    assert y.tolist() == [1.0, 2.0, 0.0]
    assert _gp_targets([math.inf]).tolist() == [0.0]


def test_evaluations_to_optimum():
    tr = [TraceRow(1, "init", (1,), 3.0, 3.0), TraceRow(2, "bo", (2,), 1.0, 1.0)]
    assert evaluations_to_optimum(tr, 1.0) == 2
    assert evaluations_to_optimum(tr, 0.5) is None


@given(st.integers(0, 2 ** 64 - 1), st.lists(st.integers(0, 50), min_size=1, max_size=5))
def test_derive_seed_stable(seed, alpha):
    assert derive_seed(seed, alpha) == derive_seed(seed, list(alpha))


def test_objective_memoised(reduced):
    obj = OuterObjective(reduced.space(), 40, 0)
    a = obj((2, 2))
    assert obj((2, 2)) is a
    with pytest.raises(ConfigurationError):
        obj((7, 7))


def test_bad_budgets(reduced):
    with pytest.raises(ConfigurationError):
        co_optimize(reduced.problem, 0, 10, 0)
    with pytest.raises(ConfigurationError):
        co_optimize(replace(reduced.problem), 5, 0, 0)
