"""Outer loop: Bayesian optimisation over chiplet compositions.

Each composition alpha (a count vector over catalog types) is scored by the
best thermally feasible EDP the inner search finds for it. A GP on log EDP
with expected improvement, maximised over a pool of area-feasible
compositions, chooses the next alpha.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..catalog import Composition
from ..errors import ConfigurationError
from ..package import split_for_area
from .gp import GpModel, gp_expected_improvement
from .inner import InnerResult, inner_moo_solve, new_archive
from .pareto import ParetoArchive
from .problem import DesignPoint, Evaluator, Problem

log = logging.getLogger(__name__)

Alpha = tuple[int, ...]
# log-EDP penalty (in nats above the worst finite value) standing in for +inf
INFEASIBLE_PENALTY = 1.0
ENUMERATION_LIMIT = 200_000


@dataclass(frozen=True)
class CompositionSpace:
    """Integer count vectors bounded per type, restricted to area-feasible ones."""

    problem: Problem
    max_counts: tuple[int, ...]

    @classmethod
    def for_problem(cls, problem: Problem, max_counts: Optional[Sequence[int]] = None) -> "CompositionSpace":
        if max_counts is None:
            budget = problem.interposer.area_mm2 + problem.interposer.embedded_capacity_mm2
            max_counts = [min(int(budget // c.area_mm2), 2 * problem.n_cells) for c in problem.catalog]
        if len(max_counts) != len(problem.catalog) or any(m < 0 for m in max_counts):
            raise ConfigurationError("max_counts must give a non-negative bound per catalog type")
        return cls(problem, tuple(int(m) for m in max_counts))

    @property
    def size(self) -> int:
        return math.prod(m + 1 for m in self.max_counts)

    def split(self, alpha: Sequence[int]) -> Optional[Composition]:
        """Area-feasible surface/embedded split of ``alpha`` that fits the grid, or None."""
        alpha = tuple(int(a) for a in alpha)
        if sum(alpha) == 0 or any(a < 0 or a > m for a, m in zip(alpha, self.max_counts)):
            return None
        p = self.problem
        comp = split_for_area(alpha, p.catalog, p.interposer)
        if comp is None or comp.n_surface > p.n_cells or comp.n_embedded > comp.n_surface:
            return None
        return comp

    def feasible(self, alpha: Sequence[int]) -> bool:
        return self.split(alpha) is not None

    def normalize(self, alphas) -> np.ndarray:
        scale = np.array([max(m, 1) for m in self.max_counts], dtype=float)
        return np.atleast_2d(np.asarray(alphas, dtype=float)) / scale

    def enumerate(self) -> list[Alpha]:
        if self.size > ENUMERATION_LIMIT:
            raise ConfigurationError(f"composition space too large to enumerate ({self.size})")
        return [a for a in itertools.product(*(range(m + 1) for m in self.max_counts)) if self.feasible(a)]

    def sample(self, rng: np.random.Generator, n: int, exclude=frozenset()) -> list[Alpha]:
        """Up to ``n`` distinct feasible compositions not in ``exclude``."""
        if self.size <= ENUMERATION_LIMIT:
            cands = [a for a in self._all() if a not in exclude]
            if len(cands) <= n:
                return cands
            idx = rng.choice(len(cands), size=n, replace=False)
            return [cands[i] for i in sorted(idx)]
        area = self.problem.catalog.vector("area_mm2")
        budget = self.problem.interposer.area_mm2 + self.problem.interposer.embedded_capacity_mm2
        out: list[Alpha] = []
        seen = set(exclude)
        for _ in range(50 * n):
            if len(out) >= n:
                break
            share = rng.dirichlet(np.ones(len(area)))
            fill = rng.uniform(0.3, 1.0)
            a = tuple(int(min(m, math.floor(s * fill * budget / ar)))
                      for s, ar, m in zip(share, area, self.max_counts))
            if a not in seen and self.feasible(a):
                seen.add(a)
                out.append(a)
        return out

    def _all(self) -> list[Alpha]:
        cached = getattr(self, "_cache", None)
        if cached is None:
            cached = self.enumerate()
            object.__setattr__(self, "_cache", cached)
        return cached


def derive_seed(seed: int, alpha: Sequence[int]) -> int:
    return int(np.random.SeedSequence([int(seed) % 2 ** 63] + [int(a) for a in alpha]).generate_state(1)[0])


@dataclass
class BestEdp:
    edp: float
    point: Optional[DesignPoint]
    feasible: list[DesignPoint]
    inner: InnerResult


def best_edp(alpha: Composition, problem: Problem, budget: int, seed: int, *,
             evaluator: Optional[Evaluator] = None, solver: str = "bandit") -> BestEdp:
    """Minimum EDP over the inner archive after discarding designs above T_max (+inf if none)."""
    ev = evaluator or Evaluator(problem)
    inner = inner_moo_solve(alpha, problem, budget, seed, solver=solver, evaluator=ev)
    feasible = []
    for point in inner.archive.items():
        point = ev.with_thermal(point)
        if point.evaluation.feasible_thermal:
            feasible.append(point)
    if not feasible:
        return BestEdp(math.inf, None, [], inner)
    best = min(feasible, key=lambda p: (p.evaluation.edp, p.design_id))
    return BestEdp(best.evaluation.edp, best, feasible, inner)


@dataclass(frozen=True)
class TraceRow:
    step: int
    phase: str
    alpha: Alpha
    best_edp: float
    incumbent_edp: float


@dataclass
class CoOptResult:
    best: Optional[DesignPoint]
    best_edp: float
    archive: ParetoArchive
    trace: list[TraceRow]
    evaluated: dict = field(default_factory=dict)


class OuterObjective:
    """Memoised alpha -> best_edp for one (problem, inner budget, seed)."""

    def __init__(self, space: CompositionSpace, inner_budget: int, seed: int,
                 solver: str = "bandit"):
        self.space = space
        self.problem = space.problem
        self.inner_budget = inner_budget
        self.seed = seed
        self.solver = solver
        self.cache: dict[Alpha, BestEdp] = {}

    def __call__(self, alpha: Alpha) -> BestEdp:
        alpha = tuple(int(a) for a in alpha)
        if alpha not in self.cache:
            comp = self.space.split(alpha)
            if comp is None:
                raise ConfigurationError(f"composition {list(alpha)} is not area-feasible")
            self.cache[alpha] = best_edp(comp, self.problem, self.inner_budget,
                                         derive_seed(self.seed, alpha), solver=self.solver)
        return self.cache[alpha]

    def many(self, alphas: Sequence[Alpha], threads: int = 1) -> list[BestEdp]:
        todo = [a for a in dict.fromkeys(alphas) if a not in self.cache]
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(self, todo))
        return [self(a) for a in alphas]


def _gp_targets(values: Sequence[float]) -> np.ndarray:
    logs = np.array([math.log(v) if math.isfinite(v) and v > 0 else math.nan for v in values])
    finite = logs[np.isfinite(logs)]
    fill = (finite.max() + INFEASIBLE_PENALTY) if finite.size else 0.0
    return np.where(np.isfinite(logs), logs, fill)


def _finish(objective: OuterObjective, trace: list[TraceRow]) -> CoOptResult:
    archive = new_archive()
    best_point, best_val = None, math.inf
    for row in trace:
        res = objective.cache[row.alpha]
        for p in res.feasible:
            archive.add(p)
        if res.point is not None and (res.edp, res.point.design_id) < (best_val, best_point.design_id if best_point else "~"):
            best_point, best_val = res.point, res.edp
    return CoOptResult(best_point, best_val, archive, trace,
                       {a: objective.cache[a].edp for a in dict.fromkeys(r.alpha for r in trace)})


def co_optimize(problem: Problem, outer_budget: int, inner_budget: int, seed: int, *,
                space: Optional[CompositionSpace] = None, n0: int = 8, pool_size: int = 512,
                solver: str = "bandit", threads: int = 1,
                objective: Optional[OuterObjective] = None) -> CoOptResult:
    """Alternating optimisation: GP/EI over compositions, inner Pareto search per composition."""
    if outer_budget <= 0 or inner_budget <= 0:
        raise ConfigurationError("outer and inner budgets must be > 0")
    space = space or CompositionSpace.for_problem(problem)
    objective = objective or OuterObjective(space, inner_budget, seed, solver)
    rng = np.random.default_rng(seed)
    init = space.sample(rng, min(n0, outer_budget))
    if not init:
        raise ConfigurationError("no area-feasible composition exists")
    trace: list[TraceRow] = []
    incumbent = math.inf

    def record(alpha, phase, res):
        nonlocal incumbent
        incumbent = min(incumbent, res.edp)
        trace.append(TraceRow(len(trace) + 1, phase, alpha, res.edp, incumbent))
        log.info("outer step %d (%s) alpha=%s best_edp=%.4g incumbent=%.4g",
                 len(trace), phase, list(alpha), res.edp, incumbent)

    for alpha, res in zip(init, objective.many(init, threads)):
        record(alpha, "init", res)
    seen = {r.alpha for r in trace}
    while len(trace) < outer_budget:
        pool = space.sample(rng, pool_size, exclude=seen)
        if not pool:
            break
        xs = [r.alpha for r in trace]
        y = _gp_targets([r.best_edp for r in trace])
        gp = GpModel().fit(space.normalize(xs), y)
        ei = gp_expected_improvement(gp, space.normalize(pool), float(y.min()))
        pick = max(range(len(pool)), key=lambda i: (ei[i], tuple(-v for v in pool[i])))
        alpha = pool[pick]
        seen.add(alpha)
        record(alpha, "bo", objective(alpha))
    return _finish(objective, trace)


def random_search(problem: Problem, outer_budget: int, inner_budget: int, seed: int, *,
                  space: Optional[CompositionSpace] = None,
                  objective: Optional[OuterObjective] = None) -> CoOptResult:
    """Uniform sampling of feasible compositions without replacement (baseline for the BO loop)."""
    space = space or CompositionSpace.for_problem(problem)
    objective = objective or OuterObjective(space, inner_budget, seed)
    rng = np.random.default_rng(seed)
    order = space.sample(rng, outer_budget)
    rng.shuffle(order)
    trace, incumbent = [], math.inf
    for alpha in order:
        res = objective(alpha)
        incumbent = min(incumbent, res.edp)
        trace.append(TraceRow(len(trace) + 1, "random", alpha, res.edp, incumbent))
    return _finish(objective, trace)


def exhaustive_optimum(space: CompositionSpace, objective: OuterObjective) -> tuple[float, list[Alpha]]:
    """Minimum best_edp over every feasible composition, and the compositions attaining it."""
    alphas = space.enumerate()
    vals = {a: objective(a).edp for a in alphas}
    best = min(vals.values())
    return best, sorted(a for a, v in vals.items() if v == best)


def evaluations_to_optimum(trace: Sequence[TraceRow], optimum: float, rtol: float = 1e-12) -> Optional[int]:
    for row in trace:
        if row.incumbent_edp <= optimum * (1 + rtol):
            return row.step
    return None
