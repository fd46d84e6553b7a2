"""Inner multi-objective search over placement and mapping for a fixed composition.

The default solver is a Pareto local search whose perturbation operator is
picked by a discounted UCB bandit rewarded for archive improvements. A plain
simulated-annealing search is kept as a fallback for comparison. Every
candidate passes the area and warpage checks before it is evaluated.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..catalog import Composition
from ..errors import ConfigurationError
from ..topology import Placement
from .pareto import ParetoArchive
from .problem import Design, DesignPoint, Evaluator, Problem

log = logging.getLogger(__name__)

OPERATORS = ("swap", "toggle", "offset", "fresh")
SOLVERS = ("bandit", "amosa")


def new_archive(capacity: Optional[int] = 256) -> ParetoArchive[DesignPoint]:
    return ParetoArchive(lambda p: p.evaluation.objectives, lambda p: p.design_id, capacity)


# --- perturbation operators -------------------------------------------------

def _with(pl: Placement, surface, embedded) -> Placement:
    return Placement(pl.rows, pl.cols, pl.pitch_mm, pl.kind, tuple(surface), tuple(embedded))


def _normalized(design: Design, placement: Placement) -> Design:
    n = placement.n_chiplets
    return Design(placement, design.offset % n if n else 0, design.fresh)


def op_swap(design: Design, rng: np.random.Generator, catalog) -> Optional[Design]:
    """Exchange the positions of two chiplets of different types."""
    pl = design.placement
    slots = [("s", p, t) for p, t in enumerate(pl.surface)] + [("e", k, t) for k, (_, t) in enumerate(pl.embedded)]
    pairs = []
    for a, b in itertools.combinations(range(len(slots)), 2):
        (la, _, ta), (lb, _, tb) = slots[a], slots[b]
        if ta == tb:
            continue
        if (la == "e" and not catalog[tb].embeddable) or (lb == "e" and not catalog[ta].embeddable):
            continue
        pairs.append((a, b))
    if not pairs:
        return None
    a, b = pairs[rng.integers(len(pairs))]
    surface = list(pl.surface)
    embedded = [list(e) for e in pl.embedded]

    def put(slot, t):
        layer, i, _ = slot
        if layer == "s":
            surface[i] = t
        else:
            embedded[i][1] = t

    put(slots[a], slots[b][2])
    put(slots[b], slots[a][2])
    return _normalized(design, _with(pl, surface, [tuple(e) for e in embedded]))


def _embed(pl: Placement, p: int, host_choice) -> Optional[Placement]:
    """Move surface chiplet ``p`` below the surface; the last surface chiplet fills its cell."""
    hosts = {h for h, _ in pl.embedded}
    if p in hosts or pl.n_surface < 2:
        return None
    t = pl.surface[p]
    last = pl.n_surface - 1
    surface = list(pl.surface)
    embedded = list(pl.embedded)
    if p != last:
        surface[p] = surface[last]
        embedded = [(p if h == last else h, tt) for h, tt in embedded]
    surface.pop()
    free = sorted(set(range(len(surface))) - {h for h, _ in embedded})
    if not free:
        return None
    embedded.append((host_choice(free), t))
    return _with(pl, surface, embedded)


def op_toggle(design: Design, rng: np.random.Generator, catalog) -> Optional[Design]:
    """Embed a surface chiplet, lift an embedded one to the surface, or move it to another host."""
    pl = design.placement
    hosts = {h for h, _ in pl.embedded}
    moves = []
    for p, t in enumerate(pl.surface):
        if catalog[t].embeddable and p not in hosts and pl.n_surface >= 2:
            moves.append(("embed", p))
    if pl.n_surface < pl.rows * pl.cols:
        moves += [("lift", k) for k in range(pl.n_embedded)]
    if pl.n_surface > pl.n_embedded:
        moves += [("rehost", k) for k in range(pl.n_embedded)]
    if not moves:
        return None
    kind, i = moves[rng.integers(len(moves))]
    pick = lambda free: free[rng.integers(len(free))]
    if kind == "embed":
        new = _embed(pl, i, pick)
    elif kind == "lift":
        t = pl.embedded[i][1]
        embedded = [e for k, e in enumerate(pl.embedded) if k != i]
        new = _with(pl, list(pl.surface) + [t], embedded)
    else:
        free = sorted(set(range(pl.n_surface)) - hosts)
        embedded = list(pl.embedded)
        embedded[i] = (pick(free), embedded[i][1])
        new = _with(pl, pl.surface, embedded)
    return None if new is None else _normalized(design, new)


def op_offset(design: Design, rng: np.random.Generator, catalog) -> Optional[Design]:
    """Rotate the start of the greedy mapping walk."""
    n = design.placement.n_chiplets
    if n < 2:
        return None
    shift = int(rng.integers(1, n))
    return Design(design.placement, (design.offset + shift) % n, design.fresh)


def op_fresh(design: Design, rng: np.random.Generator, catalog, layer_ids=()) -> Optional[Design]:
    """Toggle whether one layer must start on an untouched chiplet (re-splits it)."""
    if not layer_ids:
        return None
    lid = layer_ids[rng.integers(len(layer_ids))]
    return Design(design.placement, design.offset, design.fresh ^ frozenset([lid]))


# --- solver -----------------------------------------------------------------

@dataclass
class InnerResult:
    archive: ParetoArchive
    n_evals: int
    n_attempts: int
    diagnostic: str = ""
    operator_stats: dict = field(default_factory=dict)

    @property
    def points(self) -> list[DesignPoint]:
        return self.archive.items()


def initial_design(evaluator: Evaluator, comp: Composition) -> Optional[Design]:
    """Canonical placement of ``comp``, embedding more chiplets while it fails the structural checks."""
    p = evaluator.problem
    cat = p.catalog
    surf, emb = list(comp.surface_counts), list(comp.embedded_counts)
    order = sorted((i for i in range(len(cat)) if cat[i].embeddable), key=lambda i: (-cat[i].area_mm2, i))
    while True:
        c = Composition(tuple(surf), tuple(emb))
        if c.n_surface <= p.n_cells and c.n_embedded <= c.n_surface:
            d = Design(p.canonical(c))
            if evaluator.admissible(d):
                return d
        movable = [i for i in order if surf[i] > 0]
        if not movable or c.n_embedded + 1 > c.n_surface - 1:
            return None
        surf[movable[0]] -= 1
        emb[movable[0]] += 1


class _Search:
    """Bookkeeping shared by both solvers: uniqueness, pruning and the archive."""

    def __init__(self, evaluator: Evaluator, budget: int, capacity: Optional[int]):
        self.ev = evaluator
        self.budget = budget
        self.archive = new_archive(capacity)
        self.admissible: dict = {}
        self.n_evals = 0
        self.n_pruned = 0

    def try_design(self, d: Design) -> tuple[bool, bool, Optional[DesignPoint]]:
        """(was new, admissible, point or None). Only admissible designs are evaluated."""
        k = d.key()
        if k in self.admissible:
            return False, self.admissible[k], None
        ok = self.ev.admissible(d)
        self.admissible[k] = ok
        if not ok:
            self.n_pruned += 1
            return True, False, None
        self.n_evals += 1
        return True, True, self.ev.try_evaluate(d)

    @property
    def exhausted(self) -> bool:
        return self.n_evals >= self.budget


def inner_moo_solve(alpha: Composition, problem: Problem, budget: int, seed: int, *,
                    solver: str = "bandit", evaluator: Optional[Evaluator] = None,
                    capacity: Optional[int] = 256, stall_limit: int = 3000,
                    ucb_c: float = 0.5, discount: float = 0.98) -> InnerResult:
    """Approximate Pareto set of (placement, mapping) designs for composition ``alpha``.

    ``budget`` counts evaluated designs. The search stops early when no new
    design has been produced for ``stall_limit`` consecutive attempts.
    """
    if budget <= 0:
        raise ConfigurationError("inner budget must be > 0")
    if solver not in SOLVERS:
        raise ConfigurationError(f"unknown inner solver {solver!r}")
    ev = evaluator or Evaluator(problem)
    alpha.validate(problem.catalog)
    start = initial_design(ev, alpha)
    if start is None:
        msg = f"composition {alpha}: no placement satisfies the area and warpage limits"
        log.info(msg)
        return InnerResult(new_archive(capacity), 0, 0, msg)
    s = _Search(ev, budget, capacity)
    _, _, base = s.try_design(start)
    if base is None:
        msg = f"composition {alpha}: workload does not fit the baseline placement"
        log.info(msg)
        return InnerResult(s.archive, s.n_evals, 1, msg)
    s.archive.add(base)
    rng = np.random.default_rng(seed)
    layer_ids = tuple(l.id for l in problem.workload.layers)
    ops = {
        "swap": lambda d: op_swap(d, rng, problem.catalog),
        "toggle": lambda d: op_toggle(d, rng, problem.catalog),
        "offset": lambda d: op_offset(d, rng, problem.catalog),
        "fresh": lambda d: op_fresh(d, rng, problem.catalog, layer_ids),
    }
    if solver == "bandit":
        attempts, stats = _bandit(s, base, ops, rng, stall_limit, ucb_c, discount)
    else:
        attempts, stats = _amosa(s, base, ops, rng, stall_limit)
    return InnerResult(s.archive, s.n_evals, attempts + 1, "", stats)


def _bandit(s: _Search, base: DesignPoint, ops, rng, stall_limit, c, gamma):
    names = list(OPERATORS)
    n = np.zeros(len(names))
    r = np.zeros(len(names))
    walker = base.design
    attempts = stall = 0
    while not s.exhausted and stall < stall_limit:
        attempts += 1
        untried = [i for i in range(len(names)) if n[i] == 0]
        if untried:
            k = untried[0]
        else:
            total = n.sum()
            score = r / n + c * np.sqrt(2.0 * math.log(total) / n)
            k = int(np.argmax(score))
        members = s.archive._sorted or s.archive.items()
        parent = members[rng.integers(len(members))].design if rng.random() < 0.5 else walker
        cand = ops[names[k]](parent)
        n *= gamma
        r *= gamma
        n[k] += 1.0
        if cand is None:
            stall += 1
            continue
        new, ok, point = s.try_design(cand)
        if ok:
            walker = cand
        if not new:
            stall += 1
            continue
        stall = 0
        if point is not None and s.archive.add(point):
            r[k] += 1.0
        if rng.random() < 0.02:
            walker = members[rng.integers(len(members))].design
    return attempts, {names[i]: float(r[i] / n[i]) if n[i] else 0.0 for i in range(len(names))}


def _amosa(s: _Search, base: DesignPoint, ops, rng, stall_limit, t0: float = 1.0, t_end: float = 1e-3):
    names = list(OPERATORS)
    current = base
    attempts = stall = 0
    while not s.exhausted and stall < stall_limit:
        attempts += 1
        frac = s.n_evals / max(s.budget, 1)
        temp = t0 * (t_end / t0) ** frac
        cand = ops[names[rng.integers(len(names))]](current.design)
        if cand is None:
            stall += 1
            continue
        new, _, point = s.try_design(cand)
        if not new:
            stall += 1
            continue
        stall = 0
        if point is None:
            continue
        s.archive.add(point)
        delta = math.log(point.evaluation.edp) - math.log(current.evaluation.edp)
        if delta <= 0 or rng.random() < math.exp(-delta / temp):
            current = point
    return attempts, {}


# --- exhaustive oracle ------------------------------------------------------

def _distinct_perms(items) -> list[tuple]:
    return sorted(set(itertools.permutations(items)))


def enumerate_designs(problem: Problem, alpha: Composition):
    """Every design the inner search can reach for ``alpha`` (small instances only)."""
    cat = problem.catalog
    total = alpha.total
    layer_ids = [l.id for l in problem.workload.layers]
    fresh_sets = [frozenset(c) for r in range(len(layer_ids) + 1)
                  for c in itertools.combinations(layer_ids, r)]
    ranges = [range(total[i] + 1) if cat[i].embeddable else range(1) for i in range(len(cat))]
    for emb in itertools.product(*ranges):
        surf = [t - e for t, e in zip(total, emb)]
        n_s, n_e = sum(surf), sum(emb)
        if n_s > problem.n_cells or n_e > n_s or n_s == 0:
            continue
        surf_items = [i for i, k in enumerate(surf) for _ in range(k)]
        emb_items = [i for i, k in enumerate(emb) for _ in range(k)]
        for seq in _distinct_perms(surf_items):
            for hosts in itertools.combinations(range(n_s), n_e):
                for types in _distinct_perms(emb_items):
                    pl = Placement(problem.rows, problem.cols, problem.pitch_mm, problem.kind,
                                   seq, tuple(zip(hosts, types)))
                    for off in range(n_s + n_e):
                        for fr in fresh_sets:
                            yield Design(pl, off, fr)


def brute_force_front(problem: Problem, alpha: Composition,
                      evaluator: Optional[Evaluator] = None) -> tuple[ParetoArchive, int]:
    """Exact Pareto archive over all admissible designs; returns (archive, designs evaluated)."""
    ev = evaluator or Evaluator(problem)
    archive = new_archive(None)
    count = 0
    for d in enumerate_designs(problem, alpha):
        if not ev.admissible(d):
            continue
        point = ev.try_evaluate(d)
        count += 1
        if point is not None:
            archive.add(point)
    return archive, count
