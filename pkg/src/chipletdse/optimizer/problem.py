"""Design points and the evaluator shared by the inner and outer loops."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property, lru_cache
from typing import Optional

from ..catalog import Catalog, Composition, InterposerSpec
from ..errors import ConfigurationError, InsufficientStorageError, InternalError
from ..mapper import Mapping, MappingFlags, build_traffic, map_layers
from ..package import (WARPAGE_MAX_UM, check_area, check_warpage, fabrication_cost)
from ..perf import LinkParams, evaluate_perf
from ..thermal import ThermalParams, build_grid, solve_steady_state
from ..topology import NoiGraph, Placement, build_topology, canonical_placement
from ..workload import WorkloadSpec


@dataclass(frozen=True)
class Constraints:
    t_max_c: float = 75.0
    warpage_max_um: float = WARPAGE_MAX_UM

    def __post_init__(self):
        if self.t_max_c < 0 or not self.warpage_max_um > 0:
            raise ConfigurationError("constraints: t_max_c must be >= 0 and warpage_max_um > 0")


@dataclass(frozen=True)
class Design:
    """Genotype searched by the inner loop: a placement plus mapping knobs."""

    placement: Placement
    offset: int = 0
    fresh: frozenset = field(default_factory=frozenset)

    def key(self) -> tuple:
        return self.placement.key() + (self.offset, tuple(sorted(self.fresh)))

    @cached_property
    def design_id(self) -> str:
        blob = json.dumps(self.key(), separators=(",", ":")).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {"placement": self.placement.to_dict(), "offset": self.offset,
                "fresh": sorted(self.fresh)}

    @classmethod
    def from_dict(cls, d: dict) -> "Design":
        return cls(Placement.from_dict(d["placement"]), int(d.get("offset", 0)),
                   frozenset(d.get("fresh", ())))


@dataclass(frozen=True)
class Evaluation:
    latency_s: float
    energy_j: float
    edp: float
    compute_latency_s: float
    comm_latency_s: float
    compute_energy_j: float
    comm_energy_j: float
    max_warpage_um: float
    cost_norm: float
    feasible_area: bool
    feasible_warpage: bool
    t_peak_c: float = math.nan
    feasible_thermal: Optional[bool] = None

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.latency_s, self.energy_j)

    @property
    def feasible(self) -> bool:
        return bool(self.feasible_area and self.feasible_warpage and self.feasible_thermal)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DesignPoint:
    composition: Composition
    design: Design
    mapping: Mapping
    evaluation: Evaluation

    @property
    def design_id(self) -> str:
        return self.design.design_id

    @property
    def placement(self) -> Placement:
        return self.design.placement

    def to_dict(self) -> dict:
        return {
            "design_id": self.design_id,
            "alpha": list(self.composition.total),
            "surface_counts": list(self.composition.surface_counts),
            "embedded_counts": list(self.composition.embedded_counts),
            **self.design.to_dict(),
            "evaluation": self.evaluation.to_dict(),
        }


@dataclass(frozen=True)
class Problem:
    """Everything fixed while compositions, placements and mappings vary."""

    catalog: Catalog
    workload: WorkloadSpec
    interposer: InterposerSpec
    kind: str = "Floret"
    rows: int = 10
    cols: int = 10
    link: Optional[LinkParams] = None
    thermal: ThermalParams = ThermalParams()
    constraints: Constraints = Constraints()
    flags: MappingFlags = MappingFlags()
    kite_stride: int = 2
    floret_hub_interval: int = 8

    def __post_init__(self):
        if self.link is None:
            object.__setattr__(self, "link", LinkParams.for_interposer(self.interposer))
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("problem grid must be non-empty")

    @property
    def pitch_mm(self) -> float:
        return self.interposer.width_mm / self.cols

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    def canonical(self, comp: Composition) -> Placement:
        return canonical_placement(comp, self.kind, self.rows, self.cols, self.pitch_mm)


def composition_of(placement: Placement, n_types: int) -> Composition:
    surf, emb = placement.counts(n_types)
    return Composition(surf, emb)


class Evaluator:
    """Evaluates designs of one problem; topology graphs are cached per placement."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self._graph = lru_cache(maxsize=4096)(self._build_graph)
        self._warpage = lru_cache(maxsize=1024)(self._warpage_for_area)
        self.n_perf_evals = 0

    def _build_graph(self, placement: Placement) -> NoiGraph:
        p = self.problem
        return build_topology(p.kind, placement, kite_stride=p.kite_stride,
                              floret_hub_interval=p.floret_hub_interval)

    def _warpage_for_area(self, embedded_area_mm2: float):
        p = self.problem
        return check_warpage(p.interposer, p.catalog, embedded_area_mm2,
                             limit_um=p.constraints.warpage_max_um)

    def graph(self, placement: Placement) -> NoiGraph:
        return self._graph(placement)

    def structural_check(self, design: Design) -> tuple[bool, bool, float]:
        """(area ok, warpage ok, max warpage) without any performance evaluation."""
        p = self.problem
        pl = design.placement
        if (pl.rows, pl.cols) != (p.rows, p.cols):
            return False, False, math.nan
        comp = composition_of(pl, len(p.catalog))
        try:
            area_ok = check_area(comp, p.catalog, p.interposer).feasible
        except ConfigurationError:
            return False, False, math.nan
        w = self._warpage(round(sum(p.catalog[t].area_mm2 for _, t in pl.embedded), 9))
        return area_ok, w.feasible, w.max_warpage_um

    def admissible(self, design: Design) -> bool:
        area_ok, warp_ok, _ = self.structural_check(design)
        return area_ok and warp_ok

    def mapping(self, design: Design) -> Mapping:
        p = self.problem
        return map_layers(p.workload, design.placement, p.catalog, p.flags, design.offset, design.fresh)

    def evaluate(self, design: Design, *, thermal: bool = False, require_admissible: bool = True
                 ) -> DesignPoint:
        """Full analytical evaluation.

        With ``require_admissible`` (the optimizer entry point) a design that
        violates the area or warpage limit is a programming error: candidates
        must be pruned before they get here.
        """
        p = self.problem
        area_ok, warp_ok, warp = self.structural_check(design)
        if require_admissible and not (area_ok and warp_ok):
            raise InternalError(f"design {design.design_id} reached the evaluator without passing pruning")
        comp = composition_of(design.placement, len(p.catalog))
        mapping = self.mapping(design)
        graph = self.graph(design.placement)
        traffic = build_traffic(p.workload, mapping)
        perf = evaluate_perf(p.workload, design.placement, mapping, graph, p.catalog, p.link, traffic)
        self.n_perf_evals += 1
        cost = fabrication_cost(comp, p.catalog, p.interposer).total
        ref = fabrication_cost(comp, p.catalog, InterposerSpec.preset(
            "Silicon", p.interposer.width_mm, p.interposer.height_mm)).total
        ev = Evaluation(
            latency_s=perf.latency_s, energy_j=perf.energy_j, edp=perf.edp_js,
            compute_latency_s=perf.compute_latency_s, comm_latency_s=perf.comm_latency_s,
            compute_energy_j=perf.compute_energy_j, comm_energy_j=perf.comm_energy_j,
            max_warpage_um=warp, cost_norm=cost / ref,
            feasible_area=area_ok, feasible_warpage=warp_ok,
        )
        point = DesignPoint(comp, design, mapping, ev)
        return self.with_thermal(point) if thermal else point

    def thermal_solution(self, design: Design):
        p = self.problem
        grid = build_grid(design.placement, p.catalog, p.interposer, p.thermal,
                          self.graph(design.placement))
        return solve_steady_state(grid)

    def with_thermal(self, point: DesignPoint) -> DesignPoint:
        sol = self.thermal_solution(point.design)
        t = sol.peak_c
        ev = replace(point.evaluation, t_peak_c=t,
                     feasible_thermal=bool(t <= self.problem.constraints.t_max_c))
        return replace(point, evaluation=ev)

    def try_evaluate(self, design: Design) -> Optional[DesignPoint]:
        """Evaluate, or None when the workload does not fit the design's storage."""
        try:
            return self.evaluate(design)
        except InsufficientStorageError:
            return None


def baseline_design(problem: Problem, comp: Composition) -> Design:
    return Design(problem.canonical(comp))
