"""Analytical latency, energy and EDP.

Compute latency is the sequential sum of per-chiplet MAC time; communication
latency charges every flow ``(h_ij + delta_router)`` cycles per transfer unit.
Total latency is the max of the two, total energy their sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, InterposerSpec, Material
from .errors import ConfigurationError
from .mapper import Mapping
from .topology import NoiGraph, Placement
from .workload import WorkloadSpec

# pJ/bit defaults in the UCIe / GRS class; glass RDL has lower capacitance.
_LINK_ENERGY_PJ = {
    Material.Silicon: dict(lateral=0.50, vertical=0.10, router=0.20),
    Material.Glass: dict(lateral=0.35, vertical=0.08, router=0.20),
}


@dataclass(frozen=True)
class LinkParams:
    cycle_time_s: float
    router_delay_cycles: float = 1.0
    e_link_lateral_j_per_bit: float = 0.5e-12
    e_link_vertical_j_per_bit: float = 0.1e-12
    e_router_j_per_bit: float = 0.2e-12
    link_width_bits: int = 32
    per_hop_router_delay: bool = False

    def __post_init__(self):
        for key in ("cycle_time_s", "router_delay_cycles", "e_link_lateral_j_per_bit",
                    "e_link_vertical_j_per_bit", "e_router_j_per_bit", "link_width_bits"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"link params: {key} must be > 0")

    @classmethod
    def for_interposer(cls, interposer: InterposerSpec, **overrides) -> "LinkParams":
        e = _LINK_ENERGY_PJ[interposer.material]
        params = dict(
            cycle_time_s=interposer.cycle_time_s,
            e_link_lateral_j_per_bit=e["lateral"] * 1e-12,
            e_link_vertical_j_per_bit=e["vertical"] * 1e-12,
            e_router_j_per_bit=e["router"] * 1e-12,
        )
        params.update(overrides)
        return cls(**params)


@dataclass(frozen=True)
class PerfResult:
    compute_latency_s: float
    comm_latency_s: float
    compute_energy_j: float
    comm_energy_j: float

    @property
    def latency_s(self) -> float:
        return max(self.compute_latency_s, self.comm_latency_s)

    @property
    def energy_j(self) -> float:
        return self.compute_energy_j + self.comm_energy_j

    @property
    def edp_js(self) -> float:
        return self.latency_s * self.energy_j


def _host_types(placement: Placement) -> list[int]:
    return placement.instance_types()


def compute_latency(workload: WorkloadSpec, mapping: Mapping, catalog: Catalog,
                    placement: Placement) -> float:
    types = _host_types(placement)
    total = 0.0
    for layer in workload.layers:
        for inst, frac in mapping.assignments[layer.id]:
            total += layer.macs * frac / catalog[types[inst]].ops_per_s
    return total


def compute_energy(workload: WorkloadSpec, mapping: Mapping, catalog: Catalog,
                   placement: Placement) -> float:
    types = _host_types(placement)
    total = 0.0
    for layer in workload.layers:
        for inst, frac in mapping.assignments[layer.id]:
            total += layer.sparsity * layer.macs * frac * catalog[types[inst]].energy_per_mac_j
    return total


def _check_shape(traffic: np.ndarray, graph: NoiGraph) -> np.ndarray:
    t = np.asarray(traffic, dtype=float)
    if t.shape != (graph.n_nodes, graph.n_nodes):
        raise ConfigurationError(f"traffic shape {t.shape} does not match {graph.n_nodes} nodes")
    return t


def comm_latency(traffic: np.ndarray, graph: NoiGraph, lp: LinkParams) -> float:
    t = _check_shape(traffic, graph)
    if not t.any():
        return 0.0
    h = graph.hops.astype(float)
    if lp.per_hop_router_delay:
        cycles = h * (1.0 + lp.router_delay_cycles)
    else:
        cycles = h + lp.router_delay_cycles
    units = t / lp.link_width_bits
    np.fill_diagonal(cycles, 0.0)
    return float((units * cycles).sum() * lp.cycle_time_s)


def comm_energy(traffic: np.ndarray, graph: NoiGraph, lp: LinkParams) -> float:
    t = _check_shape(traffic, graph)
    if not t.any():
        return 0.0
    vert = graph.vertical_hops.astype(float)
    lat = graph.hops.astype(float) - vert
    per_bit = (lat * (lp.e_link_lateral_j_per_bit + lp.e_router_j_per_bit)
               + vert * (lp.e_link_vertical_j_per_bit + lp.e_router_j_per_bit))
    return float((t * per_bit).sum())


def evaluate_perf(workload: WorkloadSpec, placement: Placement, mapping: Mapping,
                  graph: NoiGraph, catalog: Catalog, lp: LinkParams,
                  traffic: np.ndarray | None = None) -> PerfResult:
    from .mapper import build_traffic

    if traffic is None:
        traffic = build_traffic(workload, mapping)
    return PerfResult(
        compute_latency_s=compute_latency(workload, mapping, catalog, placement),
        comm_latency_s=comm_latency(traffic, graph, lp),
        compute_energy_j=compute_energy(workload, mapping, catalog, placement),
        comm_energy_j=comm_energy(traffic, graph, lp),
    )
