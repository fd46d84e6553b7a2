"""Layer-to-chiplet mapping and the resulting inter-chiplet traffic.

The baseline mapping walks the placement's canonical instance order and
fills chiplets greedily in DNN execution order, splitting a layer over the
following chiplets when its weights exceed the remaining capacity. Two knobs
let the optimizer perturb it: a rotation ``offset`` of the walk, and a set of
``fresh`` layers that always start on an untouched chiplet.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .catalog import Catalog, MemTech
from .errors import InsufficientStorageError
from .topology import Placement
from .workload import WorkloadSpec

_EPS = 1e-9


@dataclass(frozen=True)
class MappingFlags:
    forbid_reram_for_dynamic: bool = False
    forbid_reram_entirely: bool = False


@dataclass(frozen=True)
class Mapping:
    assignments: dict  # layer id -> tuple of (instance id, weight fraction)
    n_instances: int
    flags: MappingFlags = MappingFlags()
    offset: int = 0
    fresh: frozenset = field(default_factory=frozenset)

    def hosts(self, layer_id: str) -> tuple[tuple[int, float], ...]:
        return self.assignments[layer_id]

    def used_kb(self, workload: WorkloadSpec) -> np.ndarray:
        used = np.zeros(self.n_instances)
        for layer in workload.layers:
            for inst, frac in self.assignments[layer.id]:
                used[inst] += frac * layer.weight_kb
        return used

    def rows(self) -> list[tuple[str, int, float]]:
        return [(lid, inst, frac) for lid, hosts in self.assignments.items() for inst, frac in hosts]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["layer", "chiplet", "fraction"])
            for lid, inst, frac in self.rows():
                w.writerow([lid, inst, f"{frac:.12g}"])


def eligible(spec, layer, flags: MappingFlags) -> bool:
    if spec.mem_tech != MemTech.ReRAM:
        return True
    if flags.forbid_reram_entirely:
        return False
    return not (flags.forbid_reram_for_dynamic and layer.dynamic)


def map_layers(workload: WorkloadSpec, placement: Placement, catalog: Catalog,
               flags: MappingFlags = MappingFlags(), offset: int = 0,
               fresh: Iterable[str] = ()) -> Mapping:
    types = placement.instance_types()
    seq = placement.canonical_instances()
    n = len(seq)
    if n:
        offset %= n
        seq = seq[offset:] + seq[:offset]
    fresh = frozenset(fresh)
    capacity = [catalog[t].storage_kb for t in types]
    remaining = list(capacity)
    assignments: dict[str, tuple[tuple[int, float], ...]] = {}
    ptr = 0
    for layer in workload.layers:
        if layer.id in fresh and ptr < n and remaining[seq[ptr]] < capacity[seq[ptr]] - _EPS:
            ptr += 1
        need = layer.weight_kb
        hosts = []
        while need > _EPS * layer.weight_kb:
            if ptr >= n:
                raise InsufficientStorageError(
                    layer.id, f"insufficient chiplet storage: layer {layer.id!r} "
                              f"({layer.weight_kb:.1f} KB) does not fit the remaining eligible chiplets")
            inst = seq[ptr]
            if remaining[inst] <= _EPS or not eligible(catalog[types[inst]], layer, flags):
                ptr += 1
                continue
            take = min(need, remaining[inst])
            hosts.append((inst, take / layer.weight_kb))
            remaining[inst] -= take
            need -= take
            if remaining[inst] <= _EPS:
                ptr += 1
        total = sum(f for _, f in hosts)
        assignments[layer.id] = tuple((i, f / total) for i, f in hosts)
    return Mapping(assignments, len(types), flags, offset, fresh)


def build_traffic(workload: WorkloadSpec, mapping: Mapping) -> np.ndarray:
    """Activation bits between chiplet instances (row = source, column = destination).

    For every layer edge, ``Act_l`` is split over source and destination hosts
    by their weight fractions; the share that stays on one chiplet is dropped.
    """
    t = np.zeros((mapping.n_instances, mapping.n_instances))
    for src, dst in workload.edges():
        act = src.activations_out_bits
        if act == 0:
            continue
        for i, fi in mapping.assignments[src.id]:
            for j, fj in mapping.assignments[dst.id]:
                if i != j:
                    t[i, j] += act * fi * fj
    return t


def intra_chiplet_bits(workload: WorkloadSpec, mapping: Mapping) -> float:
    """Activation bits that never leave a chiplet (dropped from the traffic matrix)."""
    total = 0.0
    for src, dst in workload.edges():
        hosts_dst = dict(mapping.assignments[dst.id])
        for i, fi in mapping.assignments[src.id]:
            total += src.activations_out_bits * fi * hosts_dst.get(i, 0.0)
    return total
