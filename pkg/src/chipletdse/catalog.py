"""Chiplet types, interposer materials and composition-level aggregates.

The default catalog (``data/catalog_default.json``) holds the five PIM chiplet
types used throughout: Standard, Shared, Adder, Accumulator and ADCLess, in
that order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError


class MemTech(str, Enum):
    SRAM = "SRAM"
    ReRAM = "ReRAM"


class Material(str, Enum):
    Silicon = "Silicon"
    Glass = "Glass"


@dataclass(frozen=True)
class ChipletSpec:
    name: str
    mem_tech: MemTech
    crossbar_dims: tuple[int, int]
    bits_per_cell: int
    adc_precision: int
    clock_mhz: float
    storage_kb: float
    area_mm2: float
    tops: float
    energy_per_mac_j: float
    embeddable: bool = False
    peak_power_w: Optional[float] = None

    def __post_init__(self):
        numeric = {
            "bits_per_cell": self.bits_per_cell,
            "adc_precision": self.adc_precision,
            "clock_mhz": self.clock_mhz,
            "storage_kb": self.storage_kb,
            "area_mm2": self.area_mm2,
            "tops": self.tops,
            "energy_per_mac_j": self.energy_per_mac_j,
        }
        for key, value in numeric.items():
            if not value > 0:
                raise ConfigurationError(f"chiplet {self.name!r}: {key} must be > 0, got {value}")
        if any(d <= 0 for d in self.crossbar_dims):
            raise ConfigurationError(f"chiplet {self.name!r}: crossbar_dims must be positive")
        if self.peak_power_w is not None and not self.peak_power_w > 0:
            raise ConfigurationError(f"chiplet {self.name!r}: peak_power_w must be > 0")
        if self.embeddable and self.mem_tech != MemTech.SRAM:
            raise ConfigurationError(f"chiplet {self.name!r}: only SRAM chiplets may be embedded")

    @property
    def ops_per_s(self) -> float:
        return self.tops * 1e12

    @property
    def side_mm(self) -> float:
        return math.sqrt(self.area_mm2)

    @classmethod
    def from_dict(cls, d: dict) -> "ChipletSpec":
        d = dict(d)
        d["mem_tech"] = MemTech(d["mem_tech"])
        d["crossbar_dims"] = tuple(d.get("crossbar_dims", (128, 128)))
        return cls(**d)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "mem_tech": self.mem_tech.value,
            "crossbar_dims": list(self.crossbar_dims),
            "bits_per_cell": self.bits_per_cell,
            "adc_precision": self.adc_precision,
            "clock_mhz": self.clock_mhz,
            "storage_kb": self.storage_kb,
            "area_mm2": self.area_mm2,
            "tops": self.tops,
            "energy_per_mac_j": self.energy_per_mac_j,
            "embeddable": self.embeddable,
        }
        if self.peak_power_w is not None:
            d["peak_power_w"] = self.peak_power_w
        return d


@dataclass(frozen=True)
class Catalog:
    """Ordered chiplet types plus the single chiplet CTE used for warpage."""

    chiplets: tuple[ChipletSpec, ...]
    chiplet_cte_per_k: float = 3.0e-6

    def __len__(self) -> int:
        return len(self.chiplets)

    def __getitem__(self, i: int) -> ChipletSpec:
        return self.chiplets[i]

    def __iter__(self):
        return iter(self.chiplets)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.chiplets]

    def index(self, name: str) -> int:
        for i, c in enumerate(self.chiplets):
            if c.name == name:
                return i
        raise ConfigurationError(f"unknown chiplet type {name!r}")

    def vector(self, attr: str) -> np.ndarray:
        return np.array([float(getattr(c, attr)) for c in self.chiplets])

    def subset(self, names: Sequence[str]) -> "Catalog":
        return Catalog(tuple(self.chiplets[self.index(n)] for n in names), self.chiplet_cte_per_k)


def load_catalog(path: Optional[str | Path] = None) -> Catalog:
    """Load a catalog JSON file; ``None`` loads the shipped default catalog."""
    if path is None:
        text = resources.files("chipletdse.data").joinpath("catalog_default.json").read_text()
        source = "catalog_default.json"
    else:
        source = str(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"{source}: cannot read catalog ({exc})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source}: invalid JSON ({exc})") from exc
    records = raw["chiplets"] if isinstance(raw, dict) else raw
    cte = raw.get("chiplet_cte_per_k", 3.0e-6) if isinstance(raw, dict) else 3.0e-6
    specs = []
    for i, rec in enumerate(records):
        try:
            specs.append(ChipletSpec.from_dict(rec))
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigurationError(f"{source}: chiplets[{i}]: {exc}") from exc
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"{source}: duplicate chiplet names")
    return Catalog(tuple(specs), float(cte))


# Material presets. Young's moduli sit inside the published ranges
# (silicon 130-180 GPa, glass 50-75 GPa); glass conductivity is ~130x lower.
_MATERIAL_DEFAULTS = {
    Material.Silicon: dict(
        thermal_conductivity_w_mk=148.0,
        youngs_modulus_gpa=165.0,
        stiffness_factor=1.0,
        cte_per_k=2.6e-6,
        unit_cost=1.0,
        comm_freq_ghz=1.15,
        allows_embedding=False,
    ),
    Material.Glass: dict(
        thermal_conductivity_w_mk=1.14,
        youngs_modulus_gpa=63.0,
        stiffness_factor=0.4,
        cte_per_k=3.2e-6,
        unit_cost=1.0 / 8.0,
        comm_freq_ghz=2.0,
        allows_embedding=True,
    ),
}


@dataclass(frozen=True)
class InterposerSpec:
    material: Material
    width_mm: float
    height_mm: float
    thickness_um: float
    thermal_conductivity_w_mk: float
    youngs_modulus_gpa: float
    stiffness_factor: float
    cte_per_k: float
    unit_cost: float
    comm_freq_ghz: float
    allows_embedding: bool = False
    # fraction of the lateral area usable by embedded chiplets
    embed_capacity_fraction: float = 1.0

    def __post_init__(self):
        for key in ("width_mm", "height_mm", "thickness_um", "thermal_conductivity_w_mk",
                    "youngs_modulus_gpa", "stiffness_factor", "cte_per_k", "unit_cost",
                    "comm_freq_ghz"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"interposer: {key} must be > 0")
        if not 0.0 <= self.embed_capacity_fraction <= 1.0:
            raise ConfigurationError("interposer: embed_capacity_fraction must be in [0, 1]")

    @classmethod
    def preset(cls, material: str | Material, width_mm: float = 20.0,
               height_mm: Optional[float] = None, thickness_um: float = 100.0,
               **overrides) -> "InterposerSpec":
        material = Material(material)
        params = dict(_MATERIAL_DEFAULTS[material])
        params.update(overrides)
        return cls(material=material, width_mm=width_mm,
                   height_mm=width_mm if height_mm is None else height_mm,
                   thickness_um=thickness_um, **params)

    @classmethod
    def silicon(cls, width_mm: float = 20.0, **kw) -> "InterposerSpec":
        return cls.preset(Material.Silicon, width_mm, **kw)

    @classmethod
    def glass(cls, width_mm: float = 20.0, **kw) -> "InterposerSpec":
        return cls.preset(Material.Glass, width_mm, **kw)

    @classmethod
    def square(cls, material: str | Material, area_mm2: float, **kw) -> "InterposerSpec":
        return cls.preset(material, math.sqrt(area_mm2), **kw)

    @property
    def area_mm2(self) -> float:
        return self.width_mm * self.height_mm

    @property
    def embedded_capacity_mm2(self) -> float:
        if not self.allows_embedding:
            return 0.0
        return self.area_mm2 * self.embed_capacity_fraction

    @property
    def cycle_time_s(self) -> float:
        return 1.0 / (self.comm_freq_ghz * 1e9)

    def with_area(self, area_mm2: float) -> "InterposerSpec":
        side = math.sqrt(area_mm2)
        return replace(self, width_mm=side, height_mm=side)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["material"] = self.material.value
        return d


@dataclass(frozen=True)
class Composition:
    """Chiplet counts per catalog type, split into surface and embedded."""

    surface_counts: tuple[int, ...]
    embedded_counts: tuple[int, ...] = field(default=())

    def __post_init__(self):
        surf = tuple(int(x) for x in self.surface_counts)
        emb = tuple(int(x) for x in self.embedded_counts) if self.embedded_counts else (0,) * len(surf)
        if len(emb) != len(surf):
            raise ConfigurationError("surface and embedded count vectors differ in length")
        if any(x < 0 for x in surf + emb):
            raise ConfigurationError("composition counts must be non-negative")
        object.__setattr__(self, "surface_counts", surf)
        object.__setattr__(self, "embedded_counts", emb)

    @classmethod
    def of(cls, counts: Sequence[int], embedded: Optional[Sequence[int]] = None) -> "Composition":
        return cls(tuple(counts), tuple(embedded) if embedded is not None else ())

    @property
    def total(self) -> tuple[int, ...]:
        return tuple(s + e for s, e in zip(self.surface_counts, self.embedded_counts))

    @property
    def n_surface(self) -> int:
        return sum(self.surface_counts)

    @property
    def n_embedded(self) -> int:
        return sum(self.embedded_counts)

    @property
    def n_chiplets(self) -> int:
        return self.n_surface + self.n_embedded

    def __len__(self) -> int:
        return len(self.surface_counts)

    def validate(self, catalog: Catalog) -> None:
        if len(self) != len(catalog):
            raise ConfigurationError(
                f"composition has {len(self)} entries but catalog has {len(catalog)} types")
        for i, n in enumerate(self.embedded_counts):
            if n > 0 and not catalog[i].embeddable:
                raise ConfigurationError(f"chiplet type {catalog[i].name!r} is not embeddable")

    def __str__(self) -> str:
        if self.n_embedded:
            return f"{list(self.surface_counts)}+emb{list(self.embedded_counts)}"
        return str(list(self.surface_counts))


@dataclass(frozen=True)
class AggregateMetrics:
    total_tops: float
    total_storage_kb: float
    total_area_mm2: float
    surface_area_mm2: float
    embedded_area_mm2: float
    total_peak_power_w: float


def derive_peak_power(spec: ChipletSpec, utilization: float = 1.0) -> float:
    """Peak power in W: utilization x TOPS x J/MAC x 1e12; an explicit override wins."""
    if not 0.0 <= utilization <= 1.0:
        raise ConfigurationError(f"utilization must be in [0, 1], got {utilization}")
    if spec.peak_power_w is not None:
        return utilization * spec.peak_power_w
    return utilization * spec.tops * spec.energy_per_mac_j * 1e12


def aggregate_metrics(comp: Composition, catalog: Catalog, utilization: float = 1.0) -> AggregateMetrics:
    comp.validate(catalog)
    surf = np.asarray(comp.surface_counts, dtype=float)
    emb = np.asarray(comp.embedded_counts, dtype=float)
    total = surf + emb
    area = catalog.vector("area_mm2")
    power = np.array([derive_peak_power(c, utilization) for c in catalog])
    return AggregateMetrics(
        total_tops=float(total @ catalog.vector("tops")),
        total_storage_kb=float(total @ catalog.vector("storage_kb")),
        total_area_mm2=float(total @ area),
        surface_area_mm2=float(surf @ area),
        embedded_area_mm2=float(emb @ area),
        total_peak_power_w=float(total @ power),
    )


def embed_by_area(comp: Composition, catalog: Catalog, fraction: float) -> Composition:
    """Move embeddable surface chiplets below the surface until ``fraction`` of
    the chiplet area is embedded (largest type first, never overshooting)."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigurationError(f"fraction must be in [0, 1], got {fraction}")
    comp.validate(catalog)
    target = fraction * aggregate_metrics(comp, catalog).total_area_mm2
    surf = list(comp.surface_counts)
    emb = list(comp.embedded_counts)
    moved = float(np.asarray(emb) @ catalog.vector("area_mm2"))
    order = sorted((i for i in range(len(catalog)) if catalog[i].embeddable),
                   key=lambda i: (-catalog[i].area_mm2, i))
    for i in order:
        a = catalog[i].area_mm2
        while surf[i] > 0 and moved + a <= target + 1e-9:
            surf[i] -= 1
            emb[i] += 1
            moved += a
    return Composition(tuple(surf), tuple(emb))


FILL_POLICIES = ("min_power_density", "proportional")


def reclaim_router_area(comp: Composition, catalog: Catalog, router_area_pct: float,
                        fill_policy: str = "min_power_density") -> tuple[Composition, float]:
    """Spend the area freed by moving routers into the interposer on extra surface chiplets.

    The budget is ``router_area_pct`` of the current chiplet area. With
    ``min_power_density`` the budget is packed with the coolest chiplet type
    (the baseline already sits at the thermal limit); ``proportional`` follows
    the existing area mix with integer floors. Returns the new composition and
    the TOPS delta.
    """
    if not 0.0 <= router_area_pct < 1.0:
        raise ConfigurationError(f"router_area_pct must be in [0, 1), got {router_area_pct}")
    comp.validate(catalog)
    if fill_policy not in FILL_POLICIES:
        raise ConfigurationError(f"unknown fill policy {fill_policy!r}")
    metrics = aggregate_metrics(comp, catalog)
    budget = router_area_pct * metrics.total_area_mm2
    added = [0] * len(catalog)
    if budget > 0:
        if fill_policy == "min_power_density":
            density = [derive_peak_power(c) / c.area_mm2 for c in catalog]
            best = min(range(len(catalog)), key=lambda i: (density[i], i))
            added[best] = int(math.floor(budget / catalog[best].area_mm2 + 1e-9))
        else:
            area = np.asarray(comp.total, dtype=float) * catalog.vector("area_mm2")
            if area.sum() > 0:
                share = area / area.sum() * budget
                added = [int(math.floor(share[i] / catalog[i].area_mm2 + 1e-9))
                         for i in range(len(catalog))]
    surface = tuple(s + a for s, a in zip(comp.surface_counts, added))
    new = Composition(surface, comp.embedded_counts)
    delta = aggregate_metrics(new, catalog).total_tops - metrics.total_tops
    return new, delta
