"""Scenario files: one JSON document naming everything a run needs.

Relative input paths resolve against the scenario file's directory; bare workload
names such as ``"wl1"`` resolve to the shipped fixtures. See README for the
schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .catalog import InterposerSpec, Material, load_catalog
from .errors import ChipletDSEError, ConfigurationError
from .mapper import MappingFlags
from .optimizer.inner import SOLVERS
from .optimizer.outer import CompositionSpace
from .optimizer.problem import Constraints, Problem
from .perf import LinkParams
from .thermal import ThermalParams
from .topology import KINDS
from .workload import WorkloadSpec, load_workload

_TOP_KEYS = {"name", "interposer", "catalog", "chiplet_types", "workloads", "topology",
             "constraints", "link", "thermal", "mapping", "optimizer", "output_dir"}


@dataclass(frozen=True)
class OptimizerConfig:
    outer_budget: int = 20
    inner_budget: int = 500
    seed: int = 0
    n0: int = 8
    pool_size: int = 512
    solver: str = "bandit"
    max_counts: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.outer_budget < 1 or self.inner_budget < 1:
            raise ConfigurationError("optimizer: budgets must be >= 1")
        if self.n0 < 1 or self.pool_size < 1:
            raise ConfigurationError("optimizer: n0 and pool_size must be >= 1")
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"optimizer: solver must be one of {list(SOLVERS)}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError("optimizer: seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class Scenario:
    name: str
    problem: Problem
    optimizer: OptimizerConfig
    output_dir: Path
    source: Optional[Path] = None
    raw: dict = field(default_factory=dict, compare=False)

    def space(self) -> CompositionSpace:
        return CompositionSpace.for_problem(self.problem, self.optimizer.max_counts)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, optimizer=replace(self.optimizer, seed=int(seed)))


def _dataclass_from(cls, raw: Any, where: str, **extra):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{where}: expected an object")
    names = {f.name for f in fields(cls) if f.init}
    unknown = set(raw) - names
    if unknown:
        raise ConfigurationError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**raw, **extra)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def _interposer(raw: Any, where: str) -> InterposerSpec:
    if not isinstance(raw, dict) or "material" not in raw:
        raise ConfigurationError(f"{where}: needs an object with 'material'")
    raw = dict(raw)
    try:
        material = Material(raw.pop("material"))
    except ValueError as exc:
        raise ConfigurationError(f"{where}.material: {exc}") from exc
    if "area_mm2" in raw:
        if "width_mm" in raw:
            raise ConfigurationError(f"{where}: give either area_mm2 or width_mm, not both")
        area = raw.pop("area_mm2")
        if not isinstance(area, (int, float)) or not area > 0:
            raise ConfigurationError(f"{where}.area_mm2: must be > 0")
        raw["width_mm"] = math.sqrt(area)
    try:
        return InterposerSpec.preset(material, **raw)
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc


def _resolve(base: Path, value: str) -> Path | str:
    p = Path(value)
    if p.is_absolute():
        return p
    cand = base / p
    # bare names fall through to the shipped fixtures
    return cand if cand.exists() else value


def scenario_from_dict(raw: dict, source: Optional[Path] = None) -> Scenario:
    where = str(source) if source else "<scenario>"
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{where}: top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"{where}: unknown field(s) {sorted(unknown)}")
    base = source.parent if source else Path.cwd()

    for key in ("interposer", "workloads"):
        if key not in raw:
            raise ConfigurationError(f"{where}: missing required field '{key}'")
    interposer = _interposer(raw["interposer"], f"{where}: interposer")

    try:
        catalog = load_catalog(_resolve(base, raw["catalog"]) if raw.get("catalog") else None)
        if raw.get("chiplet_types"):
            catalog = catalog.subset(raw["chiplet_types"])
    except ChipletDSEError as exc:
        raise ConfigurationError(f"{where}: catalog: {exc}") from exc

    wl_paths = raw["workloads"]
    if isinstance(wl_paths, str):
        wl_paths = [wl_paths]
    if not wl_paths:
        raise ConfigurationError(f"{where}: workloads: at least one workload is required")
    workload: Optional[WorkloadSpec] = None
    for i, w in enumerate(wl_paths):
        try:
            spec = load_workload(_resolve(base, w))
        except ChipletDSEError as exc:
            raise ConfigurationError(f"{where}: workloads[{i}]: {exc}") from exc
        workload = spec if workload is None else workload.concat(spec)

    topo = raw.get("topology", {})
    if not isinstance(topo, dict):
        raise ConfigurationError(f"{where}: topology: expected an object")
    unknown = set(topo) - {"kind", "rows", "cols", "kite_stride", "floret_hub_interval"}
    if unknown:
        raise ConfigurationError(f"{where}: topology: unknown field(s) {sorted(unknown)}")
    kind = topo.get("kind", "Floret")
    if kind not in KINDS:
        raise ConfigurationError(f"{where}: topology.kind: must be one of {list(KINDS)}")

    constraints = _dataclass_from(Constraints, raw.get("constraints"), f"{where}: constraints")
    link_over = raw.get("link") or {}
    if not isinstance(link_over, dict):
        raise ConfigurationError(f"{where}: link: expected an object")
    try:
        link = LinkParams.for_interposer(interposer, **link_over)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: link: {exc}") from exc
    thermal = _dataclass_from(ThermalParams, raw.get("thermal"), f"{where}: thermal")
    flags = _dataclass_from(MappingFlags, raw.get("mapping"), f"{where}: mapping")

    opt_raw = dict(raw.get("optimizer") or {})
    if "max_counts" in opt_raw and opt_raw["max_counts"] is not None:
        opt_raw["max_counts"] = tuple(int(m) for m in opt_raw["max_counts"])
    optimizer = _dataclass_from(OptimizerConfig, opt_raw, f"{where}: optimizer")

    try:
        problem = Problem(catalog, workload, interposer, kind,
                          int(topo.get("rows", 10)), int(topo.get("cols", 10)),
                          link=link, thermal=thermal, constraints=constraints, flags=flags,
                          kite_stride=int(topo.get("kite_stride", 2)),
                          floret_hub_interval=int(topo.get("floret_hub_interval", 8)))
    except ChipletDSEError as exc:
        raise ConfigurationError(f"{where}: {exc}") from exc
    if optimizer.max_counts is not None and len(optimizer.max_counts) != len(catalog):
        raise ConfigurationError(f"{where}: optimizer.max_counts: need one bound per chiplet type")

    # relative output directories are taken from the working directory, so
    # shipped fixtures never write into the package
    out = Path(raw.get("output_dir", "out"))
    return Scenario(raw.get("name", source.stem if source else "scenario"), problem, optimizer,
                    out, source, raw)


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file; bare names (``scenario_tiny``) resolve to shipped fixtures."""
    p = Path(path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
        source = p.resolve()
    else:
        fname = p.name if p.suffix == ".json" else f"{p.name}.json"
        res = resources.files("chipletdse.data").joinpath(fname)
        if not res.is_file():
            raise ConfigurationError(f"{path}: scenario file not found")
        text = res.read_text(encoding="utf-8")
        source = Path(str(res))
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(raw, source)
