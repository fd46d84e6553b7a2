"""Re-derivation of the frozen model constants.

Three constants are fitted once and then hard-coded:

* ``package.WARPAGE_SCALE``: glass at 400 mm^2 reaches 99 % of the warpage limit;
* ``package.RELIEF_COEFFICIENT``: 10 % embedded fill on an 864 mm^2 glass
  interposer brings its warpage down to that of silicon at the same size;
* ``thermal.SINK_RESISTANCE_K_PER_W``: the silicon Floret baseline on a
  10 x 10 grid peaks at 75 C.

The thermal stack constants other than the sink resistance are fixed in
``ThermalParams``; :func:`thermal_report` shows where the reference cases land.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from scipy.optimize import brentq

from .catalog import Catalog, Composition, InterposerSpec, embed_by_area, load_catalog
from .package import (WARPAGE_MAX_UM, WarpageParams, check_warpage, max_warpage)
from .thermal import ThermalParams, peak_temperature
from .topology import KINDS, build_topology, canonical_placement

BASELINE_COUNTS = (24, 28, 0, 18, 12)
BASELINE_GRID = (10, 10)
BASELINE_AREA_MM2 = 400.0
LARGE_AREA_MM2 = 864.0
T_TARGET_C = 75.0
WARPAGE_HEADROOM = 0.99
EMBED_FILL = 0.10


def _default_d(catalog: Catalog) -> float:
    return max(c.side_mm for c in catalog) / 2.0


def calibrate_warpage_scale(catalog: Optional[Catalog] = None, headroom: float = WARPAGE_HEADROOM,
                            area_mm2: float = BASELINE_AREA_MM2) -> float:
    """Scale that puts a bare glass interposer of ``area_mm2`` at ``headroom`` of the limit."""
    catalog = catalog or load_catalog()
    glass = InterposerSpec.square("Glass", area_mm2)
    p = WarpageParams.for_interposer(glass, catalog.chiplet_cte_per_k, d_mm=_default_d(catalog),
                                     scale=1.0)
    return headroom * WARPAGE_MAX_UM / max_warpage(p)


def calibrate_relief_coefficient(catalog: Optional[Catalog] = None, fill: float = EMBED_FILL,
                                 area_mm2: float = LARGE_AREA_MM2) -> float:
    """Thickness relief per unit fill so that glass with ``fill`` matches silicon at ``area_mm2``."""
    catalog = catalog or load_catalog()
    si = check_warpage(InterposerSpec.square("Silicon", area_mm2), catalog).max_warpage_um
    gl = check_warpage(InterposerSpec.square("Glass", area_mm2), catalog).max_warpage_um
    # warpage is linear in the thickness, so the needed thickness factor is si / gl
    return (1.0 - si / gl) / fill


def baseline_design(kind: str = "Floret", comp: Optional[Composition] = None,
                    grid: tuple[int, int] = BASELINE_GRID, area_mm2: float = BASELINE_AREA_MM2):
    comp = comp or Composition.of(BASELINE_COUNTS)
    side = area_mm2 ** 0.5
    placement = canonical_placement(comp, kind, grid[0], grid[1], side / grid[1])
    return placement, build_topology(kind, placement)


def baseline_peak(params: ThermalParams, material: str = "Silicon", kind: str = "Floret",
                  comp: Optional[Composition] = None, catalog: Optional[Catalog] = None) -> float:
    catalog = catalog or load_catalog()
    placement, graph = baseline_design(kind, comp)
    interposer = InterposerSpec.square(material, BASELINE_AREA_MM2)
    return peak_temperature(placement, catalog, interposer, params, graph)


def calibrate_sink_resistance(params: Optional[ThermalParams] = None, target_c: float = T_TARGET_C,
                              catalog: Optional[Catalog] = None, bracket=(1e-3, 100.0)) -> float:
    """Total sink resistance (K/W) putting the silicon Floret baseline at ``target_c``."""
    params = params or ThermalParams()
    catalog = catalog or load_catalog()

    def f(r):
        return baseline_peak(replace(params, sink_resistance_k_per_w=r), catalog=catalog) - target_c

    return brentq(f, *bracket, xtol=1e-12, rtol=1e-12)


@dataclass(frozen=True)
class ThermalReport:
    silicon_by_kind: dict
    glass_floret: float
    glass_floret_embedded: float

    @property
    def embedding_delta(self) -> float:
        return self.glass_floret_embedded - self.glass_floret


def thermal_report(params: Optional[ThermalParams] = None,
                   catalog: Optional[Catalog] = None) -> ThermalReport:
    """Peak temperatures of the reference cases under ``params``."""
    params = params or ThermalParams()
    catalog = catalog or load_catalog()
    by_kind = {k: baseline_peak(params, "Silicon", k, catalog=catalog) for k in KINDS}
    glass = baseline_peak(params, "Glass", catalog=catalog)
    emb = embed_by_area(Composition.of(BASELINE_COUNTS), catalog, EMBED_FILL)
    glass_emb = baseline_peak(params, "Glass", comp=emb, catalog=catalog)
    return ThermalReport(by_kind, glass, glass_emb)
