"""Package-level models: warpage profile, fabrication cost and the area limit.

Warpage unit system
-------------------
The printed warpage profile mixes thermal conductivity and Young's modulus in
a mechanical formula, so it is evaluated in a fixed normalised unit system:

* ``x`` and ``rho`` in mm; output in um;
* ``tau`` in um, ``delta_psi`` in 1/K, ``delta_t`` in K, ``lambda`` in W/(m K),
  ``D`` dimensionless;
* the cosh wavenumber is ``k = youngs_GPa * k_per_gpa`` in 1/mm;
* the half chiplet length enters as ``d / rho`` so that ``k x d`` stays in
  1/mm * mm.

One calibration constant (``WARPAGE_SCALE``) maps the result to um. It was
chosen so that a 20 mm glass interposer sits just under the 150 um limit;
``scripts/calibrate.py`` re-derives it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .catalog import Catalog, Composition, InterposerSpec, Material
from .errors import ConfigurationError

WARPAGE_MAX_UM = 150.0
# thermal cycling range 25-105 C
DEFAULT_DELTA_T_K = 80.0
K_PER_GPA = 0.01

# Calibrated constants (see scripts/calibrate.py). WARPAGE_SCALE puts glass at
# rho = 10 mm at 99% of the limit; RELIEF_COEFFICIENT makes 10% embedded fill on
# an 864 mm^2 glass interposer match the silicon warpage of the same size.
WARPAGE_SCALE = 1693.0328035130722
RELIEF_COEFFICIENT = 9.938378262309083
TAU_FLOOR_FRACTION = 1e-3


@dataclass(frozen=True)
class WarpageParams:
    tau_um: float
    delta_psi_per_k: float
    lambda_w_mk: float
    stiffness_d: float
    k_per_mm: float
    d_mm: float
    rho_mm: float
    delta_t_k: float = DEFAULT_DELTA_T_K
    scale: float = WARPAGE_SCALE

    def __post_init__(self):
        for key in ("tau_um", "delta_psi_per_k", "lambda_w_mk", "stiffness_d", "k_per_mm",
                    "d_mm", "rho_mm", "delta_t_k", "scale"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"warpage: {key} must be > 0")
        if self.rho_mm < self.d_mm:
            raise ConfigurationError("warpage: rho must be >= d")

    @classmethod
    def for_interposer(cls, interposer: InterposerSpec, chiplet_cte_per_k: float,
                       d_mm: float = 1.0, tau_um: Optional[float] = None, **kw) -> "WarpageParams":
        delta_psi = abs(chiplet_cte_per_k - interposer.cte_per_k)
        return cls(
            tau_um=interposer.thickness_um if tau_um is None else tau_um,
            delta_psi_per_k=delta_psi,
            lambda_w_mk=interposer.thermal_conductivity_w_mk,
            stiffness_d=interposer.stiffness_factor,
            k_per_mm=interposer.youngs_modulus_gpa * K_PER_GPA,
            d_mm=d_mm,
            rho_mm=max(interposer.width_mm, interposer.height_mm) / 2.0,
            **kw,
        )

    @property
    def prefactor(self) -> float:
        return (self.scale * self.tau_um * self.delta_psi_per_k * self.delta_t_k
                / (2.0 * self.lambda_w_mk * self.stiffness_d))


def _cosh_ratio(a: float, b: float) -> float:
    """(cosh(a) - 1) / cosh(b) without overflow for large arguments."""
    a, b = abs(a), abs(b)
    if max(a, b) < 300.0:
        return (math.cosh(a) - 1.0) / math.cosh(b)
    # cosh(a) - 1 = e^a (1 - e^-a)^2 / 2 ; cosh(b) = e^b (1 + e^-2b) / 2
    log_num = a + 2.0 * math.log1p(-math.exp(-a)) if a > 0 else -math.inf
    log_den = b + math.log1p(math.exp(-2.0 * b))
    diff = log_num - log_den
    if diff > 700.0:
        raise OverflowError("warpage cosh term out of range")
    return math.exp(diff)


def warpage_at(x_mm: float, p: WarpageParams) -> float:
    """Vertical displacement (um) at distance ``x_mm`` from the interposer centre."""
    if abs(x_mm) > p.rho_mm * (1.0 + 1e-12):
        raise ConfigurationError(f"x = {x_mm} mm lies outside [-rho, rho] (rho = {p.rho_mm})")
    k = p.k_per_mm
    d = p.d_mm / p.rho_mm
    bracket = 0.5 * x_mm * x_mm - _cosh_ratio(k * x_mm * d, k * p.rho_mm) / (k * k)
    return p.prefactor * bracket


def warpage_profile(p: WarpageParams, n: int = 201) -> tuple[np.ndarray, np.ndarray]:
    """Profile on ``n`` points over [0, rho], evaluated in the log domain throughout."""
    xs = np.linspace(0.0, p.rho_mm, n)
    k = p.k_per_mm
    a = k * xs * (p.d_mm / p.rho_mm)
    b = k * p.rho_mm
    with np.errstate(divide="ignore"):
        log_num = a + 2.0 * np.log1p(-np.exp(-a))
    log_den = b + math.log1p(math.exp(-2.0 * b))
    ratio = np.where(a > 0, np.exp(log_num - log_den), 0.0)
    return xs, p.prefactor * (0.5 * xs * xs - ratio / (k * k))


def max_warpage(p: WarpageParams, n: int = 201) -> float:
    return float(np.max(warpage_profile(p, n)[1]))


def effective_thickness(tau_um: float, embed_fill_fraction: float,
                        relief_coefficient: float = RELIEF_COEFFICIENT) -> float:
    """Interposer thickness seen by the warpage model once chiplets are embedded."""
    factor = 1.0 - embed_fill_fraction * relief_coefficient
    return tau_um * max(factor, TAU_FLOOR_FRACTION)


@dataclass(frozen=True)
class WarpageResult:
    max_warpage_um: float
    feasible: bool
    embed_fill_fraction: float
    effective_tau_um: float


def embed_fill_fraction(embedded_area_mm2: float, interposer: InterposerSpec) -> float:
    return embedded_area_mm2 / interposer.area_mm2


def check_warpage(interposer: InterposerSpec, catalog: Catalog, embedded_area_mm2: float = 0.0,
                  d_mm: Optional[float] = None, limit_um: float = WARPAGE_MAX_UM,
                  relief_coefficient: float = RELIEF_COEFFICIENT) -> WarpageResult:
    """Maximum warpage over [0, rho] and feasibility against ``limit_um``.

    ``d_mm`` defaults to half the side of the largest chiplet type in the
    catalog.
    """
    if d_mm is None:
        d_mm = max(c.side_mm for c in catalog) / 2.0
    fill = embed_fill_fraction(embedded_area_mm2, interposer)
    tau = effective_thickness(interposer.thickness_um, fill, relief_coefficient)
    p = WarpageParams.for_interposer(interposer, catalog.chiplet_cte_per_k, d_mm=d_mm, tau_um=tau)
    kmax = max_warpage(p)
    return WarpageResult(kmax, kmax <= limit_um, fill, tau)


def check_warpage_design(placement, catalog: Catalog, interposer: InterposerSpec,
                         limit_um: float = WARPAGE_MAX_UM) -> WarpageResult:
    emb_area = sum(catalog[t].area_mm2 for _, t in placement.embedded)
    return check_warpage(interposer, catalog, emb_area, limit_um=limit_um)


# --- fabrication cost -------------------------------------------------------

@dataclass(frozen=True)
class TsvSpec:
    count_per_chiplet: int
    area_factor: float
    depth_um: float
    radius_um: tuple[float, float]
    cost_rel_unit_area: float


# Default TSV sets. The glass cost factor equals the count ratio (128/32) times the
# area factor (16).
TSV_DEFAULTS = {
    Material.Silicon: TsvSpec(32, 1.0, 150.0, (10.0, 25.0), 1.0),
    Material.Glass: TsvSpec(128, 16.0, 150.0, (40.0, 40.0), 64.0),
}


@dataclass(frozen=True)
class CostParams:
    d0_per_mm2: float = 0.001
    a_ref_mm2: float = 864.0
    wafer_area_mm2: float = math.pi * 150.0 ** 2
    ref_chiplet_area_mm2: float = 4.0
    tsv: dict = field(default_factory=lambda: dict(TSV_DEFAULTS))
    # per-chiplet cost of the silicon TSV set, in interposer-area units
    tsv_ref_cost_per_chiplet: float = 32 * math.pi * 0.010 ** 2

    def __post_init__(self):
        if not self.d0_per_mm2 > 0:
            raise ConfigurationError("cost: d0 must be > 0")

    @property
    def l_ref(self) -> float:
        return self.wafer_area_mm2 / self.ref_chiplet_area_mm2


@dataclass(frozen=True)
class CostBreakdown:
    interposer: float
    chiplets: float
    tsvs: float

    @property
    def total(self) -> float:
        return self.interposer + self.chiplets + self.tsvs


def relative_cost(a1_mm2: float, a2_mm2: float, d0: float) -> float:
    """Relative fabrication cost of two systems from their area difference."""
    if a1_mm2 < 0 or a2_mm2 < 0:
        raise ConfigurationError("areas must be non-negative")
    return math.exp(-d0 * (a1_mm2 - a2_mm2))


def chiplet_cost_factor(l: float, l_ref: float, a_system_mm2: float, a_ref_mm2: float, d0: float) -> float:
    """Normalised chiplet fabrication cost (L_ref / L) * exp(-D0 (A_ref - A_system))."""
    return (l_ref / l) * math.exp(-d0 * (a_ref_mm2 - a_system_mm2))


def fabrication_cost(comp: Composition, catalog: Catalog, interposer: InterposerSpec,
                     params: CostParams = CostParams()) -> CostBreakdown:
    comp.validate(catalog)
    counts = np.asarray(comp.total, dtype=float)
    n = counts.sum()
    interposer_cost = interposer.unit_cost * interposer.area_mm2
    if n == 0:
        return CostBreakdown(interposer_cost, 0.0, 0.0)
    chip_area = float(counts @ catalog.vector("area_mm2"))
    l = params.wafer_area_mm2 / (chip_area / n)
    factor = chiplet_cost_factor(l, params.l_ref, interposer.area_mm2, params.a_ref_mm2,
                                 params.d0_per_mm2)
    chiplets = n * params.ref_chiplet_area_mm2 * factor
    tsv = params.tsv[interposer.material]
    tsvs = n * tsv.cost_rel_unit_area * params.tsv_ref_cost_per_chiplet
    return CostBreakdown(interposer_cost, chiplets, tsvs)


# --- area -------------------------------------------------------------------

@dataclass(frozen=True)
class AreaCheck:
    feasible: bool
    surface_area_mm2: float
    embedded_area_mm2: float
    surface_limit_mm2: float
    embedded_limit_mm2: float


def check_area(comp: Composition, catalog: Catalog, interposer: InterposerSpec) -> AreaCheck:
    """Surface chiplet area within the interposer, embedded area within its embed capacity."""
    comp.validate(catalog)
    area = catalog.vector("area_mm2")
    surf = float(np.asarray(comp.surface_counts) @ area)
    emb = float(np.asarray(comp.embedded_counts) @ area)
    a_s = interposer.area_mm2
    a_e = interposer.embedded_capacity_mm2
    eps = 1e-9
    return AreaCheck(surf <= a_s + eps and emb <= a_e + eps, surf, emb, a_s, a_e)


def split_for_area(total: tuple[int, ...], catalog: Catalog,
                   interposer: InterposerSpec) -> Optional[Composition]:
    """Area-feasible surface/embedded split of a total count vector, or None.

    Embeds the fewest embeddable chiplets needed, largest first.
    """
    comp = Composition(tuple(total))
    if check_area(comp, catalog, interposer).feasible:
        return comp
    if not interposer.allows_embedding:
        return None
    area = catalog.vector("area_mm2")
    excess = float(np.asarray(total) @ area) - interposer.area_mm2
    surf = list(total)
    emb = [0] * len(total)
    candidates = sorted((i for i in range(len(total)) if catalog[i].embeddable),
                        key=lambda i: (-catalog[i].area_mm2, i))
    for i in candidates:
        while surf[i] > 0 and excess > 1e-9:
            surf[i] -= 1
            emb[i] += 1
            excess -= catalog[i].area_mm2
    comp = Composition(tuple(surf), tuple(emb))
    if excess <= 1e-9 and check_area(comp, catalog, interposer).feasible:
        return comp
    return None
