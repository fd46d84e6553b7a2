"""Compact steady-state thermal model and the ReRAM conductance-drift model.

Every grid cell carries two nodes: the surface chiplet layer and the
interposer layer (which also hosts embedded chiplets). The chiplet layer sheds
heat into the heat sink, whose total resistance is spread evenly over the
cells; the interposer sheds a little into the board. Both boundaries sit at
ambient. Lateral conduction inside the interposer is ``lambda * t`` per square
cell, which is where silicon and glass differ.

The linear system is written in temperature rise over ambient and solved with
a Jacobi-preconditioned conjugate gradient; a dense direct solve is available
as a reference.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .catalog import Catalog, InterposerSpec, derive_peak_power
from .errors import ConfigurationError, SolverError
from .topology import NoiGraph, Placement

CHIPLET, INTERPOSER = 0, 1
LAYER_NAMES = ("chiplet", "interposer")

SINK_RESISTANCE_K_PER_W = 0.19296671128390555


@dataclass(frozen=True)
class ThermalParams:
    """Stack constants. Conductances are W/K per cell (or per cell pair)."""

    ambient_c: float = 25.0
    # calibrated (scripts/calibrate.py): silicon Floret baseline peaks at 75 C
    sink_resistance_k_per_w: float = SINK_RESISTANCE_K_PER_W
    utilization: float = 0.08
    chip_lateral_w_k: float = 0.001
    bump_w_k: float = 0.3
    embed_short_w_k: float = 1.0
    board_w_k: float = 0.002
    # sink and bump coupling of a cell with no chiplet, relative to an occupied one
    empty_cell_factor: float = 0.3
    router_port_w: float = 0.35
    router_link_w_per_mm: float = 0.04

    def __post_init__(self):
        for key in ("sink_resistance_k_per_w", "chip_lateral_w_k", "bump_w_k", "embed_short_w_k",
                    "board_w_k"):
            if not getattr(self, key) > 0:
                raise ConfigurationError(f"thermal: {key} must be > 0")
        if not 0.0 <= self.utilization <= 1.0:
            raise ConfigurationError("thermal: utilization must be in [0, 1]")
        for key in ("empty_cell_factor", "router_port_w", "router_link_w_per_mm"):
            if getattr(self, key) < 0:
                raise ConfigurationError(f"thermal: {key} must be >= 0")


@dataclass
class ThermalGrid:
    """Two-layer conductance network over a ``rows x cols`` cell grid.

    Arrays are indexed ``[layer, row, col]``; ``lat_h`` couples (r, c) with
    (r, c + 1) and ``lat_v`` couples (r, c) with (r + 1, c).
    """

    rows: int
    cols: int
    cell_size_mm: float
    power_w: np.ndarray        # (2, rows, cols)
    g_sink: np.ndarray         # (rows, cols), chiplet layer to ambient
    g_board: np.ndarray        # (rows, cols), interposer layer to ambient
    g_vert: np.ndarray         # (rows, cols), chiplet to interposer
    lat_h: np.ndarray          # (2, rows, cols - 1)
    lat_v: np.ndarray          # (2, rows - 1, cols)
    ambient_c: float = 25.0

    def __post_init__(self):
        shape = (self.rows, self.cols)
        checks = {
            "power_w": (2,) + shape, "g_sink": shape, "g_board": shape, "g_vert": shape,
            "lat_h": (2, self.rows, self.cols - 1), "lat_v": (2, self.rows - 1, self.cols),
        }
        for key, want in checks.items():
            arr = np.asarray(getattr(self, key), dtype=float)
            if arr.shape != want:
                raise ConfigurationError(f"thermal grid: {key} has shape {arr.shape}, expected {want}")
            if key != "power_w" and (arr < 0).any():
                raise ConfigurationError(f"thermal grid: negative conductance in {key}")
            setattr(self, key, arr)
        if (self.g_sink.sum() + self.g_board.sum()) <= 0:
            raise ConfigurationError("thermal grid: no path to a boundary")

    @property
    def n_nodes(self) -> int:
        return 2 * self.rows * self.cols

    def node(self, layer: int, r: int, c: int) -> int:
        return (layer * self.rows + r) * self.cols + c

    @property
    def total_power_w(self) -> float:
        return float(self.power_w.sum())

    def matrix(self) -> sp.csr_matrix:
        """Conductance (weighted Laplacian plus boundary) matrix, symmetric positive definite."""
        R, C = self.rows, self.cols
        idx = np.arange(self.n_nodes).reshape(2, R, C)
        rows_i, cols_i, vals = [], [], []

        def couple(a, b, g):
            a, b, g = a.ravel(), b.ravel(), g.ravel()
            keep = g > 0
            a, b, g = a[keep], b[keep], g[keep]
            rows_i.extend([a, b, a, b])
            cols_i.extend([b, a, a, b])
            vals.extend([-g, -g, g, g])

        for layer in (CHIPLET, INTERPOSER):
            couple(idx[layer, :, :-1], idx[layer, :, 1:], self.lat_h[layer])
            couple(idx[layer, :-1, :], idx[layer, 1:, :], self.lat_v[layer])
        couple(idx[CHIPLET], idx[INTERPOSER], self.g_vert)
        diag = np.concatenate([self.g_sink.ravel(), self.g_board.ravel()])
        rows_i.append(np.arange(self.n_nodes))
        cols_i.append(np.arange(self.n_nodes))
        vals.append(diag)
        m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows_i), np.concatenate(cols_i))),
                          shape=(self.n_nodes, self.n_nodes))
        return m.tocsr()

    def rhs(self) -> np.ndarray:
        return self.power_w.reshape(-1).copy()


@dataclass(frozen=True)
class ThermalSolution:
    temperature_c: np.ndarray  # (2, rows, cols)
    iterations: int
    relative_residual: float
    energy_balance_error: float

    @property
    def peak_c(self) -> float:
        return float(self.temperature_c.max())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "layer", "temperature_c"])
            _, R, C = self.temperature_c.shape
            for layer in (CHIPLET, INTERPOSER):
                for r in range(R):
                    for c in range(C):
                        w.writerow([c, r, LAYER_NAMES[layer], f"{self.temperature_c[layer, r, c]:.6f}"])


def conjugate_gradient(a: sp.csr_matrix, b: np.ndarray, tol: float = 1e-10,
                       max_iter: Optional[int] = None) -> tuple[np.ndarray, int, float]:
    """Jacobi-preconditioned CG; returns (x, iterations, relative residual)."""
    n = b.shape[0]
    max_iter = 10 * n if max_iter is None else max_iter
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(n)
    if bnorm == 0.0:
        return x, 0, 0.0
    inv_diag = 1.0 / a.diagonal()
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    rel = 1.0
    for it in range(1, max_iter + 1):
        ap = a @ p
        alpha = rz / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rel = float(np.linalg.norm(r)) / bnorm
        if rel <= tol:
            return x, it, rel
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"thermal solve did not converge in {max_iter} iterations", rel)


def energy_balance_error(grid: ThermalGrid, rise: np.ndarray) -> float:
    """|heat leaving through the boundaries - injected power| / injected power."""
    rise = rise.reshape(2, grid.rows, grid.cols)
    out = float((grid.g_sink * rise[CHIPLET]).sum() + (grid.g_board * rise[INTERPOSER]).sum())
    total = grid.total_power_w
    if total == 0.0:
        return abs(out)
    return abs(out - total) / abs(total)


def solve_steady_state(grid: ThermalGrid, tol: float = 1e-10,
                       max_iter: Optional[int] = None) -> ThermalSolution:
    """Steady-state temperatures (deg C); iterative solve checked by energy balance."""
    if tol > 1e-6:
        raise ConfigurationError("thermal: solver tolerance must be <= 1e-6")
    a = grid.matrix()
    rise, it, rel = conjugate_gradient(a, grid.rhs(), tol, max_iter)
    err = energy_balance_error(grid, rise)
    return ThermalSolution(rise.reshape(2, grid.rows, grid.cols) + grid.ambient_c, it, rel, err)


def solve_dense(grid: ThermalGrid) -> np.ndarray:
    """Reference direct solve; returns the (2, rows, cols) temperature field."""
    a = grid.matrix().toarray()
    rise = np.linalg.solve(a, grid.rhs())
    return rise.reshape(2, grid.rows, grid.cols) + grid.ambient_c


# --- design to grid ---------------------------------------------------------

def router_power(graph: NoiGraph, params: ThermalParams) -> np.ndarray:
    """Per surface router (vertical ports included): port power plus link-driver power proportional to wire length."""
    ports = np.array([graph.degree(i) for i in range(graph.n_surface)], dtype=float)
    return ports * params.router_port_w + graph.link_length_per_node() * params.router_link_w_per_mm


def build_grid(placement: Placement, catalog: Catalog, interposer: InterposerSpec,
               params: ThermalParams, graph: Optional[NoiGraph] = None) -> ThermalGrid:
    """Conductance network and power map for one placed design.

    Router power is only charged when ``graph`` is given. Embedded chiplets
    dissipate into the interposer node of their host cell.
    """
    R, C = placement.rows, placement.cols
    power = np.zeros((2, R, C))
    occupied = np.zeros((R, C), dtype=bool)
    embedded_here = np.zeros((R, C), dtype=bool)
    routers = router_power(graph, params) if graph is not None else np.zeros(placement.n_surface)
    if graph is not None and graph.n_surface != placement.n_surface:
        raise ConfigurationError("graph and placement disagree on the number of surface chiplets")
    for p, t in enumerate(placement.surface):
        r, c = placement.cell(p)
        occupied[r, c] = True
        power[CHIPLET, r, c] += derive_peak_power(catalog[t], params.utilization) + routers[p]
    for h, t in placement.embedded:
        r, c = placement.cell(h)
        embedded_here[r, c] = True
        power[INTERPOSER, r, c] += derive_peak_power(catalog[t], params.utilization)

    n_cells = R * C
    fill = np.where(occupied, 1.0, params.empty_cell_factor)
    g_sink = fill / (params.sink_resistance_k_per_w * n_cells)
    g_vert = np.where(embedded_here, params.embed_short_w_k, params.bump_w_k * fill)
    g_board = np.full((R, C), params.board_w_k)

    g_int = interposer.thermal_conductivity_w_mk * interposer.thickness_um * 1e-6
    lat_h = np.empty((2, R, C - 1))
    lat_v = np.empty((2, R - 1, C))
    lat_h[CHIPLET] = params.chip_lateral_w_k
    lat_v[CHIPLET] = params.chip_lateral_w_k
    lat_h[INTERPOSER] = g_int
    lat_v[INTERPOSER] = g_int
    cell = min(interposer.width_mm / C, interposer.height_mm / R)
    return ThermalGrid(R, C, cell, power, g_sink, g_board, g_vert, lat_h, lat_v, params.ambient_c)


def peak_temperature(placement: Placement, catalog: Catalog, interposer: InterposerSpec,
                     params: ThermalParams, graph: Optional[NoiGraph] = None) -> float:
    return solve_steady_state(build_grid(placement, catalog, interposer, params, graph)).peak_c


# --- conductance drift ------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Relative ReRAM conductance variation sigma(T) = sigma0 * exp(eta (T - T_ref)).

    Defaults pass through 0.1 % at 300 K and 8 % at 350 K.
    """

    sigma0: float = 0.001
    eta: float = math.log(80.0) / 50.0
    t_ref_k: float = 300.0

    def __post_init__(self):
        if not (self.sigma0 > 0 and self.eta > 0):
            raise ConfigurationError("noise model: sigma0 and eta must be > 0")

    def sigma(self, t_kelvin: float) -> float:
        if t_kelvin < 0:
            raise ConfigurationError("temperature must be >= 0 K")
        return self.sigma0 * math.exp(self.eta * (t_kelvin - self.t_ref_k))


def conductance_variation(t_kelvin: float, model: NoiseModel = NoiseModel()) -> float:
    return model.sigma(t_kelvin)


def with_sink_resistance(params: ThermalParams, r: float) -> ThermalParams:
    return replace(params, sink_resistance_k_per_w=r)
