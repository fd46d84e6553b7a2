import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chipletdse.calibration import baseline_design
from chipletdse.catalog import InterposerSpec, load_catalog
from chipletdse.errors import ConfigurationError, SolverError
from chipletdse.thermal import (NoiseModel, ThermalGrid, ThermalParams, build_grid, conductance_variation,
                                conjugate_gradient, peak_temperature, solve_dense, solve_steady_state)
from chipletdse.topology import Placement, build_topology

CAT = load_catalog()


def uniform_grid(rows, cols, power=None, g_sink=0.05, g_vert=0.3, g_lat=0.02, g_board=0.002):
    power = np.zeros((2, rows, cols)) if power is None else power
    return ThermalGrid(rows, cols, 1.0, power, np.full((rows, cols), g_sink),
                       np.full((rows, cols), g_board), np.full((rows, cols), g_vert),
                       np.full((2, rows, cols - 1), g_lat), np.full((2, rows - 1, cols), g_lat))


def random_grid(rng, rows, cols):
    return ThermalGrid(rows, cols, 1.0, rng.uniform(0, 5, (2, rows, cols)),
                       rng.uniform(0.01, 1, (rows, cols)), rng.uniform(0, 0.01, (rows, cols)),
                       rng.uniform(0.05, 2, (rows, cols)), rng.uniform(0, 0.5, (2, rows, cols - 1)),
                       rng.uniform(0, 0.5, (2, rows - 1, cols)))


def test_one_cell_closed_form():
    g = uniform_grid(1, 1, np.array([[[10.0]], [[0.0]]]), g_sink=0.5, g_board=0.0)
    sol = solve_steady_state(g)
    assert sol.temperature_c[0, 0, 0] == pytest.approx(45.0, abs=1e-9)


def test_zero_power_is_ambient():
    sol = solve_steady_state(uniform_grid(5, 5))
    assert np.all(sol.temperature_c == 25.0)


def test_centred_source_symmetry():
    p = np.zeros((2, 7, 7))
    p[0, 3, 3] = 20.0
    t = solve_steady_state(uniform_grid(7, 7, p)).temperature_c[0]
    assert np.allclose(t, np.rot90(t), rtol=0, atol=1e-7)
    assert np.unravel_index(t.argmax(), t.shape) == (3, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_iterative_matches_dense(rows, cols, seed):
    g = random_grid(np.random.default_rng(seed), rows, cols)
    sol = solve_steady_state(g)
    dense = solve_dense(g)
    rise_it, rise_d = sol.temperature_c - 25.0, dense - 25.0
    assert np.max(np.abs(rise_it - rise_d)) <= 1e-5 * np.max(np.abs(rise_d))
    assert sol.energy_balance_error <= 1e-4


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2 ** 32 - 1), st.floats(0.1, 10.0))
def test_more_power_never_cools(rows, cols, seed, extra):
    rng = np.random.default_rng(seed)
    g = random_grid(rng, rows, cols)
    t0 = solve_dense(g)
    layer, r, c = rng.integers(2), rng.integers(rows), rng.integers(cols)
    g.power_w[layer, r, c] += extra
    t1 = solve_dense(g)
    assert np.all(t1 >= t0 - 1e-9)


def test_cg_converges_and_reports():
    g = random_grid(np.random.default_rng(0), 6, 6)
    x, it, rel = conjugate_gradient(g.matrix(), g.rhs())
    assert rel <= 1e-10 and it > 0
    with pytest.raises(SolverError):
        conjugate_gradient(g.matrix(), g.rhs(), tol=1e-14, max_iter=2)


def test_loose_tolerance_rejected():
    with pytest.raises(ConfigurationError):
        solve_steady_state(uniform_grid(2, 2), tol=1e-3)


def test_zero_utilization_is_ambient():
    pl = Placement(4, 4, 2.0, "Mesh", (0, 1, 3, 4) * 4)
    params = ThermalParams(utilization=0.0, router_port_w=0.0, router_link_w_per_mm=0.0)
    g = build_topology("Mesh", pl)
    assert peak_temperature(pl, CAT, InterposerSpec.preset("Silicon", 8.0), params, g) == pytest.approx(25.0)


def test_glass_hotter_than_silicon():
    for kind in ("Mesh", "Floret"):
        pl, g = baseline_design(kind)
        params = ThermalParams()
        si = peak_temperature(pl, CAT, InterposerSpec.square("Silicon", 400.0), params, g)
        gl = peak_temperature(pl, CAT, InterposerSpec.square("Glass", 400.0), params, g)
        assert gl > si


def test_embedding_never_cools():
    # one ADCLess chiplet moved from the surface to under a neighbour
    base = Placement(3, 3, 2.0, "Mesh", (0, 0, 0, 0, 4, 0, 0, 0, 0))
    moved = Placement(3, 3, 2.0, "Mesh", (0, 0, 0, 0, 0, 0, 0, 0), ((4, 4),))
    ip = InterposerSpec.preset("Glass", 6.0)
    params = ThermalParams(router_port_w=0.0, router_link_w_per_mm=0.0)
    assert peak_temperature(moved, CAT, ip, params) >= peak_temperature(base, CAT, ip, params)


def test_sigma_anchors():
    assert conductance_variation(300.0) == pytest.approx(0.001, rel=1e-12)
    assert conductance_variation(350.0) == pytest.approx(0.08, rel=1e-12)
    assert conductance_variation(325.0) == pytest.approx(0.00894, rel=1e-3)
    assert NoiseModel().eta == pytest.approx(0.08764, rel=1e-4)


@given(st.floats(250.0, 400.0), st.floats(1e-3, 10.0))
def test_sigma_increasing(t, dt):
    assert conductance_variation(t + dt) > conductance_variation(t)


def test_thermal_csv(tmp_path):
    sol = solve_steady_state(uniform_grid(2, 3, np.ones((2, 2, 3))))
    sol.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "x,y,layer,temperature_c" and len(lines) == 1 + 12
    assert math.isfinite(sol.peak_c)
