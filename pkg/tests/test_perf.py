import pytest
from hypothesis import given
from hypothesis import strategies as st

import numpy as np

from chipletdse.catalog import Composition, InterposerSpec, load_catalog
from chipletdse.mapper import map_layers
from chipletdse.perf import (LinkParams, PerfResult, comm_energy, comm_latency, compute_energy,
                             compute_latency)
from chipletdse.topology import Placement, build_topology
from chipletdse.workload import LayerSpec, WorkloadSpec, load_workload

CAT = load_catalog()
STD, ADCLESS = CAT.index("Standard"), CAT.index("ADCLess")


def _one(macs, sparsity=1.0, t=STD, n=1):
    layers = tuple(LayerSpec(f"d.l{i}", "d", 10.0, macs, 0.0, sparsity,
                             (f"d.l{i + 1}",) if i + 1 < n else ()) for i in range(n))
    wl = WorkloadSpec("w", (layers,))
    pl = Placement(1, n, 1.0, "Floret", (t,) * n)
    # one layer per chiplet
    m = map_layers(wl, pl, CAT, fresh=[l.id for l in layers])
    return wl, pl, m


def test_compute_latency_one_second():
    wl, pl, m = _one(30e12)
    assert compute_latency(wl, m, CAT, pl) == pytest.approx(1.0)


def test_compute_latency_empty():
    wl = WorkloadSpec("e", ())
    pl = Placement(1, 1, 1.0, "Mesh", (STD,))
    assert compute_latency(wl, map_layers(wl, pl, CAT), CAT, pl) == 0.0


def test_compute_latency_additive():
    wl1, pl1, m1 = _one(1e9)
    wl2, pl2, m2 = _one(1e9, n=2)
    assert compute_latency(wl2, m2, CAT, pl2) == 2 * compute_latency(wl1, m1, CAT, pl1)


def test_compute_energy_examples():
    wl, pl, m = _one(1e6)
    e = compute_energy(wl, m, CAT, pl)
    assert e == pytest.approx(8.7e-7)
    wl_h, pl_h, m_h = _one(1e6, sparsity=0.5)
    assert compute_energy(wl_h, m_h, CAT, pl_h) == pytest.approx(e / 2)
    wl_a, pl_a, m_a = _one(1e6, t=ADCLESS)
    assert compute_energy(wl_a, m_a, CAT, pl_a) / e == pytest.approx(0.27 / 0.87)


def _chain(n):
    return build_topology("Floret", Placement(1, n, 1.0, "Floret", (0,) * n))


def test_comm_latency_literal():
    g = _chain(3)
    t = np.zeros((3, 3))
    t[0, 2] = 64.0
    lp = LinkParams(cycle_time_s=0.5e-9, router_delay_cycles=1, link_width_bits=1)
    assert comm_latency(t, g, lp) == pytest.approx(96e-9)
    assert comm_latency(np.zeros((3, 3)), g, lp) == 0.0


def test_comm_latency_per_hop_switch():
    g = _chain(3)
    t = np.zeros((3, 3))
    t[0, 2] = 64.0
    lp = LinkParams(cycle_time_s=0.5e-9, router_delay_cycles=1, link_width_bits=1,
                    per_hop_router_delay=True)
    assert comm_latency(t, g, lp) == pytest.approx(64 * 2 * 2 * 0.5e-9)


def test_glass_faster_and_cheaper_links():
    g = _chain(3)
    t = np.zeros((3, 3))
    t[0, 2] = 1e6
    si = LinkParams.for_interposer(InterposerSpec.preset("Silicon"))
    gl = LinkParams.for_interposer(InterposerSpec.preset("Glass"))
    assert comm_latency(t, g, gl) == pytest.approx(comm_latency(t, g, si) * 1.15 / 2.0)
    assert gl.e_link_lateral_j_per_bit <= si.e_link_lateral_j_per_bit
    assert comm_energy(t, g, gl) < comm_energy(t, g, si)


def test_comm_energy_literal():
    g = _chain(4)
    t = np.zeros((4, 4))
    t[0, 3] = 1000.0
    lp = LinkParams(cycle_time_s=1e-9, e_link_lateral_j_per_bit=1.5e-12, e_router_j_per_bit=0.5e-12)
    assert comm_energy(t, g, lp) == pytest.approx(6e-9)
    assert comm_energy(np.zeros((4, 4)), g, lp) == 0.0
    # halving hops halves energy
    t2 = np.zeros((4, 4))
    t2[0, 1] = 1000.0
    t3 = np.zeros((4, 4))
    t3[0, 2] = 1000.0
    assert comm_energy(t2, g, lp) * 2 == pytest.approx(comm_energy(t3, g, lp))


pos = st.floats(1e-9, 1e3)


@given(pos, pos, pos, pos, st.floats(0.01, 0.99))
def test_edp_decreases(cl, ml, ce, me, f):
    p = PerfResult(cl, ml, ce, me)
    faster = PerfResult(cl * f, ml * f, ce, me)
    cheaper = PerfResult(cl, ml, ce * f, me * f)
    assert faster.edp_js < p.edp_js
    assert cheaper.edp_js < p.edp_js
    assert p.latency_s == max(cl, ml) and p.energy_j == pytest.approx(ce + me)


def _noi_edp():
    from chipletdse.calibration import BASELINE_COUNTS
    from chipletdse.optimizer.problem import Evaluator, Problem, baseline_design
    from chipletdse.topology import KINDS
    cat = load_catalog()
    wl = load_workload("wl1")
    ip = InterposerSpec.square("Silicon", 440.0)
    out = {}
    for kind in KINDS:
        pr = Problem(cat, wl, ip, kind)
        d = baseline_design(pr, Composition.of(BASELINE_COUNTS))
        out[kind] = Evaluator(pr).evaluate(d, require_admissible=False).evaluation.edp
    return out


def test_floret_lowest_edp():
    e = _noi_edp()
    assert all(e["Floret"] < v for k, v in e.items() if k != "Floret")


@pytest.mark.xfail(reason="HexaMesh's extra links shorten paths enough that its EDP lands "
                          "below Mesh and Kite under the analytical latency model", strict=False)
def test_hexamesh_highest_of_the_rest():
    e = _noi_edp()
    assert e["HexaMesh"] > max(e["Mesh"], e["Kite"])
