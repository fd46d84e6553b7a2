import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chipletdse.catalog import Composition, InterposerSpec, Material, load_catalog
from chipletdse.package import (TSV_DEFAULTS, WarpageParams, chiplet_cost_factor, check_area,
                                check_warpage, fabrication_cost, max_warpage, relative_cost,
                                split_for_area, warpage_at, warpage_profile)

from conftest import BASELINE_SURFACE

CAT = load_catalog()
D = max(c.side_mm for c in CAT) / 2


def params(material, area=400.0, tau=None):
    ip = InterposerSpec.square(material, area)
    return WarpageParams.for_interposer(ip, CAT.chiplet_cte_per_k, d_mm=D, tau_um=tau)


def test_zero_at_centre():
    for m in ("Silicon", "Glass"):
        assert warpage_at(0.0, params(m)) == 0.0


@given(st.floats(0.0, 10.0), st.sampled_from(["Silicon", "Glass"]))
def test_even(x, m):
    p = params(m)
    assert warpage_at(-x, p) == warpage_at(x, p)


def test_glass_order_of_magnitude():
    si, gl = params("Silicon"), params("Glass")
    assert warpage_at(gl.rho_mm, gl) / warpage_at(si.rho_mm, si) >= 5


@pytest.mark.parametrize("m,area", [("Silicon", 400.0), ("Glass", 400.0), ("Silicon", 864.0),
                                    ("Glass", 864.0)])
def test_monotone_in_x(m, area):
    p = params(m, area)
    xs = np.linspace(0, p.rho_mm, 1000)
    k = np.array([warpage_at(x, p) for x in xs])
    assert np.all(np.diff(k) >= -1e-12 * k.max())


def test_profile_matches_pointwise():
    for m in ("Silicon", "Glass"):
        p = params(m, 864.0)
        xs, ks = warpage_profile(p)
        assert ks == pytest.approx([warpage_at(x, p) for x in xs], rel=1e-9, abs=1e-12)


@given(st.floats(1.0, 99.0), st.floats(0.05, 0.95))
def test_thinner_warps_less(tau, f):
    assert max_warpage(params("Glass", tau=tau * f)) < max_warpage(params("Glass", tau=tau))


@given(st.floats(100.0, 800.0), st.floats(1.01, 2.0))
def test_bigger_warps_more(area, f):
    assert max_warpage(params("Glass", area * f)) > max_warpage(params("Glass", area))


def test_warpage_feasibility():
    for area in (400.0, 864.0):
        assert check_warpage(InterposerSpec.square("Silicon", area), CAT).feasible
    glass = InterposerSpec.square("Glass", 864.0)
    assert not check_warpage(glass, CAT).feasible
    si = check_warpage(InterposerSpec.square("Silicon", 864.0), CAT).max_warpage_um
    emb = check_warpage(glass, CAT, 0.10 * glass.area_mm2)
    assert emb.feasible and emb.max_warpage_um <= 1.25 * si


def test_relative_cost():
    assert relative_cost(400.0, 400.0, 0.001) == 1.0
    assert relative_cost(500.0, 300.0, 0.002) * relative_cost(300.0, 500.0, 0.002) == pytest.approx(1.0)
    d0 = 0.001
    assert relative_cost(300.0 + math.log(2) / d0, 300.0, d0) == pytest.approx(0.5)


def test_chiplet_cost_factor_reference():
    assert chiplet_cost_factor(100.0, 100.0, 864.0, 864.0, 0.001) == 1.0


def test_interposer_and_tsv_ratios():
    si, gl = InterposerSpec.preset("Silicon", 20.0), InterposerSpec.preset("Glass", 20.0)
    empty = Composition.of([0] * 5)
    assert (fabrication_cost(empty, CAT, gl).interposer / fabrication_cost(empty, CAT, si).interposer
            == pytest.approx(1 / 8))
    ts, tg = TSV_DEFAULTS[Material.Silicon], TSV_DEFAULTS[Material.Glass]
    assert (ts.count_per_chiplet, tg.count_per_chiplet) == (32, 128)
    assert (ts.cost_rel_unit_area, tg.cost_rel_unit_area) == (1.0, 64.0)


@given(st.lists(st.integers(0, 30), min_size=5, max_size=5), st.sampled_from(["Silicon", "Glass"]))
def test_cost_breakdown(counts, m):
    c = fabrication_cost(Composition.of(counts), CAT, InterposerSpec.preset(m, 20.0))
    assert c.interposer >= 0 and c.chiplets >= 0 and c.tsvs >= 0
    assert c.total == pytest.approx(c.interposer + c.chiplets + c.tsvs)


def test_area_examples():
    si = InterposerSpec.square("Silicon", 400.0)
    a = check_area(Composition.of(BASELINE_SURFACE), CAT, si)
    assert a.feasible and a.surface_area_mm2 == 400.0
    assert not check_area(Composition.of((24, 28, 0, 18, 12)), CAT, si).feasible
    assert check_area(Composition.of([0] * 5), CAT, si).feasible


def test_split_for_area_embeds_on_glass():
    gl = InterposerSpec.square("Glass", 400.0)
    comp = split_for_area((24, 28, 0, 18, 12), CAT, gl)
    assert comp is not None and comp.total == (24, 28, 0, 18, 12)
    assert check_area(comp, CAT, gl).feasible and comp.n_embedded > 0
    assert split_for_area((24, 28, 0, 18, 12), CAT, InterposerSpec.square("Silicon", 400.0)) is None
