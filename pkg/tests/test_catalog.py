import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chipletdse.catalog import (Composition, InterposerSpec, aggregate_metrics, derive_peak_power,
                                embed_by_area, load_catalog, reclaim_router_area)
from chipletdse.errors import ConfigurationError

from conftest import BASELINE_SURFACE

counts5 = st.lists(st.integers(0, 40), min_size=5, max_size=5)


def test_catalog_order_and_embeddable(catalog):
    assert catalog.names == ["Standard", "Shared", "Adder", "Accumulator", "ADCLess"]
    assert [c.embeddable for c in catalog] == [False, True, True, False, True]


def test_baseline_aggregates(catalog):
    m = aggregate_metrics(Composition.of(BASELINE_SURFACE), catalog)
    assert m.total_tops == pytest.approx(1813)
    assert m.total_storage_kb == pytest.approx(101068)
    assert 97 <= m.total_storage_kb / 1024 <= 99
    assert m.total_area_mm2 == 400.0


def test_empty_composition(catalog):
    m = aggregate_metrics(Composition.of([0] * 5), catalog)
    assert (m.total_tops, m.total_storage_kb, m.total_area_mm2, m.total_peak_power_w) == (0, 0, 0, 0)


@pytest.mark.parametrize("name,watts", [("Standard", 26.1), ("ADCLess", 1.026)])
def test_peak_power(catalog, name, watts):
    spec = catalog[catalog.index(name)]
    assert derive_peak_power(spec, 1.0) == pytest.approx(watts)
    assert derive_peak_power(spec, 0.0) == 0.0


def test_peak_power_bad_utilization(catalog):
    with pytest.raises(ConfigurationError):
        derive_peak_power(catalog[0], 1.5)


@given(counts5, counts5)
def test_aggregate_is_linear(a, b):
    cat = load_catalog()
    ma = aggregate_metrics(Composition.of(a), cat)
    mb = aggregate_metrics(Composition.of(b), cat)
    mab = aggregate_metrics(Composition.of([x + y for x, y in zip(a, b)]), cat)
    for f in ("total_tops", "total_storage_kb", "total_area_mm2", "total_peak_power_w"):
        assert getattr(mab, f) == pytest.approx(getattr(ma, f) + getattr(mb, f))


@given(counts5, st.floats(0.0, 0.5))
def test_embedding_keeps_totals(a, frac):
    cat = load_catalog()
    comp = Composition.of(a)
    emb = embed_by_area(comp, cat, frac)
    m0, m1 = aggregate_metrics(comp, cat), aggregate_metrics(emb, cat)
    assert emb.total == comp.total
    assert m1.total_tops == pytest.approx(m0.total_tops)
    assert m1.total_storage_kb == pytest.approx(m0.total_storage_kb)
    assert m1.surface_area_mm2 + m1.embedded_area_mm2 == pytest.approx(m0.total_area_mm2)


def test_embed_by_area_baseline(catalog):
    emb = embed_by_area(Composition.of((24, 28, 0, 18, 12)), catalog, 0.10)
    assert emb.embedded_counts == (0, 5, 0, 0, 1)
    assert emb.surface_counts == (24, 23, 0, 18, 11)


def test_embedding_non_embeddable_rejected(catalog):
    with pytest.raises(ConfigurationError):
        Composition.of([1, 0, 0, 0, 0], [1, 0, 0, 0, 0]).validate(catalog)


# the 2118-TOPS starting mix is not given; this is the nearest mix to the
# 82-chiplet baseline with that TOPS and the same 440 mm2 of chiplet area
INITIAL_2118 = (24, 28, 4, 16, 10)
RECLAIM_ROWS = [(0.0454, 2148), (0.0454, 2148), (0.0666, 2154), (0.0242, 2136)]


@pytest.mark.parametrize("pct,final", RECLAIM_ROWS)
def test_reclaim_examples(catalog, pct, final):
    comp = Composition.of(INITIAL_2118)
    assert aggregate_metrics(comp, catalog).total_tops == pytest.approx(2118)
    new, _ = reclaim_router_area(comp, catalog, pct)
    assert aggregate_metrics(new, catalog).total_tops == pytest.approx(final, rel=0.02)


def test_reclaim_zero(catalog):
    comp = Composition.of(INITIAL_2118)
    new, delta = reclaim_router_area(comp, catalog, 0.0)
    assert new == comp and delta == 0


@given(st.floats(0.0, 0.2), st.sampled_from(["min_power_density", "proportional"]))
def test_reclaim_gain_bounded(pct, policy):
    cat = load_catalog()
    comp = Composition.of(INITIAL_2118)
    m = aggregate_metrics(comp, cat)
    new, delta = reclaim_router_area(comp, cat, pct, policy)
    area = cat.vector("area_mm2")
    share = (np.asarray(comp.total) * area)
    min_share = min(s for s in share / share.sum() if s > 0)
    assert delta >= 0
    assert delta / m.total_tops <= pct / min_share + 1e-12


def test_interposer_presets():
    si, gl = InterposerSpec.preset("Silicon", 20.0), InterposerSpec.preset("Glass", 20.0)
    assert si.area_mm2 == 400.0
    assert gl.thermal_conductivity_w_mk < si.thermal_conductivity_w_mk / 100
    assert gl.comm_freq_ghz == 2.0 and si.comm_freq_ghz == 1.15
    assert gl.allows_embedding and not si.allows_embedding
    assert gl.unit_cost / si.unit_cost == pytest.approx(1 / 8)
    assert InterposerSpec.square("Glass", 864.0).width_mm == pytest.approx(math.sqrt(864))


def test_catalog_file_errors(tmp_path):
    bad = tmp_path / "cat.json"
    bad.write_text('{"chiplets": [{"name": "x"}]}')
    with pytest.raises(ConfigurationError, match="chiplets\\[0\\]"):
        load_catalog(bad)
