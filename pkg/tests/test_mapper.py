import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chipletdse.catalog import load_catalog
from chipletdse.errors import InsufficientStorageError
from chipletdse.mapper import MappingFlags, build_traffic, intra_chiplet_bits, map_layers
from chipletdse.topology import Placement
from chipletdse.workload import LayerSpec, WorkloadSpec, load_workload

CAT = load_catalog()
STD, ADDER = CAT.index("Standard"), CAT.index("Adder")


def _wl(*weights, acts=None):
    n = len(weights)
    acts = acts or [1000.0] * n
    layers = tuple(LayerSpec(f"d.l{i}", "d", w, 1e6, acts[i], 1.0,
                             (f"d.l{i + 1}",) if i + 1 < n else ()) for i, w in enumerate(weights))
    return WorkloadSpec("w", (layers,))


def _pl(types, rows=1, cols=None):
    return Placement(rows, cols or len(types), 1.0, "Floret", tuple(types))


def test_single_layer_fits_first():
    m = map_layers(_wl(100.0), _pl([STD, STD]), CAT)
    assert m.hosts("d.l0") == ((0, 1.0),)


def test_split_over_adders():
    m = map_layers(_wl(250.0), _pl([ADDER] * 4), CAT)
    fr = [f for _, f in m.hosts("d.l0")]
    assert [i for i, _ in m.hosts("d.l0")] == [0, 1, 2]
    assert fr == pytest.approx([0.432, 0.432, 0.136])


def _oracle_split(w, caps):
    """Greedy fill by direct enumeration of prefix sums."""
    out, left = [], w
    for i, c in enumerate(caps):
        if left <= 0:
            break
        take = min(c, left)
        out.append((i, take / w))
        left -= take
    return out


@given(st.floats(1.0, 1000.0), st.integers(1, 12))
def test_split_matches_prefix_oracle(w, n):
    caps = [CAT[ADDER].storage_kb] * n
    if w > sum(caps):
        with pytest.raises(InsufficientStorageError):
            map_layers(_wl(w), _pl([ADDER] * n), CAT)
        return
    m = map_layers(_wl(w), _pl([ADDER] * n), CAT)
    got = m.hosts("d.l0")
    exp = _oracle_split(w, caps)
    assert [i for i, _ in got] == [i for i, _ in exp]
    assert [f for _, f in got] == pytest.approx([f for _, f in exp])


def test_insufficient_storage():
    # 10 MB of weights against about 5 MB of storage
    with pytest.raises(InsufficientStorageError):
        map_layers(_wl(10_000.0), _pl([STD] * 4), CAT)


def test_traffic_single_chiplet_zero():
    m = map_layers(_wl(10.0, 10.0), _pl([STD]), CAT)
    assert not build_traffic(_wl(10.0, 10.0), m).any()


def test_traffic_two_chiplets():
    w = _wl(CAT[ADDER].storage_kb, 50.0)
    m = map_layers(w, _pl([ADDER, ADDER]), CAT)
    t = build_traffic(w, m)
    assert t[0, 1] == 1000.0 and t.sum() == 1000.0


def test_split_layer_traffic_apportioned():
    a = CAT[ADDER].storage_kb
    w = _wl(2 * a, a)  # layer 0 split 50/50 over chiplets 0 and 1, layer 1 alone on 2
    m = map_layers(w, _pl([ADDER] * 3), CAT)
    t = build_traffic(w, m)
    assert t[0, 2] == pytest.approx(500.0) and t[1, 2] == pytest.approx(500.0)
    assert t.sum() == pytest.approx(1000.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 15), st.sets(st.sampled_from(["t.l0", "t.l1", "t.l2"])))
def test_activation_conservation(offset, fresh):
    wl = load_workload("wl_tiny")
    pl = _pl([STD, ADDER, ADDER, STD, ADDER, ADDER], rows=2, cols=3)
    m = map_layers(wl, pl, CAT, offset=offset, fresh=fresh)
    t = build_traffic(wl, m)
    sent = sum(src.activations_out_bits for src, _ in wl.edges())
    assert t.sum() + intra_chiplet_bits(wl, m) == pytest.approx(sent)
    assert np.all(np.diag(t) == 0)


def test_deterministic():
    wl = load_workload("wl1")
    pl = Placement(10, 10, 2.0, "Floret", tuple([0, 1, 3, 4] * 25))
    assert map_layers(wl, pl, CAT) == map_layers(wl, pl, CAT)


def test_contiguity_in_curve_order():
    wl = load_workload("wl1")
    pl = Placement(10, 10, 2.0, "Floret", tuple([0, 1, 3, 4] * 25))
    m = map_layers(wl, pl, CAT)
    used = sorted({i for l in wl.layers for i, _ in m.hosts(l.id)})
    assert used == list(range(len(used)))
    last = -1
    for l in wl.layers:
        insts = [i for i, _ in m.hosts(l.id)]
        assert insts == list(range(insts[0], insts[0] + len(insts)))
        assert insts[0] >= last
        last = insts[-1]


def test_reram_flags():
    reram = [i for i, c in enumerate(CAT) if c.mem_tech.value == "ReRAM"]
    if not reram:
        pytest.skip("catalog has no ReRAM type")
    sram = [i for i in range(len(CAT)) if i not in reram][0]
    wl = _wl(50.0)
    pl = _pl([reram[0], sram])
    m = map_layers(wl, pl, CAT, MappingFlags(forbid_reram_entirely=True))
    assert m.hosts("d.l0") == ((1, 1.0),)


def test_split_exhaustive_small():
    # every order of three chiplet types: fractions always sum to one, in order
    for types in itertools.permutations([STD, ADDER, ADDER]):
        m = map_layers(_wl(300.0), _pl(types), CAT)
        assert sum(f for _, f in m.hosts("d.l0")) == pytest.approx(1.0)
