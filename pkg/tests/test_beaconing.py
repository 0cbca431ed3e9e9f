import itertools

import pytest

from glids.beaconing import (
    DISCLOSE_FULL, DISCLOSE_NONE, KIND_CORE, KIND_INTRA_ISD,
    BeaconSelectionPolicy, SegmentStore, advance, extend, originate,
    register, run_beaconing, verify_attestations,
)
from glids.errors import BeaconingError
from glids.synth import synth_topology
from glids.topology import DirectedLatency, IsdAsId

from conftest import TopoBuilder, asid, small_random_params
from oracles import junction_sources


def _tree_with_interfaces():
    """Core 1-1 with children 1-2 (which has children 1-3, 1-4) for extend tests."""
    b = TopoBuilder()
    b.add_as("1-1", core=True)
    b.add_as("1-9", core=True, lon=9)
    b.add_as("1-2", core=False, lon=1)
    b.add_as("1-3", core=False, lon=2)
    b.add_as("1-4", core=False, lon=3)
    e_core = b.link("1-1", "1-9", "core", 4.0)
    e1 = b.link("1-1", "1-2", "parent_child", 5.0, 6.0)
    e2 = b.link("1-2", "1-3", "parent_child", 7.0, 8.0)
    e3 = b.link("1-2", "1-4", "parent_child", 9.0)
    topo, ifids = b.build()
    return topo, ifids, (e_core, e1, e2, e3)


def test_originate_requires_core():
    topo, _, _ = _tree_with_interfaces()
    seg = originate(topo.ases[asid("1-1")], KIND_CORE)
    assert seg.kind == KIND_CORE
    assert len(seg.entries) == 1
    assert seg.entries[0].ingress is None and seg.entries[0].egress is None
    with pytest.raises(BeaconingError):
        originate(topo.ases[asid("1-2")], KIND_INTRA_ISD)


def test_originate_intra_isd_extendable_down_the_tree():
    topo, ifids, (e_core, e1, e2, _) = _tree_with_interfaces()
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg = extend(topo, seg, topo.ases[asid("1-2")],
                 ingress=ifids[(e1, "b")], egress=ifids[(e2, "a")])
    seg = register(topo, seg, topo.ases[asid("1-3")], ifids[(e2, "b")])
    assert [str(e.as_id) for e in seg.entries] == ["1-1", "1-2", "1-3"]
    assert seg.entries[0].egress == ifids[(e1, "a")]  # derived at extension time


def test_extend_fills_latency_from_minimum_route():
    topo, ifids, (e_core, e1, e2, _) = _tree_with_interfaces()
    node = topo.ases[asid("1-2")]
    ing, egr = ifids[(e1, "b")], ifids[(e2, "a")]
    node.set_intra(ing, egr, DirectedLatency(7.0))
    node.set_intra(ing, egr, DirectedLatency(3.0))  # second internal route
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg = extend(topo, seg, node, ingress=ing, egress=egr)
    entry = seg.entries[-1]
    assert entry.latency.intra_fwd.min == 3.0
    assert entry.latency.inter_fwd == 7.0  # link 1-2 -> 1-3 direction
    assert entry.latency.inter_rev == 8.0


def test_core_entries_carry_no_junction_map():
    topo, ifids, (e_core, e1, _, _) = _tree_with_interfaces()
    seg = originate(topo.ases[asid("1-1")], KIND_CORE)
    seg = advance(topo, seg, ifids[(e_core, "a")])
    assert seg.entries[0].latency.junction_map == {}


def test_intra_isd_junction_map_lists_lower_ids_only():
    # 1-2's interfaces: customer side from 1-1 (lowest role order except none),
    # then provider sides toward 1-3 and 1-4.
    topo, ifids, (e_core, e1, e2, e3) = _tree_with_interfaces()
    node = topo.ases[asid("1-2")]
    ing = ifids[(e1, "b")]
    eg_hi = max(ifids[(e2, "a")], ifids[(e3, "a")])
    eg_lo = min(ifids[(e2, "a")], ifids[(e3, "a")])
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg_hi = extend(topo, seg, node, ingress=ing, egress=eg_hi)
    assert set(seg_hi.entries[-1].latency.junction_map) == {ing, eg_lo} - {eg_hi}
    assert all(j < eg_hi for j in seg_hi.entries[-1].latency.junction_map)


def test_lowest_egress_id_gives_empty_junction_map():
    b = TopoBuilder()
    b.add_as("1-1", core=True)
    b.add_as("1-2", core=False, lon=1)
    e1 = b.link("1-1", "1-2", "parent_child", 1.0)
    topo, ifids = b.build()
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg = advance(topo, seg, ifids[(e1, "a")])
    assert seg.entries[0].latency.junction_map == {}


def test_extend_error_cases():
    topo, ifids, (e_core, e1, e2, _) = _tree_with_interfaces()
    node = topo.ases[asid("1-2")]
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    with pytest.raises(BeaconingError, match="ingress"):
        extend(topo, seg, node, ingress=ifids[(e1, "b")], egress=ifids[(e1, "b")])
    with pytest.raises(BeaconingError, match="no interface"):
        extend(topo, seg, node, ingress=99, egress=ifids[(e2, "a")])
    # link from the wrong previous AS
    seg9 = originate(topo.ases[asid("1-9")], KIND_INTRA_ISD)
    with pytest.raises(BeaconingError):
        extend(topo, seg9, node, ingress=ifids[(e1, "b")], egress=ifids[(e2, "a")])


def test_disclosure_none_leaves_latency_absent():
    topo, ifids, (e_core, e1, e2, _) = _tree_with_interfaces()
    node = topo.ases[asid("1-2")]
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg = extend(topo, seg, node, ingress=ifids[(e1, "b")], egress=ifids[(e2, "a")],
                 disclose=DISCLOSE_NONE, tip_disclose=DISCLOSE_FULL)
    assert seg.entries[-1].latency is None
    assert seg.entries[0].latency is not None


def test_verify_attestations():
    topo, ifids, (e_core, e1, e2, _) = _tree_with_interfaces()
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg = extend(topo, seg, topo.ases[asid("1-2")],
                 ingress=ifids[(e1, "b")], egress=ifids[(e2, "a")], now_ms=1000.0)
    assert verify_attestations(seg, max_age_ms=5000.0, now_ms=2000.0)
    assert not verify_attestations(seg, max_age_ms=500.0, now_ms=2000.0)  # stale
    seg.entries[-1].attestation.signer = asid("1-9")  # forged signer
    assert not verify_attestations(seg, max_age_ms=5000.0, now_ms=2000.0)


def test_tampered_entry_fails_verification():
    topo, ifids, (e_core, e1, e2, _) = _tree_with_interfaces()
    seg = originate(topo.ases[asid("1-1")], KIND_INTRA_ISD)
    seg = extend(topo, seg, topo.ases[asid("1-2")],
                 ingress=ifids[(e1, "b")], egress=ifids[(e2, "a")], now_ms=1000.0)
    seg.entries[-1].latency.inter_fwd = 0.001  # falsified latency
    assert not verify_attestations(seg, max_age_ms=1e9, now_ms=1000.0)


# -- run_beaconing ------------------------------------------------------------

def test_linear_core_chain_single_path():
    from conftest import line_core_chain
    topo, info = line_core_chain([5.0, 6.0])
    store = run_beaconing(topo, rounds=4, selection=BeaconSelectionPolicy(k=1))
    segs = store.core_segments(asid("1-1"), asid("1-3"))
    assert len(segs) == 1
    assert [str(e.as_id) for e in segs[0].entries] == ["1-1", "1-2", "1-3"]


def test_diamond_latency_priority_retains_cheaper_route():
    b = TopoBuilder()
    for name in ("1-1", "1-2", "1-3", "1-4"):
        b.add_as(name, core=True, lon=float(name[-1]))
    b.link("1-1", "1-2", "core", 5.0)   # A-B
    b.link("1-1", "1-3", "core", 4.0)   # A-C
    b.link("1-2", "1-4", "core", 5.0)   # B-D: total 10
    b.link("1-3", "1-4", "core", 4.0)   # C-D: total 8
    topo, _ = b.build()
    store = run_beaconing(topo, rounds=5, selection=BeaconSelectionPolicy(k=1))
    segs = store.core_segments(asid("1-1"), asid("1-4"))
    assert len(segs) == 1
    assert [str(e.as_id) for e in segs[0].entries] == ["1-1", "1-3", "1-4"]
    assert segs[0].accumulated_latency() == pytest.approx(8.0)


def test_disclose_none_at_transit_as():
    from conftest import line_core_chain
    topo, info = line_core_chain([5.0, 6.0])
    store = run_beaconing(topo, rounds=4, selection=BeaconSelectionPolicy(k=1),
                          disclose_map={asid("1-2"): DISCLOSE_NONE})
    seg = store.core_segments(asid("1-1"), asid("1-3"))[0]
    entries = {str(e.as_id): e for e in seg.entries}
    assert entries["1-2"].latency is None
    assert entries["1-1"].latency is not None


def test_beaconing_is_pure_and_deterministic():
    topo = synth_topology(42, small_random_params(42))
    a = run_beaconing(topo, 6)
    b = run_beaconing(topo, 6)
    assert a.export_text() == b.export_text()


def test_k_monotonicity():
    topo = synth_topology(9, small_random_params(9))
    rounds = topo.diameter() + 2
    small = run_beaconing(topo, rounds, BeaconSelectionPolicy(k=2))
    large = run_beaconing(topo, rounds, BeaconSelectionPolicy(k=5))
    for at, seg in small.all_segments():
        ids = {s.segment_id for s in large.segments(at)}
        assert seg.segment_id in ids, f"k=5 lost a k=2 segment at {at}"


def test_store_export_import_round_trip():
    topo = synth_topology(3, small_random_params(3))
    store = run_beaconing(topo, topo.diameter() + 2)
    text = store.export_text()
    again = SegmentStore.import_text(text)
    assert again.export_text() == text


def test_dedup_completeness_exhaustive_small_topologies():
    """Every accepted junction is carried by exactly one dissemination source."""
    from oracles import combinable_junction_pairs

    checked = 0
    for seed in range(1, 21):
        topo = synth_topology(seed, small_random_params(seed))
        store = run_beaconing(topo, topo.diameter() + 2, BeaconSelectionPolicy(k=4))
        for arr, if_arr, dep, if_dep in combinable_junction_pairs(store):
            n = junction_sources(arr, dep, if_arr, if_dep)
            assert n == 1, (
                f"seed {seed}: junction {arr.as_id} {if_arr}->{if_dep} has {n} sources")
            checked += 1
    assert checked > 100


def test_rank_missing_latency_counts_zero():
    from conftest import line_core_chain
    topo, _ = line_core_chain([5.0, 6.0])
    store = run_beaconing(topo, 4, BeaconSelectionPolicy(k=1),
                          disclose_map={asid("1-2"): DISCLOSE_NONE})
    seg = store.core_segments(asid("1-1"), asid("1-3"))[0]
    # 1-1 disclosed its link (5 ms); 1-2's intra and link are hidden
    assert seg.accumulated_latency() == pytest.approx(5.0)
