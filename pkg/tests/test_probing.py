import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glids.errors import ConfigError, ProbeLost
from glids.paths import LatencyEstimate
from glids.probing import (
    RETURNS_ONE_WAY, RETURNS_RTT, efficient_probe, exhaustive_probe,
)


class FakePath:
    """Minimal stand-in exposing what the probing algorithms consume."""

    def __init__(self, name: str, n_hops: int = 3):
        self.name = name
        self.hops = tuple(range(n_hops))
        self.path_id = hashlib.sha256(name.encode()).hexdigest()[:16]

    def __repr__(self):
        return f"<FakePath {self.name}>"


def make_candidates(floors, n_hops=None):
    out = []
    for i, floor in enumerate(floors):
        est = LatencyEstimate(floor, "complete", 0, [], floor)
        hops = 3 if n_hops is None else n_hops[i]
        out.append((FakePath(f"p{i}", hops), est))
    return out


def dict_prober(measured):
    def prober(path):
        value = measured[path.name]
        if value is None:
            raise ProbeLost(path.name)
        return value
    return prober


def test_spec_example_stops_before_third():
    cands = make_candidates([10.0, 12.0, 30.0])
    prober = dict_prober({"p0": 14.0, "p1": 13.0, "p2": 35.0})
    report = efficient_probe(cands, prober, batch=1, prober_returns=RETURNS_ONE_WAY)
    assert report.probes_sent == 2
    assert report.probed_path_ids == [cands[0][0].path_id, cands[1][0].path_id]
    assert report.best_path_id == cands[1][0].path_id
    assert report.best_measured == 13.0
    assert report.terminated_early
    exh = exhaustive_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    assert exh.best_path_id == report.best_path_id
    assert exh.probes_sent == 3
    assert not exh.terminated_early


def test_single_candidate():
    cands = make_candidates([10.0])
    report = efficient_probe(cands, dict_prober({"p0": 12.0}), prober_returns=RETURNS_ONE_WAY)
    assert report.probes_sent == 1
    assert not report.terminated_early
    assert report.best_path_id == cands[0][0].path_id


def test_no_queuing_stops_after_first_strict_inequality():
    cands = make_candidates([10.0, 11.0, 12.0])
    prober = dict_prober({"p0": 10.0, "p1": 11.0, "p2": 12.0})
    report = efficient_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    assert report.probes_sent == 1  # 11 > 10 strictly
    assert report.terminated_early


def test_equal_propagation_candidates_are_probed():
    cands = make_candidates([10.0, 10.0, 12.0])
    prober = dict_prober({"p0": 10.0, "p1": 10.0, "p2": 12.0})
    report = efficient_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    assert report.probes_sent == 2  # the 10 == 10 tie is probed, 12 > 10 is not


def test_high_variance_early_termination():
    cands = make_candidates([5.0, 50.0, 60.0])
    prober = dict_prober({"p0": 9.0, "p1": 55.0, "p2": 66.0})
    report = efficient_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    assert report.probes_sent == 1
    assert report.terminated_early


def test_rtt_mode_doubles_the_floor():
    # floors are one-way 10/12; RTT floors 20/24; measured RTTs compare vs those
    cands = make_candidates([10.0, 12.0])
    prober = dict_prober({"p0": 25.0, "p1": 24.5})
    report = efficient_probe(cands, prober, prober_returns=RETURNS_RTT)
    assert report.probes_sent == 2  # 24 is not > 25, so the second is probed
    assert report.best_measured == 24.5
    assert not report.veracity_alerts
    stop = efficient_probe(cands, dict_prober({"p0": 21.0, "p1": 25.0}),
                           prober_returns=RETURNS_RTT)
    assert stop.probes_sent == 1  # 24 > 21 cuts the search


def test_veracity_alert_when_measured_undercuts_floor():
    cands = make_candidates([10.0, 12.0, 30.0])
    prober = dict_prober({"p0": 8.0, "p1": 13.0, "p2": 30.0})
    report = efficient_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    assert report.veracity_alerts == [cands[0][0].path_id]


def test_probe_failures_skip_the_path():
    cands = make_candidates([10.0, 12.0, 30.0])
    prober = dict_prober({"p0": None, "p1": 13.0, "p2": 31.0})
    report = efficient_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    assert report.failed_path_ids == [cands[0][0].path_id]
    assert report.best_path_id == cands[1][0].path_id
    assert report.probes_sent == 2


def test_empty_candidates_is_config_error():
    with pytest.raises(ConfigError):
        efficient_probe([], dict_prober({}))
    with pytest.raises(ConfigError):
        exhaustive_probe([], dict_prober({}))


def test_batchwise_checks_at_boundaries():
    cands = make_candidates([10.0, 12.0, 30.0, 31.0])
    prober = dict_prober({"p0": 14.0, "p1": 13.0, "p2": 35.0, "p3": 36.0})
    report = efficient_probe(cands, prober, batch=2, prober_returns=RETURNS_ONE_WAY)
    assert report.probes_sent == 2  # both in the first batch; cutoff before batch 2
    batch3 = efficient_probe(cands, prober, batch=3, prober_returns=RETURNS_ONE_WAY)
    assert batch3.probes_sent == 3


def test_sort_ties_break_by_hops_then_id():
    cands = make_candidates([10.0, 10.0, 10.0], n_hops=[5, 2, 2])
    prober = dict_prober({"p0": 10.0, "p1": 10.0, "p2": 10.0})
    report = exhaustive_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    two_hop_ids = sorted([cands[1][0].path_id, cands[2][0].path_id])
    assert report.probed_path_ids == two_hop_ids + [cands[0][0].path_id]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(min_value=0.0, max_value=100.0),
                          st.floats(min_value=0.0, max_value=50.0)),
                min_size=1, max_size=20),
       st.integers(min_value=1, max_value=4))
def test_soundness_and_efficiency_properties(raw, batch):
    floors = [f for f, _ in raw]
    cands = make_candidates(floors)
    measured = {f"p{i}": f + extra for i, (f, extra) in enumerate(raw)}
    prober = dict_prober(measured)
    eff = efficient_probe(cands, prober, batch=batch, prober_returns=RETURNS_ONE_WAY)
    exh = exhaustive_probe(cands, prober, prober_returns=RETURNS_ONE_WAY)
    # soundness: same argmin and same best value
    assert eff.best_measured == exh.best_measured
    assert eff.best_path_id == exh.best_path_id
    # efficiency: never more probes, strictly fewer when a floor clears the best
    assert eff.probes_sent <= exh.probes_sent
    if batch == 1 and any(f > exh.best_measured for f in floors):
        assert eff.probes_sent < exh.probes_sent
    # monotone prefix of the sorted order
    assert exh.probed_path_ids[: eff.probes_sent] == eff.probed_path_ids
    assert not eff.veracity_alerts
