"""Efficient path probing with a propagation-latency cutoff.

Candidates are probed in ascending order of their advertised propagation
latency; the search stops as soon as the next candidate's propagation
floor is strictly above the best latency measured so far. Since measured
latency can never undercut true propagation, every unprobed candidate
must be worse and the probed argmin is the global one. Candidates with
equal propagation to the cutoff are still probed (their queuing could be
lower). An exhaustive prober serves as the baseline and testing oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigError, ProbeLost
from .paths import EndToEndPath, LatencyEstimate

RETURNS_RTT = "rtt"
RETURNS_ONE_WAY = "one_way"

_VERACITY_SLACK = 1e-9


@dataclass
class ProbingReport:
    best_path_id: str | None
    best_measured: float | None
    probes_sent: int
    probed_path_ids: list[str]
    terminated_early: bool
    failed_path_ids: list[str] = field(default_factory=list)
    # Paths that measured *below* their advertised propagation floor:
    # someone advertised latencies they cannot honor.
    veracity_alerts: list[str] = field(default_factory=list)


def _floor_of(est: LatencyEstimate, prober_returns: str) -> float:
    """Propagation floor in the prober's unit (one-way or round trip)."""
    if prober_returns == RETURNS_RTT:
        return est.total_min + est.total_min_rev
    return est.total_min


def _sorted_candidates(candidates, prober_returns):
    if not candidates:
        raise ConfigError("no candidate paths to probe")
    return sorted(candidates,
                  key=lambda c: (_floor_of(c[1], prober_returns), len(c[0].hops), c[0].path_id))


def _probe_one(path: EndToEndPath, floor: float,
               prober: Callable[[EndToEndPath], float], report: ProbingReport):
    report.probed_path_ids.append(path.path_id)
    report.probes_sent += 1
    try:
        measured = prober(path)
    except ProbeLost:
        report.failed_path_ids.append(path.path_id)
        return None
    if measured < floor - _VERACITY_SLACK:
        report.veracity_alerts.append(path.path_id)
    if report.best_measured is None or measured < report.best_measured:
        report.best_measured = measured
        report.best_path_id = path.path_id
    return measured


def efficient_probe(candidates: list[tuple[EndToEndPath, LatencyEstimate]],
                    prober: Callable[[EndToEndPath], float],
                    batch: int = 1,
                    prober_returns: str = RETURNS_RTT) -> ProbingReport:
    """Probe candidates in propagation order, stopping at the cutoff.

    `prober` returns a latency in ms and must be consistent with
    prober_returns ("rtt" or "one_way") so floors compare like with like.
    Paths whose probe is lost are recorded as failed and skipped; the
    argmin guarantee then covers the non-failed candidates.
    """
    if batch < 1:
        raise ConfigError("batch must be >= 1")
    ordered = _sorted_candidates(candidates, prober_returns)
    report = ProbingReport(None, None, 0, [], False)
    i = 0
    while i < len(ordered):
        if report.best_measured is not None and \
                _floor_of(ordered[i][1], prober_returns) > report.best_measured:
            report.terminated_early = True
            break
        for path, est in ordered[i: i + batch]:
            _probe_one(path, _floor_of(est, prober_returns), prober, report)
        i += batch
    return report


def exhaustive_probe(candidates: list[tuple[EndToEndPath, LatencyEstimate]],
                     prober: Callable[[EndToEndPath], float],
                     prober_returns: str = RETURNS_RTT) -> ProbingReport:
    """Probe every candidate; the baseline the efficient search must match."""
    ordered = _sorted_candidates(candidates, prober_returns)
    report = ProbingReport(None, None, 0, [], False)
    for path, est in ordered:
        _probe_one(path, _floor_of(est, prober_returns), prober, report)
    return report
