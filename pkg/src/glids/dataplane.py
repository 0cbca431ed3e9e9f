"""Deterministic data-plane simulator for latency measurements.

Probe packets walk an end-to-end path hop by hop over the router-level
graph. Each link crossing adds propagation delay (per direction, ground
truth), transmission delay (packet size over link capacity), and the
queuing delay implied by that link direction's cross-traffic process at
the instant the probe arrives. Intra-AS crossings add the AS's minimum
internal propagation latency; internal queuing is not modeled.

Cross traffic is modeled as a queue-occupancy process per (link,
direction), not as packet-level background flows: cheap, deterministic,
and sufficient for studying what min-filter measurements can and cannot
see. A probe is dropped (drop-tail) when the occupancy process plus the
probe itself exceeds the queue limit at arrival time.

Clocks are virtual and synchronized everywhere; timestamps are float
microseconds on the wire-level clock, milliseconds at the API surface.
"""

from __future__ import annotations

import heapq
import random
import statistics
from dataclasses import dataclass, field

from .errors import ConfigError, MeasurementError, ProbeLost
from .paths import EndToEndPath
from .topology import IsdAsId, Topology


class SimClock:
    """Monotone virtual clock, microseconds."""

    __slots__ = ("now_us",)

    def __init__(self):
        self.now_us = 0.0

    def advance_to(self, t_us: float):
        if t_us < self.now_us:
            raise ValueError(f"clock moving backwards: {t_us} < {self.now_us}")
        self.now_us = t_us

    @property
    def now_ms(self) -> float:
        return self.now_us / 1000.0


class EventQueue:
    """Heap of (time_us, seq, payload); ties resolve by insertion order."""

    def __init__(self):
        self._heap: list[tuple[float, int, object]] = []
        self._seq = 0

    def push(self, t_us: float, payload):
        heapq.heappush(self._heap, (t_us, self._seq, payload))
        self._seq += 1

    def pop(self):
        return heapq.heappop(self._heap)

    def __len__(self):
        return len(self._heap)


@dataclass
class CrossTraffic:
    """Queue-occupancy process for one link direction.

    kind "none": always empty. kind "constant": a standing queue worth
    `delay_ms` of service time. kind "on_off": `delay_ms` during the ON
    phase of a repeating cycle, 0 otherwise; the phase offset comes from
    the seed unless given explicitly.
    """

    kind: str = "none"
    delay_ms: float = 0.0
    period_ms: float = 1000.0
    on_fraction: float = 0.5
    phase_ms: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "on_off"):
            raise ConfigError(f"unknown cross-traffic kind {self.kind!r}")
        if self.delay_ms < 0 or self.period_ms <= 0 or not 0 <= self.on_fraction <= 1:
            raise ConfigError("bad cross-traffic parameters")
        if self.phase_ms is None:
            self.phase_ms = random.Random(self.seed).uniform(0.0, self.period_ms)

    def queuing_delay_ms(self, t_ms: float) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "constant":
            return self.delay_ms
        pos = (t_ms - self.phase_ms) % self.period_ms
        return self.delay_ms if pos < self.on_fraction * self.period_ms else 0.0

    def occupancy_bytes(self, t_ms: float, capacity_bits_per_s: float) -> float:
        return self.queuing_delay_ms(t_ms) / 1000.0 * capacity_bits_per_s / 8.0


@dataclass
class LinkQueue:
    """Drop-tail FIFO ahead of one link direction."""

    capacity_bits_per_s: float = 1e9
    queue_limit_bytes: float = 1_000_000.0
    cross: CrossTraffic = field(default_factory=CrossTraffic)

    def transit_ms(self, t_ms: float, size_bytes: int, priority: bool) -> float:
        """Queuing + transmission delay for a packet arriving at t_ms.

        Raises ProbeLost when the queue cannot hold the packet.
        """
        transmission = size_bytes * 8.0 / self.capacity_bits_per_s * 1000.0
        if priority:
            return transmission
        occupancy = self.cross.occupancy_bytes(t_ms, self.capacity_bits_per_s)
        if occupancy + size_bytes > self.queue_limit_bytes:
            raise ProbeLost(f"queue overflow at t={t_ms} ms")
        return self.cross.queuing_delay_ms(t_ms) + transmission


@dataclass
class ProbeResult:
    path_id: str
    rtt_ms: float
    one_way_fwd_ms: float
    timestamp_ms: float


class DataPlaneSim:
    """Probe-level simulator bound to one topology.

    cross_traffic maps (as_id, interface) -> CrossTraffic for the link
    direction leaving that interface. Unlisted directions are idle.
    """

    def __init__(self, topo: Topology, probe_size_bytes: int = 64,
                 capacity_bits_per_s: float = 1e9,
                 queue_limit_bytes: float = 1_000_000.0,
                 cross_traffic: dict[tuple[IsdAsId, int], CrossTraffic] | None = None,
                 priority_probe: bool = False):
        self.topo = topo
        self.probe_size_bytes = probe_size_bytes
        self.priority_probe = priority_probe
        self.clock = SimClock()
        self._queues: dict[tuple[IsdAsId, int], LinkQueue] = {}
        cross_traffic = cross_traffic or {}
        for key, cross in cross_traffic.items():
            self._queues[key] = LinkQueue(capacity_bits_per_s, queue_limit_bytes, cross)
        self._default_queue = LinkQueue(capacity_bits_per_s, queue_limit_bytes, CrossTraffic())

    def queue_for(self, as_id: IsdAsId, egress: int) -> LinkQueue:
        return self._queues.get((as_id, egress), self._default_queue)

    def _traverse(self, hops, t_ms: float) -> float:
        """Advance a packet along hops; returns arrival time at the last AS."""
        for idx, (as_id, ingress, egress) in enumerate(hops):
            if ingress is not None and egress is not None:
                t_ms += self.topo.ases[as_id].intra_latency(ingress, egress).min
            if egress is None:
                continue
            link = self.topo.link_at(as_id, egress)
            if link is None:
                raise ConfigError(f"path leaves {as_id}#{egress} but no link is attached")
            t_ms += self.queue_for(as_id, egress).transit_ms(t_ms, self.probe_size_bytes,
                                                             self.priority_probe)
            t_ms += link.latency_from(as_id, egress).min
        return t_ms

    def send_probe(self, path: EndToEndPath, at_ms: float = 0.0) -> ProbeResult:
        """One probe: forward walk plus the reversed walk for the RTT.

        Raises ProbeLost if any queue on either direction drops it.
        """
        fwd_hops = [(h.as_id, h.ingress, h.egress) for h in path.hops]
        arrival = self._traverse(fwd_hops, at_ms)
        one_way = arrival - at_ms
        rev_hops = [(h.as_id, h.egress, h.ingress) for h in reversed(path.hops)]
        back = self._traverse(rev_hops, arrival)
        if back * 1000.0 > self.clock.now_us:
            self.clock.advance_to(back * 1000.0)
        return ProbeResult(path.path_id, back - at_ms, one_way, at_ms)

    def path_propagation_ms(self, path: EndToEndPath) -> tuple[float, float]:
        """Ground-truth (forward, reverse) propagation of the path, no queuing."""
        fwd = 0.0
        rev = 0.0
        for h in path.hops:
            if h.ingress is not None and h.egress is not None:
                fwd += self.topo.ases[h.as_id].intra_latency(h.ingress, h.egress).min
                rev += self.topo.ases[h.as_id].intra_latency(h.egress, h.ingress).min
            if h.egress is not None:
                link = self.topo.link_at(h.as_id, h.egress)
                fwd += link.latency_from(h.as_id, h.egress).min
                rev += link.latency_from(*link.other(h.as_id, h.egress)).min
        return fwd, rev

    def measure_min_rtt(self, path: EndToEndPath, duration_s: float,
                        interval_ms: float, start_ms: float = 0.0) -> float:
        """Minimum RTT over probes sent every interval_ms for duration_s.

        This is the simulated operator measurement used to derive advertised
        propagation values from observation instead of ground truth. Raises
        MeasurementError when every probe is lost.
        """
        if duration_s <= 0 or interval_ms <= 0:
            raise ConfigError("duration and interval must be positive")
        events = EventQueue()
        t = start_ms
        while t < start_ms + duration_s * 1000.0:
            events.push(t * 1000.0, t)
            t += interval_ms
        best = None
        while len(events):
            _, _, send_at = events.pop()
            try:
                result = self.send_probe(path, send_at)
            except ProbeLost:
                continue
            if best is None or result.rtt_ms < best:
                best = result.rtt_ms
        if best is None:
            raise MeasurementError("all probes lost during min-RTT measurement")
        return best

    def link_rtt(self, link, t_ms: float) -> float:
        """RTT of one probe across a single link and back, starting at t_ms."""
        t = t_ms
        for as_id, ifid in (link.endpoint("a"), link.endpoint("b")):
            t += self.queue_for(as_id, ifid).transit_ms(t, self.probe_size_bytes,
                                                        self.priority_probe)
            t += link.latency_from(as_id, ifid).min
        return t - t_ms

    def link_min_rtt(self, link, duration_s: float, interval_ms: float,
                     start_ms: float = 0.0) -> float:
        """Operator-style minimum RTT over a measurement window on one link."""
        if duration_s <= 0 or interval_ms <= 0:
            raise ConfigError("duration and interval must be positive")
        best = None
        t = start_ms
        while t < start_ms + duration_s * 1000.0:
            try:
                rtt = self.link_rtt(link, t)
            except ProbeLost:
                t += interval_ms
                continue
            if best is None or rtt < best:
                best = rtt
            t += interval_ms
        if best is None:
            raise MeasurementError("all probes lost during link measurement")
        return best

    def measure_experienced(self, path: EndToEndPath, n: int,
                            spacing_ms: float = 200.0, start_ms: float = 0.0) -> float:
        """Median RTT of n probes; errors out when more than half are lost."""
        if n < 1:
            raise ConfigError("need at least one probe")
        samples = []
        drops = 0
        for i in range(n):
            try:
                samples.append(self.send_probe(path, start_ms + i * spacing_ms).rtt_ms)
            except ProbeLost:
                drops += 1
        if drops > n / 2:
            raise MeasurementError(f"{drops}/{n} probes lost")
        return statistics.median(samples)
