"""Packet-level dumbbell simulation: CUBIC vs BBR, with an informed variant.

Topology: n flows, each with a private 10 ms access link, share one
drop-tail queue feeding a bottleneck link (default 100 Mbps, 10 ms). Acks
return over an uncongested 20 ms reverse path, so the true round-trip
propagation is 40 ms. The queue defaults to 1.5 bandwidth-delay products
(100 Mbps x 40 ms = 500 kB, so 750 kB).

Flow models:

* CUBIC: slow start, cubic-function congestion avoidance with the
  TCP-friendly region (beta 0.7, C 0.4), multiplicative decrease on loss,
  one reduction per congestion epoch. Losses surface via a fixed
  detection delay after the queue drop (a fast-retransmit stand-in;
  byte-stream recovery details are out of scope).
* BBR (v1 semantics): windowed-max delivery-rate filter, windowed-min
  round-trip filter with 10 s staleness and ProbeRTT episodes of
  max(200 ms, one round) at 4 packets in flight, startup/drain/probe_bw
  gain cycling, pacing. Loss-blind except for inflight bookkeeping.
* Informed BBR: identical, except its propagation-delay estimate is pinned
  to the true value injected at flow start and ProbeRTT never happens:
  with the estimate known, the probing that exists to discover it has no
  job left.

The event loop is single-threaded and fully deterministic per seed.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

from .errors import ConfigError

MSS = 1500

CUBIC_BETA = 0.7
CUBIC_C = 0.4

BBR_HIGH_GAIN = 2.885  # 2/ln(2)
BBR_DRAIN_GAIN = 1.0 / BBR_HIGH_GAIN
BBR_CWND_GAIN = 2.0
BBR_PROBE_BW_CYCLE = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
BBR_BTLBW_WINDOW_ROUNDS = 10
BBR_RTPROP_WINDOW_S = 10.0
BBR_PROBE_RTT_DURATION_S = 0.2
BBR_MIN_CWND = 4 * MSS
# cwnd headroom above gain*BDP: three send quanta of two packets each,
# mirroring the quantization budget real senders add on top of the BDP cap.
BBR_CWND_QUANTA = 3 * 2 * MSS

STARTUP, DRAIN, PROBE_BW, PROBE_RTT = "startup", "drain", "probe_bw", "probe_rtt"

# arrive/ack/loss/send-timer/queue-sample event kinds, heap-ordered by
# (time, seq) so simultaneous events stay stable across runs.
EV_ARRIVE, EV_ACK, EV_LOSS, EV_SEND, EV_SAMPLE = 0, 1, 2, 3, 4


@dataclass
class DumbbellConfig:
    n_bbr: int = 0
    n_cubic: int = 10
    informed: bool = False
    bottleneck_bits_per_s: float = 100e6
    owd_nonshared_ms: float = 10.0
    owd_shared_ms: float = 10.0
    queue_bytes: float = 750_000.0
    duration_s: float = 60.0
    warmup_s: float = 10.0
    seed: int = 1
    start_stagger_s: float = 0.002

    def validate(self):
        if self.n_bbr < 0 or self.n_cubic < 0 or self.n_bbr + self.n_cubic == 0:
            raise ConfigError("need at least one flow")
        if self.bottleneck_bits_per_s <= 0:
            raise ConfigError("bottleneck rate must be positive")
        if self.queue_bytes <= 0:
            raise ConfigError("queue must be positive")
        if self.duration_s <= self.warmup_s:
            raise ConfigError("duration must exceed warmup")

    @property
    def rtt_prop_s(self) -> float:
        return 2.0 * (self.owd_nonshared_ms + self.owd_shared_ms) / 1000.0


class _MaxFilter:
    """Max over samples from the last `window` rounds (monotone deque)."""

    __slots__ = ("window", "_samples")

    def __init__(self, window: int):
        self.window = window
        self._samples: list[tuple[int, float]] = []

    def update(self, rnd: int, value: float) -> float:
        samples = [s for s in self._samples if s[0] > rnd - self.window and s[1] > value]
        samples.append((rnd, value))
        self._samples = samples
        return self._samples[0][1] if self._samples[0][1] >= value else value

    def get(self) -> float:
        return max((v for _, v in self._samples), default=0.0)


class Flow:
    """Shared sender state: windowing, delivery accounting, statistics."""

    cca = "base"

    def __init__(self, flow_id: int, sim: "DumbbellSim", start_s: float):
        self.id = flow_id
        self.sim = sim
        self.start_s = start_s
        self.cwnd = 10 * MSS
        self.inflight = 0
        self.next_seq = 0
        self.outstanding: dict[int, tuple] = {}
        self.delivered = 0
        self.delivered_time = start_s
        self.delivered_in_window = 0
        self.losses = 0
        self.srtt = None
        self.timer_at = None

    # -- sending -----------------------------------------------------------

    def pacing_interval(self, now: float) -> float | None:
        return None  # unpaced: send whenever the window allows

    def pump(self, now: float):
        while self.inflight + MSS <= self.cwnd:
            interval = self.pacing_interval(now)
            if interval is None:
                self._emit(now)
                continue
            send_at = max(now, self.next_send_time)
            if send_at <= now:
                self._emit(now)
                self.next_send_time = now + interval
            else:
                if self.timer_at is None or send_at < self.timer_at:
                    self.timer_at = send_at
                    self.sim.push(send_at, EV_SEND, self, None)
                return

    def _emit(self, now: float):
        pkt = (self.next_seq, now, self.delivered, self.delivered_time)
        self.outstanding[self.next_seq] = pkt
        self.next_seq += 1
        self.inflight += MSS
        self.sim.push(now + self.sim.owd_nonshared_s, EV_ARRIVE, self, pkt)

    # -- events ------------------------------------------------------------

    def on_ack(self, pkt: tuple, now: float):
        seq, sent_time, delivered_at_send, delivered_time_at_send = pkt
        if seq not in self.outstanding:
            return
        del self.outstanding[seq]
        self.inflight -= MSS
        self.delivered += MSS
        self.delivered_time = now
        if now >= self.sim.warmup_s:
            self.delivered_in_window += MSS
        rtt = now - sent_time
        self.srtt = rtt if self.srtt is None else 0.875 * self.srtt + 0.125 * rtt
        self.cca_ack(pkt, rtt, now)
        self.pump(now)

    def on_loss(self, pkt: tuple, now: float):
        seq = pkt[0]
        if seq not in self.outstanding:
            return
        del self.outstanding[seq]
        self.inflight -= MSS
        self.losses += 1
        self.cca_loss(pkt, now)
        self.pump(now)

    def cca_ack(self, pkt, rtt, now):
        raise NotImplementedError

    def cca_loss(self, pkt, now):
        raise NotImplementedError


class CubicFlow(Flow):
    cca = "cubic"

    def __init__(self, flow_id, sim, start_s):
        super().__init__(flow_id, sim, start_s)
        self.ssthresh = math.inf
        self.w_max_seg = 0.0
        self.k = 0.0
        self.epoch_start = None
        self.loss_epoch_start = -math.inf

    def cca_ack(self, pkt, rtt, now):
        if self.cwnd < self.ssthresh:
            self.cwnd += MSS
            return
        if self.epoch_start is None:
            self.epoch_start = now
            cwnd_seg = self.cwnd / MSS
            self.k = ((self.w_max_seg - cwnd_seg) / CUBIC_C) ** (1.0 / 3.0) \
                if self.w_max_seg > cwnd_seg else 0.0
        t = now - self.epoch_start
        rtt_est = self.srtt if self.srtt else rtt
        target = CUBIC_C * (t + rtt_est - self.k) ** 3 + self.w_max_seg
        w_est = self.w_max_seg * CUBIC_BETA + \
            (3.0 * (1.0 - CUBIC_BETA) / (1.0 + CUBIC_BETA)) * (t / rtt_est)
        target = max(target, w_est)
        cwnd_seg = self.cwnd / MSS
        if target > cwnd_seg:
            self.cwnd += MSS * (target - cwnd_seg) / cwnd_seg
        else:
            self.cwnd += MSS * 0.01 / cwnd_seg

    def cca_loss(self, pkt, now):
        # One multiplicative decrease per congestion epoch: drops of packets
        # sent before the last reduction don't reduce again.
        if pkt[1] < self.loss_epoch_start:
            return
        self.loss_epoch_start = now
        self.w_max_seg = self.cwnd / MSS
        self.cwnd = max(2 * MSS, self.cwnd * CUBIC_BETA)
        self.ssthresh = self.cwnd
        self.epoch_start = None


class BbrFlow(Flow):
    cca = "bbr"

    def __init__(self, flow_id, sim, start_s, informed: bool, rng: random.Random):
        super().__init__(flow_id, sim, start_s)
        self.informed = informed
        if informed:
            self.cca = "bbr_informed"
        self.phase = STARTUP
        self.pacing_gain = BBR_HIGH_GAIN
        self.cwnd_gain = BBR_HIGH_GAIN
        self.btlbw_filter = _MaxFilter(BBR_BTLBW_WINDOW_ROUNDS)
        self.btlbw = 0.0
        true_rtprop = sim.cfg.rtt_prop_s
        # Informed flows get the true propagation RTT injected at start and
        # never let measurements touch it.
        self.rtprop = true_rtprop if informed else math.inf
        self.rtprop_stamp = start_s
        self.min_rtprop_seen = self.rtprop if informed else math.inf
        self._rtprop_integral = 0.0
        self._rtprop_first_t = None
        self._rtprop_last_t = None
        self.round_count = 0
        self.next_round_delivered = 0
        self.full_bw = 0.0
        self.full_bw_count = 0
        self.filled_pipe = False
        self.cycle_index = 0
        self.cycle_stamp = start_s
        self.probe_rtt_done_stamp = None
        self.next_send_time = start_s
        # initial pacing primed from the handshake RTT, like real stacks
        self.srtt = sim.cfg.rtt_prop_s
        self.pacing_rate = BBR_HIGH_GAIN * self.cwnd / self.srtt
        self._rng = rng

    def pacing_interval(self, now: float) -> float:
        return MSS / self.pacing_rate

    def _advance_round(self, pkt):
        if pkt[2] >= self.next_round_delivered:
            self.round_count += 1
            self.next_round_delivered = self.delivered
            return True
        return False

    def cca_ack(self, pkt, rtt, now):
        round_advanced = self._advance_round(pkt)
        seq, sent_time, delivered_at_send, delivered_time_at_send = pkt
        elapsed = now - delivered_time_at_send
        if elapsed > 0:
            rate = (self.delivered - delivered_at_send) / elapsed
            self.btlbw = self.btlbw_filter.update(self.round_count, rate)

        if not self.informed:
            rtprop_expired = now > self.rtprop_stamp + BBR_RTPROP_WINDOW_S
            if rtt <= self.rtprop or rtprop_expired:
                self.rtprop = rtt
                self.rtprop_stamp = now
            self.min_rtprop_seen = min(self.min_rtprop_seen, self.rtprop)
            if self.phase != PROBE_RTT and rtprop_expired:
                self._enter_probe_rtt(now)
        if self._rtprop_last_t is not None and math.isfinite(self.rtprop):
            self._rtprop_integral += (now - self._rtprop_last_t) * self.rtprop
        elif self._rtprop_first_t is None:
            self._rtprop_first_t = now
        self._rtprop_last_t = now

        if self.phase == STARTUP and round_advanced:
            if self.btlbw >= self.full_bw * 1.25:
                self.full_bw = self.btlbw
                self.full_bw_count = 0
            else:
                self.full_bw_count += 1
                if self.full_bw_count >= 3:
                    self.filled_pipe = True
                    self.phase = DRAIN
                    self.pacing_gain = BBR_DRAIN_GAIN
                    self.cwnd_gain = BBR_CWND_GAIN
        if self.phase == DRAIN and self.inflight <= self._bdp():
            self._enter_probe_bw(now)
        if self.phase == PROBE_BW and now - self.cycle_stamp > self._rtprop_or_default():
            self.cycle_index = (self.cycle_index + 1) % len(BBR_PROBE_BW_CYCLE)
            self.cycle_stamp = now
            self.pacing_gain = BBR_PROBE_BW_CYCLE[self.cycle_index]
        if self.phase == PROBE_RTT:
            if self.probe_rtt_done_stamp is None and self.inflight <= BBR_MIN_CWND:
                self.probe_rtt_done_stamp = now + max(BBR_PROBE_RTT_DURATION_S,
                                                      self._rtprop_or_default())
            elif self.probe_rtt_done_stamp is not None and now >= self.probe_rtt_done_stamp:
                self.rtprop_stamp = now
                if self.filled_pipe:
                    self._enter_probe_bw(now)
                else:
                    self.phase = STARTUP
                    self.pacing_gain = self.cwnd_gain = BBR_HIGH_GAIN

        if self.btlbw > 0:
            self.pacing_rate = self.pacing_gain * self.btlbw
        self._update_cwnd()

    def cca_loss(self, pkt, now):
        pass  # v1 reacts to delay/bandwidth, not individual drops

    def _rtprop_or_default(self) -> float:
        return self.rtprop if math.isfinite(self.rtprop) else self.srtt

    def _bdp(self) -> float:
        return self.btlbw * self._rtprop_or_default()

    def _enter_probe_bw(self, now):
        self.phase = PROBE_BW
        self.cwnd_gain = BBR_CWND_GAIN
        self.cycle_index = self._rng.choice((0, 2, 3, 4, 5, 6, 7))
        self.cycle_stamp = now
        self.pacing_gain = BBR_PROBE_BW_CYCLE[self.cycle_index]

    def _enter_probe_rtt(self, now):
        self.phase = PROBE_RTT
        self.pacing_gain = 1.0
        self.cwnd_gain = 1.0
        self.probe_rtt_done_stamp = None

    def _update_cwnd(self):
        if self.phase == PROBE_RTT:
            self.cwnd = min(self.cwnd, BBR_MIN_CWND)
        elif self.btlbw > 0:
            target = self.cwnd_gain * self._bdp() + BBR_CWND_QUANTA
            if self.filled_pipe:
                self.cwnd = min(self.cwnd + MSS, target)
            elif self.cwnd < target:
                self.cwnd += MSS
        self.cwnd = max(self.cwnd, BBR_MIN_CWND)


@dataclass
class FlowStats:
    flow_id: int
    cca: str
    delivered_bytes: int
    goodput_bits_per_s: float
    losses: int
    min_rtprop_ms: float | None
    last_rtprop_ms: float | None
    mean_rtprop_ms: float | None = None


@dataclass
class FairnessResult:
    config: DumbbellConfig
    flows: list[FlowStats]
    bbr_share: float
    total_goodput_bits_per_s: float
    utilization: float
    drops: int
    queue_samples: list[tuple[float, float]] = field(repr=False, default_factory=list)


class DumbbellSim:
    """One fairness experiment: event loop plus the shared bottleneck."""

    def __init__(self, cfg: DumbbellConfig):
        cfg.validate()
        self.cfg = cfg
        self.owd_nonshared_s = cfg.owd_nonshared_ms / 1000.0
        self.owd_shared_s = cfg.owd_shared_ms / 1000.0
        self.rate_bytes_per_s = cfg.bottleneck_bits_per_s / 8.0
        self.warmup_s = cfg.warmup_s
        self._heap: list[tuple] = []
        self._seq = 0
        self.busy_until = 0.0
        self.drops = 0
        self.queue_samples: list[tuple[float, float]] = []
        self.flows: list[Flow] = []
        for i in range(cfg.n_bbr):
            self.flows.append(BbrFlow(i, self, i * cfg.start_stagger_s, cfg.informed,
                                      random.Random(cfg.seed * 1009 + i)))
        for j in range(cfg.n_cubic):
            i = cfg.n_bbr + j
            self.flows.append(CubicFlow(i, self, i * cfg.start_stagger_s))

    def push(self, t: float, kind: int, flow, pkt):
        heapq.heappush(self._heap, (t, self._seq, kind, flow, pkt))
        self._seq += 1

    def _backlog(self, now: float) -> float:
        return max(0.0, self.busy_until - now) * self.rate_bytes_per_s

    # detection delay for a queue drop: rest of the forward path, the ack
    # path, and three packet services (fast-retransmit stand-in)
    def _loss_delay(self) -> float:
        return self.owd_shared_s + self.owd_shared_s + self.owd_nonshared_s \
            + 3 * MSS / self.rate_bytes_per_s

    def run(self) -> FairnessResult:
        cfg = self.cfg
        for flow in self.flows:
            self.push(flow.start_s, EV_SEND, flow, None)
        t_sample = 0.0
        while t_sample < cfg.duration_s:
            self.push(t_sample, EV_SAMPLE, None, None)
            t_sample += 0.25

        while self._heap:
            now, _, kind, flow, pkt = heapq.heappop(self._heap)
            if now > cfg.duration_s:
                break
            if kind == EV_ARRIVE:
                if self._backlog(now) + MSS > cfg.queue_bytes:
                    self.drops += 1
                    self.push(now + self._loss_delay(), EV_LOSS, flow, pkt)
                else:
                    start = max(now, self.busy_until)
                    self.busy_until = start + MSS / self.rate_bytes_per_s
                    ack_at = self.busy_until + self.owd_shared_s \
                        + self.owd_shared_s + self.owd_nonshared_s
                    self.push(ack_at, EV_ACK, flow, pkt)
            elif kind == EV_ACK:
                flow.on_ack(pkt, now)
            elif kind == EV_LOSS:
                flow.on_loss(pkt, now)
            elif kind == EV_SEND:
                flow.timer_at = None
                flow.pump(now)
            else:
                self.queue_samples.append((now, self._backlog(now)))

        window = cfg.duration_s - cfg.warmup_s
        stats = []
        bbr_goodput = 0.0
        total_goodput = 0.0
        for flow in self.flows:
            goodput = flow.delivered_in_window * 8.0 / window
            total_goodput += goodput
            mean_rt = None
            if isinstance(flow, BbrFlow):
                bbr_goodput += goodput
                min_rt = None if not math.isfinite(flow.min_rtprop_seen) else flow.min_rtprop_seen * 1000
                last_rt = None if not math.isfinite(flow.rtprop) else flow.rtprop * 1000
                if flow._rtprop_first_t is not None and flow._rtprop_last_t > flow._rtprop_first_t:
                    mean_rt = flow._rtprop_integral / (flow._rtprop_last_t - flow._rtprop_first_t) * 1000
            else:
                min_rt = last_rt = None
            stats.append(FlowStats(flow.id, flow.cca, flow.delivered_in_window,
                                   goodput, flow.losses, min_rt, last_rt, mean_rt))
        share = bbr_goodput / total_goodput if total_goodput > 0 else 0.0
        return FairnessResult(cfg, stats, share, total_goodput,
                              total_goodput / cfg.bottleneck_bits_per_s,
                              self.drops, self.queue_samples)


def run_fairness(cfg: DumbbellConfig) -> FairnessResult:
    """Run one dumbbell competition; deterministic per config and seed."""
    return DumbbellSim(cfg).run()


def run_sweep(n_flows: int = 10, informed: bool = False, seed: int = 1,
              duration_s: float = 60.0, **overrides) -> list[FairnessResult]:
    """Fairness results for n_bbr = 0..n_flows with the rest CUBIC."""
    out = []
    for n_bbr in range(n_flows + 1):
        cfg = DumbbellConfig(n_bbr=n_bbr, n_cubic=n_flows - n_bbr,
                             informed=informed, seed=seed,
                             duration_s=duration_s, **overrides)
        out.append(run_fairness(cfg))
    return out
