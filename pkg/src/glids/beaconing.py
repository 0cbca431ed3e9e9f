"""Control-plane beaconing with latency dissemination.

Routing messages (beacons) originate at core ASes and are extended AS by
AS: over core links among all core ASes, and from providers down to
customers inside each ISD. Each traversed AS appends an entry recording its
ingress/egress interfaces and, if its disclosure policy allows, a latency
attribute block:

* the minimum intra-AS propagation latency between ingress and egress,
  both directions,
* the egress link's propagation latency, both directions,
* for intra-ISD beacons only, a junction map: the latencies between the
  egress interface and every other local interface with a *lower*
  identifier. Core beacons carry no junction map; combining them with
  intra-ISD segments recovers junction latencies from the intra-ISD side.

The lower-identifier restriction guarantees any latency value appears in
exactly one of two combinable segments instead of both. It is gap-free as
long as core/peering interfaces use lower identifiers than provider-side
interfaces (see glids.topology); topologies breaking that convention can
yield junctions no segment covers, surfaced as JunctionResolutionError at
path-combination time.

A stored segment always ends in a terminal entry holding only the ingress
interface of the AS that registered it; forwarding a stored segment first
completes that tip (egress + latency attributes), then the next AS appends
its own terminal entry.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import BeaconingError, ConfigError
from .topology import AsNode, DirectedLatency, IsdAsId, Link, Topology

KIND_CORE = "core"
KIND_INTRA_ISD = "intra_isd"

DISCLOSE_FULL = "full"
DISCLOSE_NONE = "none"


@dataclass
class LatencyInfo:
    """Latency attributes one AS attaches to its beacon entry.

    intra_* cover the traversed ingress->egress pair (absent at the origin,
    which traversed nothing). inter_* cover the egress link in and against
    the beacon direction. junction_map maps a lower-numbered interface id to
    the (egress->j, j->egress) latency pair. `certainty` is an opaque
    operator-supplied measurement-confidence note, carried but never
    interpreted.
    """

    intra_fwd: DirectedLatency | None = None
    intra_rev: DirectedLatency | None = None
    inter_fwd: float = 0.0
    inter_rev: float = 0.0
    junction_map: dict[int, tuple[DirectedLatency, DirectedLatency]] = field(default_factory=dict)
    certainty: str | None = None


@dataclass
class SignatureStub:
    """Stand-in for the per-AS timestamped signature: signer, time, tag.

    The tag is a hash of the entry's contents; verify_attestations
    recomputes it, which is enough to exercise tamper-detection plumbing
    without a real signature scheme.
    """

    signer: IsdAsId
    timestamp_ms: float
    tag: str


@dataclass
class AsEntry:
    as_id: IsdAsId
    ingress: int | None
    egress: int | None
    latency: LatencyInfo | None = None
    attestation: SignatureStub | None = None


def _canon_lat(lat: DirectedLatency | None) -> str:
    if lat is None:
        return "-"
    return f"{lat.min!r}:{lat.max!r}" if lat.max is not None else f"{lat.min!r}"


def _entry_payload(entry: AsEntry) -> str:
    parts = [str(entry.as_id), str(entry.ingress), str(entry.egress)]
    li = entry.latency
    if li is not None:
        parts.append(_canon_lat(li.intra_fwd))
        parts.append(_canon_lat(li.intra_rev))
        parts.append(f"{li.inter_fwd!r}/{li.inter_rev!r}")
        for j in sorted(li.junction_map):
            fwd, rev = li.junction_map[j]
            parts.append(f"{j}={_canon_lat(fwd)},{_canon_lat(rev)}")
        if li.certainty:
            parts.append(li.certainty)
    return "|".join(parts)


def make_attestation(entry: AsEntry, timestamp_ms: float) -> SignatureStub:
    payload = f"{_entry_payload(entry)}|{timestamp_ms!r}"
    tag = hashlib.sha256(payload.encode()).hexdigest()[:16]
    return SignatureStub(entry.as_id, timestamp_ms, tag)


class PathSegment:
    """An ordered chain of AS entries built by beaconing.

    kind is "core" or "intra_isd". Entries run in construction order:
    origin first. segment_id identifies the hop chain (not the latency
    payload) and is stable across runs.
    """

    __slots__ = ("kind", "entries", "_segment_id")

    def __init__(self, kind: str, entries: tuple[AsEntry, ...]):
        if kind not in (KIND_CORE, KIND_INTRA_ISD):
            raise BeaconingError(f"unknown segment kind {kind!r}")
        if not entries:
            raise BeaconingError("segment needs at least one entry")
        self.kind = kind
        self.entries = tuple(entries)
        self._segment_id = None

    @property
    def segment_id(self) -> str:
        if self._segment_id is None:
            chain = ";".join(f"{e.as_id}:{e.ingress}:{e.egress}" for e in self.entries)
            self._segment_id = hashlib.sha256(f"{self.kind};{chain}".encode()).hexdigest()[:16]
        return self._segment_id

    @property
    def origin(self) -> IsdAsId:
        return self.entries[0].as_id

    @property
    def terminal(self) -> IsdAsId:
        return self.entries[-1].as_id

    def as_ids(self) -> list[IsdAsId]:
        return [e.as_id for e in self.entries]

    def entry_for(self, as_id: IsdAsId) -> AsEntry | None:
        for e in self.entries:
            if e.as_id == as_id:
                return e
        return None

    def accumulated_latency(self) -> float:
        """Propagation latency in beacon direction; undisclosed hops count 0."""
        total = 0.0
        for e in self.entries:
            if e.latency is None:
                continue
            if e.latency.intra_fwd is not None:
                total += e.latency.intra_fwd.min
            total += e.latency.inter_fwd
        return total

    def rank_key(self) -> tuple:
        return (self.accumulated_latency(), len(self.entries), self.segment_id)

    def __repr__(self):
        hops = "->".join(str(e.as_id) for e in self.entries)
        return f"<PathSegment {self.kind} {hops}>"


def originate(node: AsNode, kind: str) -> PathSegment:
    """Start a beacon at a core AS: one entry, no ingress, egress unset."""
    if not node.is_core:
        raise BeaconingError(f"{node.id} is not a core AS and cannot originate beacons")
    return PathSegment(kind, (AsEntry(node.id, None, None),))


def _junction_map(node: AsNode, egress: int) -> dict[int, tuple[DirectedLatency, DirectedLatency]]:
    return {
        j: (node.intra_latency(egress, j), node.intra_latency(j, egress))
        for j in sorted(node.interfaces)
        if j < egress
    }


def _latency_info(topo: Topology, node: AsNode, kind: str, ingress: int | None, egress: int) -> LatencyInfo:
    link = topo.link_at(node.id, egress)
    if link is None:
        raise BeaconingError(f"{node.id}#{egress} is not attached to a link")
    info = LatencyInfo(
        inter_fwd=link.latency_from(node.id, egress).min,
        inter_rev=link.latency_from(*link.other(node.id, egress)).min,
    )
    if ingress is not None:
        info.intra_fwd = node.intra_latency(ingress, egress)
        info.intra_rev = node.intra_latency(egress, ingress)
    if kind == KIND_INTRA_ISD:
        info.junction_map = _junction_map(node, egress)
    return info


def advance(topo: Topology, seg: PathSegment, egress: int,
            disclose: str = DISCLOSE_FULL, now_ms: float = 0.0) -> PathSegment:
    """Complete the tip entry's egress before the beacon leaves its AS.

    The tip must not already have an egress (it is a fresh origin or a
    registered terminal). Attaches the tip AS's latency attributes when its
    policy discloses, and re-signs the completed entry.
    """
    tip = seg.entries[-1]
    if tip.egress is not None:
        raise BeaconingError(f"segment tip at {tip.as_id} already has egress {tip.egress}")
    node = topo.ases[tip.as_id]
    if egress not in node.interfaces:
        raise BeaconingError(f"{tip.as_id} has no interface {egress}")
    if tip.ingress == egress:
        raise BeaconingError(f"{tip.as_id}: beacon ingress equals egress {egress}")
    latency = None
    if disclose == DISCLOSE_FULL:
        latency = _latency_info(topo, node, seg.kind, tip.ingress, egress)
    elif disclose != DISCLOSE_NONE:
        raise ConfigError(f"unknown disclosure policy {disclose!r}")
    new_tip = AsEntry(tip.as_id, tip.ingress, egress, latency)
    new_tip.attestation = make_attestation(new_tip, now_ms)
    return PathSegment(seg.kind, seg.entries[:-1] + (new_tip,))


def extend(topo: Topology, seg: PathSegment, at: AsNode, ingress: int, egress: int,
           disclose: str = DISCLOSE_FULL, now_ms: float = 0.0,
           tip_disclose: str = DISCLOSE_FULL) -> PathSegment:
    """Append a traversed-AS entry: beacon enters `at` via ingress, leaves via egress.

    The previous AS's egress must connect to `ingress`; if the segment was
    just originated its egress is derived from that link first (disclosed
    per tip_disclose).
    """
    if ingress == egress:
        raise BeaconingError(f"{at.id}: ingress {ingress} equals egress {egress}")
    if ingress not in at.interfaces or egress not in at.interfaces:
        missing = ingress if ingress not in at.interfaces else egress
        raise BeaconingError(f"{at.id} has no interface {missing}")
    link = topo.link_at(at.id, ingress)
    if link is None:
        raise BeaconingError(f"{at.id}#{ingress} is not attached to a link")
    prev_as, prev_if = link.other(at.id, ingress)
    tip = seg.entries[-1]
    if prev_as != tip.as_id:
        raise BeaconingError(f"link at {at.id}#{ingress} comes from {prev_as}, segment tip is {tip.as_id}")
    if tip.egress is None:
        seg = advance(topo, seg, prev_if, tip_disclose, now_ms)
    elif tip.egress != prev_if:
        raise BeaconingError(f"segment tip egress {tip.as_id}#{tip.egress} does not reach {at.id}#{ingress}")
    latency = None
    if disclose == DISCLOSE_FULL:
        latency = _latency_info(topo, at, seg.kind, ingress, egress)
    elif disclose != DISCLOSE_NONE:
        raise ConfigError(f"unknown disclosure policy {disclose!r}")
    entry = AsEntry(at.id, ingress, egress, latency)
    entry.attestation = make_attestation(entry, now_ms)
    return PathSegment(seg.kind, seg.entries + (entry,))


def register(topo: Topology, seg: PathSegment, at: AsNode, ingress: int,
             now_ms: float = 0.0) -> PathSegment:
    """Append the receiving AS's terminal entry when it stores the beacon."""
    tip = seg.entries[-1]
    if tip.egress is None:
        raise BeaconingError("cannot register a segment whose tip was never sent")
    link = topo.link_at(at.id, ingress)
    if link is None or link.other(at.id, ingress) != (tip.as_id, tip.egress):
        raise BeaconingError(f"segment tip {tip.as_id}#{tip.egress} does not connect to {at.id}#{ingress}")
    entry = AsEntry(at.id, ingress, None)
    entry.attestation = make_attestation(entry, now_ms)
    return PathSegment(seg.kind, seg.entries + (entry,))


def verify_attestations(seg: PathSegment, max_age_ms: float, now_ms: float) -> bool:
    """True iff every entry is signed by its own AS, fresh, and untampered."""
    for entry in seg.entries:
        sig = entry.attestation
        if sig is None or sig.signer != entry.as_id:
            return False
        if now_ms - sig.timestamp_ms > max_age_ms:
            return False
        if make_attestation(entry, sig.timestamp_ms).tag != sig.tag:
            return False
    return True


@dataclass
class BeaconSelectionPolicy:
    """How many beacons to retain/forward per (origin, kind) and their order.

    latency_priority ranks by accumulated propagation latency (missing
    values count 0), then fewer AS hops, then segment id.
    """

    k: int = 5
    rank: str = "latency_priority"

    def validate(self):
        if self.k < 1:
            raise ConfigError("selection k must be >= 1")
        if self.rank != "latency_priority":
            raise ConfigError(f"unknown selection rank {self.rank!r}")


class SegmentStore:
    """Per-AS collections of received segments, k-best per (origin, kind)."""

    def __init__(self, policy: BeaconSelectionPolicy | None = None):
        self.policy = policy or BeaconSelectionPolicy()
        self.policy.validate()
        self._by_as: dict[IsdAsId, dict[tuple[str, IsdAsId], list[PathSegment]]] = {}

    def insert(self, at: IsdAsId, seg: PathSegment):
        groups = self._by_as.setdefault(at, {})
        group = groups.setdefault((seg.kind, seg.origin), [])
        group[:] = [s for s in group if s.segment_id != seg.segment_id]
        group.append(seg)
        group.sort(key=PathSegment.rank_key)
        del group[self.policy.k:]

    def segments(self, at: IsdAsId, kind: str | None = None,
                 origin: IsdAsId | None = None) -> list[PathSegment]:
        out = []
        for (k, o), group in sorted(self._by_as.get(at, {}).items()):
            if kind is not None and k != kind:
                continue
            if origin is not None and o != origin:
                continue
            out.extend(group)
        return out

    def ases(self) -> list[IsdAsId]:
        return sorted(self._by_as)

    def core_segments(self, origin: IsdAsId, terminal: IsdAsId) -> list[PathSegment]:
        """Core segments built origin->terminal (held at the terminal AS)."""
        return [s for s in self.segments(terminal, KIND_CORE, origin) if s.terminal == terminal]

    def all_segments(self) -> list[tuple[IsdAsId, PathSegment]]:
        out = []
        for at in sorted(self._by_as):
            for seg in self.segments(at):
                out.append((at, seg))
        return out

    # -- text round trip ----------------------------------------------------

    def export_text(self) -> str:
        """Dump every stored segment, one record per segment, re-importable."""
        lines = [f"policy {self.policy.k} {self.policy.rank}"]
        for at, seg in self.all_segments():
            lines.append(f"store {at}")
            lines.append(f"segment {seg.kind} {seg.segment_id}")
            for e in seg.entries:
                ing = "-" if e.ingress is None else str(e.ingress)
                egr = "-" if e.egress is None else str(e.egress)
                lines.append(f"entry {e.as_id} {ing} {egr}")
                li = e.latency
                if li is not None:
                    if li.intra_fwd is not None:
                        lines.append(f"intra {_fmt_dl(li.intra_fwd)} {_fmt_dl(li.intra_rev)}")
                    lines.append(f"inter {li.inter_fwd!r} {li.inter_rev!r}")
                    for j in sorted(li.junction_map):
                        fwd, rev = li.junction_map[j]
                        lines.append(f"junction {j} {_fmt_dl(fwd)} {_fmt_dl(rev)}")
                    if li.certainty is not None:
                        lines.append(f"certainty {li.certainty}")
                if e.attestation is not None:
                    sig = e.attestation
                    lines.append(f"sig {sig.signer} {sig.timestamp_ms!r} {sig.tag}")
            lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def import_text(cls, text: str) -> "SegmentStore":
        policy = BeaconSelectionPolicy()
        store = None
        current_at = None
        kind = None
        entries: list[AsEntry] = []

        def flush():
            nonlocal kind, entries
            if kind is not None:
                if current_at is None:
                    raise ConfigError("segment record outside any store section")
                store.insert(current_at, PathSegment(kind, tuple(entries)))
            kind, entries = None, []

        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            tag = fields[0]
            try:
                if tag == "policy":
                    policy = BeaconSelectionPolicy(int(fields[1]), fields[2])
                    store = cls(policy)
                elif tag == "store":
                    if store is None:
                        store = cls(policy)
                    flush()
                    current_at = IsdAsId.parse(fields[1])
                elif tag == "segment":
                    flush()
                    kind = fields[1]
                elif tag == "entry":
                    ing = None if fields[2] == "-" else int(fields[2])
                    egr = None if fields[3] == "-" else int(fields[3])
                    entries.append(AsEntry(IsdAsId.parse(fields[1]), ing, egr))
                elif tag == "intra":
                    li = _latency_of(entries[-1])
                    li.intra_fwd = _parse_dl(fields[1], fields[2])
                    li.intra_rev = _parse_dl(fields[3], fields[4])
                elif tag == "inter":
                    li = _latency_of(entries[-1])
                    li.inter_fwd = float(fields[1])
                    li.inter_rev = float(fields[2])
                elif tag == "junction":
                    li = _latency_of(entries[-1])
                    li.junction_map[int(fields[1])] = (
                        _parse_dl(fields[2], fields[3]), _parse_dl(fields[4], fields[5]))
                elif tag == "certainty":
                    _latency_of(entries[-1]).certainty = " ".join(fields[1:])
                elif tag == "sig":
                    entries[-1].attestation = SignatureStub(
                        IsdAsId.parse(fields[1]), float(fields[2]), fields[3])
                elif tag == "end":
                    flush()
                else:
                    raise ConfigError(f"unknown record {tag!r}")
            except (IndexError, ValueError) as exc:
                raise ConfigError(f"segment store line {lineno}: {exc}") from exc
        flush()
        return store if store is not None else cls(policy)


def _fmt_dl(lat: DirectedLatency) -> str:
    mx = "-" if lat.max is None else repr(lat.max)
    return f"{lat.min!r} {mx}"


def _parse_dl(mn: str, mx: str) -> DirectedLatency:
    return DirectedLatency(float(mn), None if mx == "-" else float(mx))


def _latency_of(entry: AsEntry) -> LatencyInfo:
    if entry.latency is None:
        entry.latency = LatencyInfo()
    return entry.latency


def run_beaconing(topo: Topology, rounds: int,
                  selection: BeaconSelectionPolicy | None = None,
                  disclose_map: dict[IsdAsId, str] | None = None,
                  beacon_interval_ms: float = 1000.0) -> SegmentStore:
    """Synchronous-round beaconing to (approximate) steady state.

    Per round every core AS originates core beacons to all core neighbors
    and intra-ISD beacons to all customers, and every AS forwards its
    currently retained segments (core ones over core links, intra-ISD ones
    to customers). Rounds should be at least the topology diameter
    (Topology.diameter) for every AS to hold its steady-state selection.
    Deterministic: identical inputs give identical stores.
    """
    disclose_map = disclose_map or {}
    store = SegmentStore(selection)

    def policy_of(as_id: IsdAsId) -> str:
        return disclose_map.get(as_id, DISCLOSE_FULL)

    core_links: dict[IsdAsId, list[Link]] = {}
    child_links: dict[IsdAsId, list[Link]] = {}
    for as_id in sorted(topo.ases):
        core_links[as_id] = sorted(topo.core_links_of(as_id),
                                   key=lambda l: l.other(as_id, l.a_if if l.a_as == as_id else l.b_if))
        child_links[as_id] = sorted(topo.children_links(as_id), key=lambda l: (l.b_as, l.b_if))

    for rnd in range(rounds):
        now = (rnd + 1) * beacon_interval_ms
        deliveries: list[tuple[IsdAsId, int, PathSegment]] = []

        def send(seg: PathSegment, link: Link, from_as: IsdAsId):
            from_if = link.a_if if link.a_as == from_as else link.b_if
            to_as, to_if = link.other(from_as, from_if)
            if to_as in seg.as_ids():
                return
            out = advance(topo, seg, from_if, policy_of(from_as), now)
            deliveries.append((to_as, to_if, out))

        for origin in topo.core_ases():
            node = topo.ases[origin]
            for link in core_links[origin]:
                send(originate(node, KIND_CORE), link, origin)
            for link in child_links[origin]:
                send(originate(node, KIND_INTRA_ISD), link, origin)

        for as_id in sorted(topo.ases):
            for seg in store.segments(as_id, KIND_CORE):
                for link in core_links[as_id]:
                    send(seg, link, as_id)
            for seg in store.segments(as_id, KIND_INTRA_ISD):
                for link in child_links[as_id]:
                    send(seg, link, as_id)

        for to_as, to_if, seg in deliveries:
            store.insert(to_as, register(topo, seg, topo.ases[to_as], to_if, now))

    return store
