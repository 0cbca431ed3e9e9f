"""Combining path segments into end-to-end paths and estimating their latency.

A path uses up to three segments: an up segment (traversed against its
construction order, from the source AS to its core origin), a core segment
(construction order), and a down segment (construction order). Any role may
be absent; the junction ASes of adjacent roles must match. A peering
variant joins two intra-ISD segments across a peering link, truncating both
at the peering ASes.

Latency accounting walks the packet direction and accumulates:

* per traversed AS: the disclosed minimum intra-AS latency of its
  (ingress, egress) pair, direction-correct,
* per inter-AS link: the disclosed latency of the direction traveled,
  charged to the beacon entry that owns the link (its egress),
* per junction: the latency between the two segments' interfaces at the
  junction AS, resolved from exactly one junction-map (or traversed-pair)
  source per the lower-identifier dissemination rule,
* for peering joins: the peering link's latency from topology ground
  truth, counted as disclosed only when both peering ASes disclosed.

Undisclosed contributions follow the caller's policy: zero_fill counts
them as 0 ms and degrades completeness (the estimate stays a lower bound),
discard rejects the path, naming the missing hops.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .beaconing import KIND_CORE, KIND_INTRA_ISD, AsEntry, PathSegment, SegmentStore
from .errors import CombineError, EstimateRejected, JunctionResolutionError
from .topology import IsdAsId, Link, Topology

ZERO_FILL = "zero_fill"
DISCARD = "discard"

COMPLETE = "complete"
PARTIAL = "partial"
EMPTY = "empty"


@dataclass(frozen=True)
class Hop:
    """One traversed AS: packet enters via ingress, leaves via egress.

    ingress is None at the source AS, egress is None at the destination.
    """

    as_id: IsdAsId
    ingress: int | None
    egress: int | None


@dataclass(frozen=True)
class Junction:
    """Where two segments meet: packet moves if_arrival -> if_departure inside as_id."""

    as_id: IsdAsId
    if_arrival: int
    if_departure: int


@dataclass
class Contribution:
    """One additive term of a latency estimate."""

    as_id: IsdAsId
    kind: str  # intra | inter | junction | peering
    fwd_ms: float
    rev_ms: float
    disclosed: bool
    hop_index: int


@dataclass
class LatencyEstimate:
    total_min: float
    completeness: str
    n_missing: int
    per_hop: list[Contribution]
    total_min_rev: float

    @property
    def complete(self) -> bool:
        return self.completeness == COMPLETE


class EndToEndPath:
    """A combined end-to-end path plus the segment context that built it."""

    __slots__ = ("up", "core", "down", "peering_link", "hops", "junctions",
                 "_segment_entries", "_path_id")

    def __init__(self, up, core, down, peering_link, hops, junctions, segment_entries):
        self.up: PathSegment | None = up
        self.core: PathSegment | None = core
        self.down: PathSegment | None = down
        self.peering_link: Link | None = peering_link
        self.hops: tuple[Hop, ...] = tuple(hops)
        self.junctions: tuple[Junction, ...] = tuple(junctions)
        # hop index -> (segment role, entry, reversed) for accounting.
        self._segment_entries = segment_entries
        self._path_id = None

    @property
    def path_id(self) -> str:
        if self._path_id is None:
            text = ";".join(f"{h.as_id}:{h.ingress}:{h.egress}" for h in self.hops)
            self._path_id = hashlib.sha256(text.encode()).hexdigest()[:16]
        return self._path_id

    @property
    def src(self) -> IsdAsId:
        return self.hops[0].as_id

    @property
    def dst(self) -> IsdAsId:
        return self.hops[-1].as_id

    def segments(self) -> list[PathSegment]:
        return [s for s in (self.up, self.core, self.down) if s is not None]

    def hop_string(self) -> str:
        return ">".join(
            f"{h.as_id}"
            + (f"[{h.ingress if h.ingress is not None else ''}:{h.egress if h.egress is not None else ''}]")
            for h in self.hops
        )

    def __repr__(self):
        return f"<EndToEndPath {self.src}->{self.dst} {len(self.hops)} hops>"


def _reversed_up_parts(up: PathSegment, start_index: int = 0):
    """Hops and accounting rows for an up segment traversed terminal->origin.

    start_index bounds the traversal at that construction-order entry (used
    by the peering variant); 0 means travel all the way to the origin.
    """
    hops: list[Hop] = []
    rows = []
    entries = up.entries
    for pos in range(len(entries) - 1, start_index - 1, -1):
        e = entries[pos]
        packet_in = e.egress  # None at the stored terminal: path starts there
        packet_out = e.ingress
        hops.append(Hop(e.as_id, packet_in, packet_out))
        rows.append(("up", e, True))
    return hops, rows


def _forward_parts(seg: PathSegment, role: str, end_index: int | None = None):
    """Hops and accounting rows for a segment traversed in construction order."""
    hops: list[Hop] = []
    rows = []
    entries = seg.entries if end_index is None else seg.entries[: end_index + 1]
    for e in entries:
        hops.append(Hop(e.as_id, e.ingress, e.egress))
        rows.append((role, e, False))
    return hops, rows


def _merge_at_junction(hops, rows, next_hops, next_rows, junctions):
    """Splice two hop lists at their shared junction AS."""
    last = hops[-1]
    first = next_hops[0]
    if last.as_id != first.as_id:
        raise CombineError(f"junction mismatch: {last.as_id} vs {first.as_id}")
    if last.ingress is None or first.egress is None:
        raise CombineError(f"cannot junction at a path endpoint ({last.as_id})")
    junctions.append(Junction(last.as_id, last.ingress, first.egress))
    merged = Hop(last.as_id, last.ingress, first.egress)
    hops[-1] = merged
    rows[-1] = ("junction", (rows[-1], next_rows[0]), None)
    hops.extend(next_hops[1:])
    rows.extend(next_rows[1:])


def combine(up: PathSegment | None = None, core: PathSegment | None = None,
            down: PathSegment | None = None) -> EndToEndPath:
    """Join up/core/down segments whose junction ASes match."""
    if up is None and core is None and down is None:
        raise CombineError("at least one segment is required")
    if up is not None and up.kind != KIND_INTRA_ISD:
        raise CombineError(f"up segment must be intra_isd, got {up.kind}")
    if down is not None and down.kind != KIND_INTRA_ISD:
        raise CombineError(f"down segment must be intra_isd, got {down.kind}")
    if core is not None and core.kind != KIND_CORE:
        raise CombineError(f"core segment must be core kind, got {core.kind}")
    if up is not None and down is not None and core is None and up.origin != down.origin:
        raise CombineError(
            f"up and down segments meet at different core ASes ({up.origin} vs {down.origin})"
            " and no core segment bridges them")

    hops: list[Hop] = []
    rows: list = []
    junctions: list[Junction] = []
    if up is not None:
        hops, rows = _reversed_up_parts(up)
    for seg, role in ((core, "core"), (down, "down")):
        if seg is None:
            continue
        nhops, nrows = _forward_parts(seg, role)
        if not hops:
            hops, rows = nhops, nrows
        else:
            _merge_at_junction(hops, rows, nhops, nrows, junctions)
    if len(hops) < 2:
        raise CombineError("combined path must traverse at least two ASes")
    return EndToEndPath(up, core, down, None, hops, junctions, rows)


def combine_peering(topo: Topology, up: PathSegment, down: PathSegment,
                    link: Link) -> EndToEndPath:
    """Join two intra-ISD segments across a peering link (shortcut variant).

    The up segment is traversed from its stored terminal only as far as the
    peering AS; the down segment from the peering AS to its terminal.
    """
    if up.kind != KIND_INTRA_ISD or down.kind != KIND_INTRA_ISD:
        raise CombineError("peering combination joins two intra_isd segments")
    if link.kind != "peering":
        raise CombineError(f"link {link.a_as}#{link.a_if}~{link.b_as}#{link.b_if} is not a peering link")
    up_ids = up.as_ids()
    down_ids = down.as_ids()
    if link.a_as in up_ids and link.b_as in down_ids:
        x_as, x_if, y_as, y_if = link.a_as, link.a_if, link.b_as, link.b_if
    elif link.b_as in up_ids and link.a_as in down_ids:
        x_as, x_if, y_as, y_if = link.b_as, link.b_if, link.a_as, link.a_if
    else:
        raise CombineError("peering link does not connect the two segments")
    if x_as == y_as:
        raise CombineError("peering link endpoints are one AS")
    x_pos = up_ids.index(x_as)
    y_pos = down_ids.index(y_as)

    hops, rows = _reversed_up_parts(up, start_index=x_pos)
    junctions: list[Junction] = []
    # Leave the up side at the peering interface instead of continuing upward.
    exit_hop = hops[-1]
    if exit_hop.ingress is not None:
        junctions.append(Junction(x_as, exit_hop.ingress, x_if))
    hops[-1] = Hop(x_as, exit_hop.ingress, x_if)
    rows[-1] = ("peer_exit", rows[-1], None)

    dhops, drows = _forward_parts(down, "down")
    dhops = dhops[y_pos:]
    drows = drows[y_pos:]
    entry_hop = dhops[0]
    if entry_hop.egress is not None:
        junctions.append(Junction(y_as, y_if, entry_hop.egress))
    dhops[0] = Hop(y_as, y_if, entry_hop.egress)
    drows[0] = ("peer_entry", drows[0], None)
    hops.extend(dhops)
    rows.extend(drows)
    if len(hops) < 2:
        raise CombineError("combined path must traverse at least two ASes")
    path = EndToEndPath(up, None, down, link, hops, junctions, rows)
    return path


def _junction_candidates(arrival: AsEntry | None, departure: AsEntry | None,
                         if_arr: int, if_dep: int):
    """All sources that carry the (if_arr -> if_dep) junction latency."""
    found = []
    if arrival is not None and arrival.latency is not None:
        jm = arrival.latency.junction_map
        if if_dep in jm:
            fwd, rev = jm[if_dep]
            found.append((fwd.min, rev.min))
        if arrival.ingress == if_dep and arrival.latency.intra_rev is not None:
            found.append((arrival.latency.intra_rev.min, arrival.latency.intra_fwd.min))
    if departure is not None and departure.latency is not None:
        jm = departure.latency.junction_map
        if if_arr in jm:
            fwd, rev = jm[if_arr]
            found.append((rev.min, fwd.min))
        if departure.ingress == if_arr and departure.latency.intra_fwd is not None:
            found.append((departure.latency.intra_fwd.min, departure.latency.intra_rev.min))
    return found


def resolve_junction(arrival: AsEntry | None, departure: AsEntry | None,
                     if_arr: int, if_dep: int) -> tuple[float, float] | None:
    """(fwd, rev) junction latency, None when the junction AS kept it private.

    Raises JunctionResolutionError when the adjoining entries disclosed but
    none of them carries the pair: that means the dissemination rule was
    violated upstream (e.g. a topology whose interface ids break the
    lower-identifier convention).
    """
    if if_arr == if_dep:
        return (0.0, 0.0)
    found = _junction_candidates(arrival, departure, if_arr, if_dep)
    if found:
        return found[0]
    disclosed = [e for e in (arrival, departure) if e is not None]
    if disclosed and all(e.latency is not None for e in disclosed):
        as_id = disclosed[0].as_id
        raise JunctionResolutionError(
            f"junction {as_id} {if_arr}->{if_dep}: no segment carries this interface pair")
    return None


@dataclass
class MissingInfoPolicy:
    mode: str = ZERO_FILL

    def __post_init__(self):
        if self.mode not in (ZERO_FILL, DISCARD):
            raise ValueError(f"unknown missing-info mode {self.mode!r}")


def estimate_latency(path: EndToEndPath, topo: Topology | None = None,
                     policy: MissingInfoPolicy | str = ZERO_FILL) -> LatencyEstimate:
    """Accumulate the path's minimum propagation latency, packet direction.

    topo is only needed for paths with a peering join (the peering link's
    latency comes from topology ground truth).
    """
    if isinstance(policy, str):
        policy = MissingInfoPolicy(policy)
    contributions: list[Contribution] = []

    for idx, row in enumerate(path._segment_entries):
        role = row[0]
        if role == "junction":
            (arr_role, arr_entry, _), (dep_role, dep_entry, _) = row[1]
            hop = path.hops[idx]
            resolved = resolve_junction(arr_entry, dep_entry, hop.ingress, hop.egress)
            if resolved is None:
                contributions.append(Contribution(hop.as_id, "junction", 0.0, 0.0, False, idx))
            else:
                fwd, rev = resolved
                contributions.append(Contribution(hop.as_id, "junction", fwd, rev, True, idx))
            # The junction AS's entries are origin/terminal entries: they own
            # at most their egress links, accounted below.
            for sub_role, sub_entry in ((arr_role, arr_entry), (dep_role, dep_entry)):
                _entry_contributions(contributions, sub_role, sub_entry, idx,
                                     reverse=(sub_role == "up"), include_intra=False)
        elif role in ("peer_exit", "peer_entry"):
            sub = row[1]
            sub_role, entry, rev_flag = sub
            hop = path.hops[idx]
            if role == "peer_exit":
                if hop.ingress is not None:
                    resolved = resolve_junction(entry, None, hop.ingress, hop.egress)
                    if resolved is None:
                        contributions.append(Contribution(hop.as_id, "junction", 0.0, 0.0, False, idx))
                    else:
                        contributions.append(Contribution(hop.as_id, "junction", resolved[0], resolved[1], True, idx))
                # The exit AS still owns the up-segment link the packet climbed.
                _entry_contributions(contributions, "up", entry, idx,
                                     reverse=True, include_intra=False)
                # Peering link itself, charged at the exit hop.
                link = path.peering_link
                fwd = link.latency_from(hop.as_id, hop.egress).min
                rev = link.latency_from(*link.other(hop.as_id, hop.egress)).min
                other_entry = _peer_entry_of(path, "down")
                disclosed = entry.latency is not None and other_entry.latency is not None
                contributions.append(Contribution(hop.as_id, "peering", fwd, rev, disclosed, idx))
            else:
                if hop.egress is not None:
                    resolved = resolve_junction(None, entry, hop.ingress, hop.egress)
                    if resolved is None:
                        contributions.append(Contribution(hop.as_id, "junction", 0.0, 0.0, False, idx))
                    else:
                        contributions.append(Contribution(hop.as_id, "junction", resolved[0], resolved[1], True, idx))
                _entry_contributions(contributions, "down", entry, idx,
                                     reverse=False, include_intra=False)
        else:
            _, entry, rev_flag = row
            _entry_contributions(contributions, role, entry, idx, reverse=rev_flag, include_intra=True)

    missing_hops = sorted({c.hop_index for c in contributions if not c.disclosed})
    if policy.mode == DISCARD and missing_hops:
        names = sorted({str(path.hops[i].as_id) for i in missing_hops})
        raise EstimateRejected(f"undisclosed latency at: {', '.join(names)}", names)
    total_fwd = sum(c.fwd_ms for c in contributions if c.disclosed)
    total_rev = sum(c.rev_ms for c in contributions if c.disclosed)
    n_contrib = len(contributions)
    if n_contrib == 0:
        completeness, n_missing = EMPTY, 0
    elif not missing_hops:
        completeness, n_missing = COMPLETE, 0
    elif all(not c.disclosed for c in contributions):
        completeness, n_missing = EMPTY, len(missing_hops)
    else:
        completeness, n_missing = PARTIAL, len(missing_hops)
    return LatencyEstimate(total_fwd, completeness, n_missing, contributions, total_rev)


def _peer_entry_of(path: EndToEndPath, side: str) -> AsEntry:
    for row in path._segment_entries:
        if side == "down" and row[0] == "peer_entry":
            return row[1][1]
        if side == "up" and row[0] == "peer_exit":
            return row[1][1]
    raise AssertionError("peering path lacks its peer rows")


def _entry_contributions(contributions, role, entry: AsEntry, hop_index, reverse, include_intra):
    """Intra and owned-link terms of one traversed segment entry."""
    if entry.egress is not None:
        if entry.latency is None:
            contributions.append(Contribution(entry.as_id, "inter", 0.0, 0.0, False, hop_index))
        else:
            li = entry.latency
            fwd, rev = (li.inter_rev, li.inter_fwd) if reverse else (li.inter_fwd, li.inter_rev)
            contributions.append(Contribution(entry.as_id, "inter", fwd, rev, True, hop_index))
    if include_intra and entry.ingress is not None and entry.egress is not None:
        if entry.latency is None:
            contributions.append(Contribution(entry.as_id, "intra", 0.0, 0.0, False, hop_index))
        else:
            li = entry.latency
            if reverse:
                contributions.append(Contribution(entry.as_id, "intra", li.intra_rev.min, li.intra_fwd.min, True, hop_index))
            else:
                contributions.append(Contribution(entry.as_id, "intra", li.intra_fwd.min, li.intra_rev.min, True, hop_index))


def enumerate_paths(store: SegmentStore, topo: Topology, src: IsdAsId, dst: IsdAsId,
                    limit: int = 1000, policy: MissingInfoPolicy | str = ZERO_FILL,
                    include_peering: bool = False) -> list[tuple[EndToEndPath, LatencyEstimate]]:
    """All distinct valid segment combinations src -> dst with estimates.

    Sorted ascending by estimated latency, ties by hop count then
    lexicographic hop sequence; truncated to `limit`. Unreachable pairs
    yield an empty list. With the discard policy, rejected combinations are
    silently skipped.
    """
    if isinstance(policy, str):
        policy = MissingInfoPolicy(policy)
    if src == dst or src not in topo.ases or dst not in topo.ases:
        return []
    src_core = topo.ases[src].is_core
    dst_core = topo.ases[dst].is_core
    ups: list[PathSegment | None]
    downs: list[PathSegment | None]
    ups = [None] if src_core else [s for s in store.segments(src, KIND_INTRA_ISD) if s.terminal == src]
    downs = [None] if dst_core else [s for s in store.segments(dst, KIND_INTRA_ISD) if s.terminal == dst]

    results = []
    seen: set[tuple] = set()

    def emit(path: EndToEndPath):
        key = tuple((h.as_id, h.ingress, h.egress) for h in path.hops)
        if key in seen:
            return
        seen.add(key)
        try:
            est = estimate_latency(path, topo, policy)
        except EstimateRejected:
            return
        results.append((path, est))

    for up in ups:
        left = up.origin if up is not None else src
        for down in downs:
            right = down.origin if down is not None else dst
            if left == right:
                try:
                    emit(combine(up=up, core=None, down=down))
                except CombineError:
                    pass
            else:
                for core_seg in store.core_segments(left, right):
                    try:
                        emit(combine(up=up, core=core_seg, down=down))
                    except CombineError:
                        pass
            if include_peering and up is not None and down is not None:
                up_set = set(up.as_ids())
                down_set = set(down.as_ids())
                for link in topo.links:
                    if link.kind != "peering":
                        continue
                    if (link.a_as in up_set and link.b_as in down_set) or \
                       (link.b_as in up_set and link.a_as in down_set):
                        try:
                            emit(combine_peering(topo, up, down, link))
                        except CombineError:
                            pass

    def sort_key(item):
        path, est = item
        return (est.total_min, len(path.hops),
                tuple((str(h.as_id), h.ingress if h.ingress is not None else -1,
                       h.egress if h.egress is not None else -1) for h in path.hops))

    results.sort(key=sort_key)
    return results[:limit]
