"""Topology model: ISDs, ASes, geo-located interfaces, typed inter-AS links.

The on-disk form is line oriented:

    as 1-10 core
    if 1-10 1 47.37 8.54
    link 1-10#1 1-11#2 core [lat_ab_ms lat_ba_ms]
    intra 1-10 1 2 3.0 [7.0]

`#` starts a comment. Latencies are milliseconds. When a link omits its
latencies they default to the great-circle latency between its endpoint
interfaces, except peering links which default to 0 ms (peering typically
happens inside one facility). When an AS has no explicit `intra` record for
an ordered interface pair, the pair's latency defaults to the great-circle
latency between the two interface coordinates. Duplicate `intra` records
for one pair merge to (min of mins, max of maxes): the record describes the
spread over that AS's internal routes.

Interface identifiers are AS-local positive integers and their ordering is
semantically load bearing: junction latency dissemination (see beaconing)
only lists interfaces with a *lower* identifier than a routing message's
egress. That rule is gap-free exactly when, inside every AS, interfaces on
core and peering links carry lower identifiers than provider-side
interfaces of parent_child links. The generator and the CAIDA importer
follow this convention; hand-written files that break it still load, but
path construction across their junctions can fail with
JunctionResolutionError.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import TopologyParseError, TopologyValidationError
from .geo import GeoCoord, great_circle_latency

LINK_KINDS = ("core", "parent_child", "peering")

# Interface roles, in identifier-assignment priority order (lowest ids first).
ROLE_CORE = "core"
ROLE_PEERING = "peering"
ROLE_CUSTOMER = "customer"  # this AS is the child on a parent_child link
ROLE_PROVIDER = "provider"  # this AS is the parent on a parent_child link
ROLE_ORDER = {ROLE_CORE: 0, ROLE_PEERING: 1, ROLE_CUSTOMER: 2, ROLE_PROVIDER: 3}


@dataclass(frozen=True, order=True)
class IsdAsId:
    """Globally unique AS identifier: (isolation domain, AS number)."""

    isd: int
    as_num: int

    def __post_init__(self):
        if self.isd < 1:
            raise ValueError(f"isd must be >= 1, got {self.isd}")
        if self.as_num < 0:
            raise ValueError(f"as_num must be >= 0, got {self.as_num}")

    def __str__(self):
        return f"{self.isd}-{self.as_num}"

    @classmethod
    def parse(cls, text: str) -> "IsdAsId":
        try:
            isd, as_num = text.split("-", 1)
            return cls(int(isd), int(as_num))
        except (ValueError, AttributeError) as exc:
            raise TopologyParseError(f"bad ISD-AS id {text!r}") from exc


@dataclass(frozen=True)
class DirectedLatency:
    """Propagation latency of one direction of a path or link, milliseconds.

    `min` is the minimum over all internal routes; `max`, when known, bounds
    the spread. Only the minimum participates in estimates and rankings.
    """

    min: float
    max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "min", float(self.min))
        if self.max is not None:
            object.__setattr__(self, "max", float(self.max))
        if self.min < 0:
            raise ValueError(f"latency must be >= 0, got {self.min}")
        if self.max is not None and self.max < self.min:
            raise ValueError(f"latency max {self.max} < min {self.min}")

    def merged(self, other: "DirectedLatency") -> "DirectedLatency":
        """Combine two route observations for the same interface pair."""
        if self.max is None and other.max is None:
            hi = max(self.min, other.min)
        else:
            hi = max(self.max if self.max is not None else self.min,
                     other.max if other.max is not None else other.min)
        return DirectedLatency(min(self.min, other.min), hi)


ZERO_LATENCY = DirectedLatency(0.0, 0.0)


class AsNode:
    """One AS: core flag, its border-router interfaces, intra-AS latencies."""

    def __init__(self, as_id: IsdAsId, is_core: bool):
        self.id = as_id
        self.is_core = is_core
        self.interfaces: dict[int, GeoCoord] = {}
        # Explicit (ingress, egress) -> DirectedLatency overrides; pairs
        # without an entry fall back to the great-circle default.
        self.intra_overrides: dict[tuple[int, int], DirectedLatency] = {}

    def add_interface(self, ifid: int, coord: GeoCoord):
        if ifid < 0:
            raise TopologyValidationError(f"{self.id}: interface id must be >= 0, got {ifid}")
        if ifid in self.interfaces:
            raise TopologyValidationError(f"{self.id}: duplicate interface {ifid}")
        self.interfaces[ifid] = coord

    def set_intra(self, ingress: int, egress: int, latency: DirectedLatency):
        key = (ingress, egress)
        if key in self.intra_overrides:
            latency = self.intra_overrides[key].merged(latency)
        self.intra_overrides[key] = latency

    def intra_latency(self, ingress: int, egress: int) -> DirectedLatency:
        """Minimum intra-AS propagation latency from ingress to egress."""
        if ingress == egress:
            return ZERO_LATENCY
        override = self.intra_overrides.get((ingress, egress))
        if override is not None:
            return override
        try:
            a = self.interfaces[ingress]
            b = self.interfaces[egress]
        except KeyError as exc:
            raise TopologyValidationError(f"{self.id}: unknown interface {exc.args[0]}") from exc
        ms = great_circle_latency(a, b)
        return DirectedLatency(ms, ms)


@dataclass
class Link:
    """A typed inter-AS link between two named interfaces.

    For parent_child links, side `a` is the provider (parent).
    """

    a_as: IsdAsId
    a_if: int
    b_as: IsdAsId
    b_if: int
    kind: str
    latency_ab: DirectedLatency
    latency_ba: DirectedLatency

    def endpoint(self, side: str) -> tuple[IsdAsId, int]:
        return (self.a_as, self.a_if) if side == "a" else (self.b_as, self.b_if)

    def other(self, as_id: IsdAsId, ifid: int) -> tuple[IsdAsId, int]:
        if (as_id, ifid) == (self.a_as, self.a_if):
            return (self.b_as, self.b_if)
        if (as_id, ifid) == (self.b_as, self.b_if):
            return (self.a_as, self.a_if)
        raise KeyError(f"({as_id}, {ifid}) is not an endpoint of this link")

    def latency_from(self, as_id: IsdAsId, ifid: int) -> DirectedLatency:
        """Latency in the direction leaving (as_id, ifid)."""
        if (as_id, ifid) == (self.a_as, self.a_if):
            return self.latency_ab
        if (as_id, ifid) == (self.b_as, self.b_if):
            return self.latency_ba
        raise KeyError(f"({as_id}, {ifid}) is not an endpoint of this link")


class Topology:
    """Validated, immutable-after-construction AS-level topology."""

    def __init__(self):
        self.ases: dict[IsdAsId, AsNode] = {}
        self.links: list[Link] = []
        self._if_link: dict[tuple[IsdAsId, int], Link] = {}

    # -- construction ------------------------------------------------------

    def add_as(self, as_id: IsdAsId, is_core: bool) -> AsNode:
        if as_id in self.ases:
            raise TopologyValidationError(f"duplicate AS {as_id}")
        node = AsNode(as_id, is_core)
        self.ases[as_id] = node
        return node

    def add_link(self, link: Link):
        for as_id, ifid in (link.endpoint("a"), link.endpoint("b")):
            if as_id not in self.ases:
                raise TopologyValidationError(f"link endpoint references unknown AS {as_id}")
            if ifid not in self.ases[as_id].interfaces:
                raise TopologyValidationError(f"link endpoint references unknown interface {as_id}#{ifid}")
            if (as_id, ifid) in self._if_link:
                raise TopologyValidationError(f"interface {as_id}#{ifid} attached to more than one link")
        if link.kind not in LINK_KINDS:
            raise TopologyValidationError(f"unknown link kind {link.kind!r}")
        self.links.append(link)
        self._if_link[link.endpoint("a")] = link
        self._if_link[link.endpoint("b")] = link

    # -- lookups -----------------------------------------------------------

    def node(self, as_id: IsdAsId) -> AsNode:
        return self.ases[as_id]

    def link_at(self, as_id: IsdAsId, ifid: int) -> Link | None:
        return self._if_link.get((as_id, ifid))

    def links_of(self, as_id: IsdAsId) -> list[Link]:
        return [l for l in self.links if as_id in (l.a_as, l.b_as)]

    def neighbors(self, as_id: IsdAsId) -> list[IsdAsId]:
        out = []
        for l in self.links:
            if l.a_as == as_id:
                out.append(l.b_as)
            elif l.b_as == as_id:
                out.append(l.a_as)
        return out

    def core_ases(self) -> list[IsdAsId]:
        return sorted(a for a, n in self.ases.items() if n.is_core)

    def children_links(self, as_id: IsdAsId) -> list[Link]:
        """parent_child links where as_id is the provider side."""
        return [l for l in self.links if l.kind == "parent_child" and l.a_as == as_id]

    def core_links_of(self, as_id: IsdAsId) -> list[Link]:
        return [l for l in self.links if l.kind == "core" and as_id in (l.a_as, l.b_as)]

    def interface_role(self, as_id: IsdAsId, ifid: int) -> str | None:
        link = self.link_at(as_id, ifid)
        if link is None:
            return None
        if link.kind == "core":
            return ROLE_CORE
        if link.kind == "peering":
            return ROLE_PEERING
        return ROLE_PROVIDER if (as_id, ifid) == link.endpoint("a") else ROLE_CUSTOMER

    # -- validation --------------------------------------------------------

    def validate(self):
        """Check every structural invariant; raise TopologyValidationError."""
        for as_id, node in self.ases.items():
            for (i, j), lat in node.intra_overrides.items():
                if i not in node.interfaces or j not in node.interfaces:
                    raise TopologyValidationError(f"{as_id}: intra record references unknown interface ({i},{j})")
                if i == j and lat.min != 0:
                    raise TopologyValidationError(f"{as_id}: intra({i},{i}) must be 0")
        for link in self.links:
            a_node = self.ases[link.a_as]
            b_node = self.ases[link.b_as]
            if link.kind == "core" and not (a_node.is_core and b_node.is_core):
                raise TopologyValidationError(f"core link {link.a_as}#{link.a_if}~{link.b_as}#{link.b_if} touches a non-core AS")
            if link.kind == "parent_child":
                if link.a_as.isd != link.b_as.isd:
                    raise TopologyValidationError(f"parent_child link crosses ISDs: {link.a_as} -> {link.b_as}")
                if b_node.is_core:
                    raise TopologyValidationError(f"parent_child link has core AS {link.b_as} as child")
        self._check_connectivity()

    def _check_connectivity(self):
        cores = set(self.core_ases())
        if not cores:
            raise TopologyValidationError("topology has no core AS")
        # Core subgraph connected via core links.
        if len(cores) > 1:
            adj: dict[IsdAsId, set[IsdAsId]] = {c: set() for c in cores}
            for l in self.links:
                if l.kind == "core":
                    adj[l.a_as].add(l.b_as)
                    adj[l.b_as].add(l.a_as)
            seen = _bfs(min(cores), adj)
            if seen != cores:
                missing = sorted(cores - seen)
                raise TopologyValidationError(
                    f"core subgraph disconnected; unreachable cores: {missing}", component=missing)
        # Every non-core AS reachable from some core via parent_child links
        # (descending parent -> child).
        down: dict[IsdAsId, set[IsdAsId]] = {a: set() for a in self.ases}
        for l in self.links:
            if l.kind == "parent_child":
                down[l.a_as].add(l.b_as)
        reached: set[IsdAsId] = set()
        frontier = deque(sorted(cores))
        reached.update(cores)
        while frontier:
            cur = frontier.popleft()
            for child in down[cur]:
                if child not in reached:
                    reached.add(child)
                    frontier.append(child)
        orphans = sorted(set(self.ases) - reached)
        if orphans:
            raise TopologyValidationError(
                f"non-core ASes unreachable from any core via parent_child links: {orphans}",
                component=orphans)

    # -- derived quantities --------------------------------------------------

    def diameter(self) -> int:
        """Hop diameter of the undirected AS graph; sizes beaconing rounds."""
        adj: dict[IsdAsId, set[IsdAsId]] = {a: set() for a in self.ases}
        for l in self.links:
            adj[l.a_as].add(l.b_as)
            adj[l.b_as].add(l.a_as)
        best = 0
        for start in self.ases:
            dist = {start: 0}
            q = deque([start])
            while q:
                cur = q.popleft()
                for nxt in adj[cur]:
                    if nxt not in dist:
                        dist[nxt] = dist[cur] + 1
                        q.append(nxt)
            best = max(best, max(dist.values(), default=0))
        return best

    # -- serialization -------------------------------------------------------

    def serialize(self) -> str:
        """Canonical textual form; load(serialize(t)) reproduces t exactly."""
        lines = []
        for as_id in sorted(self.ases):
            node = self.ases[as_id]
            lines.append(f"as {as_id} {'core' if node.is_core else 'noncore'}")
        for as_id in sorted(self.ases):
            node = self.ases[as_id]
            for ifid in sorted(node.interfaces):
                c = node.interfaces[ifid]
                lines.append(f"if {as_id} {ifid} {c.lat!r} {c.lon!r}")
        for link in sorted(self.links, key=lambda l: (l.a_as, l.a_if, l.b_as, l.b_if)):
            lat = f"{link.latency_ab.min!r} {link.latency_ba.min!r}"
            lines.append(f"link {link.a_as}#{link.a_if} {link.b_as}#{link.b_if} {link.kind} {lat}")
        for as_id in sorted(self.ases):
            node = self.ases[as_id]
            for (i, j) in sorted(node.intra_overrides):
                lat = node.intra_overrides[(i, j)]
                tail = f" {lat.max!r}" if lat.max is not None else ""
                lines.append(f"intra {as_id} {i} {j} {lat.min!r}{tail}")
        return "\n".join(lines) + "\n"


def _bfs(start, adj):
    seen = {start}
    q = deque([start])
    while q:
        cur = q.popleft()
        for nxt in adj[cur]:
            if nxt not in seen:
                seen.add(nxt)
                q.append(nxt)
    return seen


def _parse_endpoint(text: str) -> tuple[IsdAsId, int]:
    try:
        as_part, if_part = text.split("#", 1)
        return IsdAsId.parse(as_part), int(if_part)
    except (ValueError, TopologyParseError) as exc:
        raise TopologyParseError(f"bad link endpoint {text!r}") from exc


def load_topology(source: str, validate: bool = True) -> Topology:
    """Parse the line-oriented topology format into a validated Topology.

    `source` is the document text. Raises TopologyParseError on malformed
    records and TopologyValidationError on structural violations.
    """
    topo = Topology()
    pending_ifs = []
    pending_links = []
    pending_intra = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        # `#` introduces a comment only at line start or after whitespace;
        # bare `#` also appears inside link endpoints (1-10#2).
        line = raw.strip()
        if line.startswith("#"):
            continue
        cut = line.find(" #")
        if cut == -1:
            cut = line.find("\t#")
        if cut != -1:
            line = line[:cut].rstrip()
        if not line:
            continue
        fields = line.split()
        tag = fields[0]
        try:
            if tag == "as":
                if len(fields) != 3 or fields[2] not in ("core", "noncore"):
                    raise TopologyParseError(f"line {lineno}: bad as record {raw!r}")
                topo.add_as(IsdAsId.parse(fields[1]), fields[2] == "core")
            elif tag == "if":
                if len(fields) != 5:
                    raise TopologyParseError(f"line {lineno}: bad if record {raw!r}")
                as_id = IsdAsId.parse(fields[1])
                try:
                    coord = GeoCoord(float(fields[3]), float(fields[4]))
                except ValueError as exc:
                    raise TopologyParseError(f"line {lineno}: {exc}") from exc
                pending_ifs.append((lineno, as_id, int(fields[2]), coord))
            elif tag == "link":
                if len(fields) not in (4, 6):
                    raise TopologyParseError(f"line {lineno}: bad link record {raw!r}")
                a = _parse_endpoint(fields[1])
                b = _parse_endpoint(fields[2])
                kind = fields[3]
                if kind not in LINK_KINDS:
                    raise TopologyParseError(f"line {lineno}: unknown link kind {kind!r}")
                explicit = None
                if len(fields) == 6:
                    explicit = (float(fields[4]), float(fields[5]))
                pending_links.append((lineno, a, b, kind, explicit))
            elif tag == "intra":
                if len(fields) not in (5, 6):
                    raise TopologyParseError(f"line {lineno}: bad intra record {raw!r}")
                as_id = IsdAsId.parse(fields[1])
                mn = float(fields[4])
                mx = float(fields[5]) if len(fields) == 6 else None
                pending_intra.append((lineno, as_id, int(fields[2]), int(fields[3]), mn, mx))
            else:
                raise TopologyParseError(f"line {lineno}: unknown record type {tag!r}")
        except ValueError as exc:
            raise TopologyParseError(f"line {lineno}: {exc}") from exc

    for lineno, as_id, ifid, coord in pending_ifs:
        if as_id not in topo.ases:
            raise TopologyValidationError(f"line {lineno}: interface for unknown AS {as_id}")
        topo.ases[as_id].add_interface(ifid, coord)

    for lineno, a, b, kind, explicit in pending_links:
        if a[0] not in topo.ases or b[0] not in topo.ases:
            missing = a[0] if a[0] not in topo.ases else b[0]
            raise TopologyValidationError(f"line {lineno}: link references unknown AS {missing}")
        if explicit is not None:
            ab, ba = explicit
            if ab < 0 or ba < 0:
                raise TopologyValidationError(f"line {lineno}: negative link latency")
            lat_ab, lat_ba = DirectedLatency(ab), DirectedLatency(ba)
        elif kind == "peering":
            lat_ab = lat_ba = ZERO_LATENCY
        else:
            ca = topo.ases[a[0]].interfaces.get(a[1])
            cb = topo.ases[b[0]].interfaces.get(b[1])
            if ca is None or cb is None:
                raise TopologyValidationError(f"line {lineno}: link endpoint interface missing")
            ms = great_circle_latency(ca, cb)
            lat_ab = lat_ba = DirectedLatency(ms)
        topo.add_link(Link(a[0], a[1], b[0], b[1], kind, lat_ab, lat_ba))

    for lineno, as_id, i, j, mn, mx in pending_intra:
        if as_id not in topo.ases:
            raise TopologyValidationError(f"line {lineno}: intra record for unknown AS {as_id}")
        if mn < 0:
            raise TopologyValidationError(f"line {lineno}: negative intra latency")
        try:
            topo.ases[as_id].set_intra(i, j, DirectedLatency(mn, mx))
        except ValueError as exc:
            raise TopologyValidationError(f"line {lineno}: {exc}") from exc

    if validate:
        topo.validate()
    return topo


def prune_to_top_degree(topo: Topology, n: int) -> Topology:
    """Iteratively drop lowest-degree ASes until n remain.

    Among equal-degree candidates the smallest identifier is the most
    protected (it survives longest). Degrees are recomputed after every
    removal, links touching removed ASes disappear, and the surviving
    topology is revalidated (a disconnected result raises, naming the
    offending component).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    alive = set(topo.ases)
    degree = {a: 0 for a in alive}
    incident: dict[IsdAsId, list[Link]] = {a: [] for a in alive}
    for l in topo.links:
        degree[l.a_as] += 1
        degree[l.b_as] += 1
        incident[l.a_as].append(l)
        incident[l.b_as].append(l)
    while len(alive) > n:
        victim = max(alive, key=lambda a: (-degree[a], a))
        alive.remove(victim)
        for l in incident[victim]:
            other = l.b_as if l.a_as == victim else l.a_as
            if other in alive:
                degree[other] -= 1
    out = Topology()
    for as_id in sorted(alive):
        node = topo.ases[as_id]
        new = out.add_as(as_id, node.is_core)
        new.interfaces = dict(node.interfaces)
        new.intra_overrides = dict(node.intra_overrides)
    for l in topo.links:
        if l.a_as in alive and l.b_as in alive:
            out.add_link(l)
    out.validate()
    return out
