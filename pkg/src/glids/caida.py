"""Importer for CAIDA-style AS relationship records with link geography.

Accepted input, one record per line (`#` comments):

    <as1>|<as2>|<rel>[|<lat>,<lon>[|<lat>,<lon>...]]

rel is -1 / p2c (as1 is the provider) or 0 / p2p. Every coordinate pair
adds one parallel link at that location; both endpoint border routers sit
at the link's location, so inter-AS links cost ~0 ms and all modeled
latency comes from intra-AS great-circle distances between interfaces.
Records without a location default to (0, 0).

The import SCION-ifies the flat AS graph: everything lands in ISD 1;
provider-free ASes in the largest mutually peering component become core
ASes, their p2p links become core links; p2c becomes parent_child; other
p2p becomes peering. A p2c link whose customer side ended up core is
coerced to peering (counted in the report). ASes unreachable from the core
cover (no provider chain) are dropped when drop_unreachable is set,
otherwise they fail validation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import TopologyParseError, TopologyValidationError
from .geo import GeoCoord
from .topology import (
    ROLE_CORE, ROLE_CUSTOMER, ROLE_ORDER, ROLE_PEERING, ROLE_PROVIDER,
    DirectedLatency, IsdAsId, Link, Topology,
)

P2C = -1
P2P = 0
_REL_TEXT = {"-1": P2C, "0": P2P, "p2c": P2C, "p2p": P2P}


@dataclass
class ImportReport:
    n_records: int = 0
    n_ases: int = 0
    n_links: int = 0
    n_core: int = 0
    n_dropped_unreachable: int = 0
    n_coerced_peering: int = 0
    warnings: list[str] = field(default_factory=list)


@dataclass
class _Edge:
    a: int
    b: int
    rel: int
    coord: GeoCoord


def parse_rel_geo(text: str) -> list[_Edge]:
    edges: list[_Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) < 3:
            raise TopologyParseError(f"line {lineno}: need as1|as2|rel, got {raw!r}")
        try:
            a, b = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise TopologyParseError(f"line {lineno}: bad AS number") from exc
        rel = _REL_TEXT.get(fields[2].strip().lower())
        if rel is None:
            raise TopologyParseError(f"line {lineno}: unknown relationship {fields[2]!r}")
        if a == b:
            raise TopologyParseError(f"line {lineno}: self link at AS {a}")
        locs = fields[3:] or ["0,0"]
        for loc in locs:
            try:
                lat_s, lon_s = loc.split(",")
                coord = GeoCoord(float(lat_s), float(lon_s))
            except ValueError as exc:
                raise TopologyParseError(f"line {lineno}: bad location {loc!r}") from exc
            edges.append(_Edge(a, b, rel, coord))
    return edges


def _prune_lowest_degree(edges: list[_Edge], keep: int) -> list[_Edge]:
    alive = {asn for e in edges for asn in (e.a, e.b)}
    if keep >= len(alive):
        return edges
    degree: dict[int, int] = {a: 0 for a in alive}
    for e in edges:
        degree[e.a] += 1
        degree[e.b] += 1
    while len(alive) > keep:
        # same tie rule as prune_to_top_degree: smallest id survives longest
        victim = max(alive, key=lambda a: (-degree[a], a))
        alive.remove(victim)
        for e in edges:
            if e.a == victim and e.b in alive:
                degree[e.b] -= 1
            elif e.b == victim and e.a in alive:
                degree[e.a] -= 1
    return [e for e in edges if e.a in alive and e.b in alive]


def import_caida(text: str, prune_to: int | None = None,
                 drop_unreachable: bool = False) -> tuple[Topology, ImportReport]:
    report = ImportReport()
    edges = parse_rel_geo(text)
    report.n_records = len(edges)
    if prune_to is not None:
        edges = _prune_lowest_degree(edges, prune_to)

    ases = sorted({asn for e in edges for asn in (e.a, e.b)})
    has_provider = {a: False for a in ases}
    for e in edges:
        if e.rel == P2C:
            has_provider[e.b] = True
    provider_free = [a for a in ases if not has_provider[a]]

    # Core cover: largest p2p-connected component of the provider-free set.
    peer_adj: dict[int, set[int]] = {a: set() for a in provider_free}
    pf = set(provider_free)
    for e in edges:
        if e.rel == P2P and e.a in pf and e.b in pf:
            peer_adj[e.a].add(e.b)
            peer_adj[e.b].add(e.a)
    best_comp: set[int] = set()
    seen: set[int] = set()
    for start in provider_free:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in peer_adj[cur]:
                if nxt not in comp:
                    comp.add(nxt)
                    queue.append(nxt)
        seen |= comp
        if len(comp) > len(best_comp) or (len(comp) == len(best_comp) and comp and min(comp) < min(best_comp)):
            best_comp = comp
    core = best_comp if best_comp else ({ases[0]} if ases else set())

    if drop_unreachable:
        reach = set(core)
        down: dict[int, set[int]] = {a: set() for a in ases}
        for e in edges:
            if e.rel == P2C:
                down[e.a].add(e.b)
        queue = deque(sorted(core))
        while queue:
            cur = queue.popleft()
            for child in down.get(cur, ()):
                if child not in reach:
                    reach.add(child)
                    queue.append(child)
        dropped = [a for a in ases if a not in reach]
        report.n_dropped_unreachable = len(dropped)
        if dropped:
            edges = [e for e in edges if e.a in reach and e.b in reach]
            ases = sorted(reach)

    # Materialize: pick each edge's kind, then hand out interface ids in
    # role-priority order so the junction dissemination rule stays gap-free.
    kinds: list[str] = []
    for e in edges:
        if e.rel == P2P:
            kinds.append("core" if (e.a in core and e.b in core) else "peering")
        elif e.b in core:
            report.n_coerced_peering += 1
            kinds.append("core" if e.a in core else "peering")
        else:
            kinds.append("parent_child")

    per_as: dict[int, list[tuple[int, int, str]]] = {a: [] for a in ases}
    for idx, (e, kind) in enumerate(zip(edges, kinds)):
        if kind == "parent_child":
            per_as[e.a].append((ROLE_ORDER[ROLE_PROVIDER], idx, "a"))
            per_as[e.b].append((ROLE_ORDER[ROLE_CUSTOMER], idx, "b"))
        else:
            role = ROLE_CORE if kind == "core" else ROLE_PEERING
            per_as[e.a].append((ROLE_ORDER[role], idx, "a"))
            per_as[e.b].append((ROLE_ORDER[role], idx, "b"))

    topo = Topology()
    for asn in ases:
        topo.add_as(IsdAsId(1, asn), asn in core)
    ifids: dict[tuple[int, str], int] = {}
    for asn in ases:
        node = topo.ases[IsdAsId(1, asn)]
        next_id = 1
        for _, idx, side in sorted(per_as[asn]):
            ifids[(idx, side)] = next_id
            node.add_interface(next_id, edges[idx].coord)
            next_id += 1
    zero = DirectedLatency(0.0, 0.0)
    for idx, (e, kind) in enumerate(zip(edges, kinds)):
        topo.add_link(Link(IsdAsId(1, e.a), ifids[(idx, "a")],
                           IsdAsId(1, e.b), ifids[(idx, "b")], kind, zero, zero))

    report.n_ases = len(topo.ases)
    report.n_links = len(topo.links)
    report.n_core = len(core)
    try:
        topo.validate()
    except TopologyValidationError as exc:
        raise TopologyValidationError(
            f"imported topology invalid ({exc}); consider drop_unreachable or pruning",
            getattr(exc, "component", None)) from exc
    return topo, report
