"""Simplified BGP baseline: policy routing plus hot-potato forwarding.

Route selection per AS follows a three-rule chain: business preference
(customer-learned over peer-learned over provider-learned, with
Gao-Rexford export filtering), then AS-path length, then the great-circle
distance between the candidate link's two interfaces; remaining ties break
on the neighbor's identifier. Business relationships derive from link
kinds: parent_child links make a provider/customer pair, while peering and
core links both count as peer relationships.

Packet-level latency of a chosen route is computed hot-potato style: from
its current position inside an AS, a packet moves to the nearest border
router attached to a link toward the next AS on the path, paying the
great-circle latency of that internal move plus the link's latency.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, GlidsError
from .geo import GeoCoord, great_circle_latency
from .topology import IsdAsId, Link, Topology

PREF_CUSTOMER, PREF_PEER, PREF_PROVIDER = 0, 1, 2
_REL_NAMES = {PREF_CUSTOMER: "customer", PREF_PEER: "peer", PREF_PROVIDER: "provider"}


@dataclass(frozen=True)
class Route:
    dest: IsdAsId
    as_path: tuple[IsdAsId, ...]  # next hop first, destination last; empty at origin
    pref: int  # relationship class the route was learned over
    neighbor: IsdAsId | None
    link_metric: float  # great-circle ms across the learning link

    @property
    def path_len(self) -> int:
        return len(self.as_path)

    def selection_key(self):
        return (self.pref, self.path_len, self.link_metric, self.neighbor or self.dest)


class BgpRib:
    """Chosen route per (AS, destination)."""

    def __init__(self):
        self.routes: dict[IsdAsId, dict[IsdAsId, Route]] = {}

    def route(self, as_id: IsdAsId, dest: IsdAsId) -> Route | None:
        return self.routes.get(as_id, {}).get(dest)

    def set(self, as_id: IsdAsId, route: Route):
        self.routes.setdefault(as_id, {})[route.dest] = route

    def full_path(self, as_id: IsdAsId, dest: IsdAsId) -> list[IsdAsId] | None:
        route = self.route(as_id, dest)
        if route is None:
            return None
        return [as_id, *route.as_path]


def _relationships(topo: Topology) -> dict[IsdAsId, dict[IsdAsId, int]]:
    """rel[x][y]: what y is to x (customer, peer or provider)."""
    rel: dict[IsdAsId, dict[IsdAsId, int]] = {a: {} for a in topo.ases}
    for link in topo.links:
        if link.kind == "parent_child":
            rel[link.a_as][link.b_as] = PREF_CUSTOMER
            rel[link.b_as][link.a_as] = PREF_PROVIDER
        else:
            rel[link.a_as][link.b_as] = PREF_PEER
            rel[link.b_as][link.a_as] = PREF_PEER
    return rel


def _link_metric(topo: Topology, x: IsdAsId, y: IsdAsId) -> float:
    """Smallest great-circle ms between interface pairs of x~y links."""
    best = None
    for link in topo.links:
        if {link.a_as, link.b_as} != {x, y}:
            continue
        ca = topo.ases[link.a_as].interfaces[link.a_if]
        cb = topo.ases[link.b_as].interfaces[link.b_if]
        ms = great_circle_latency(ca, cb)
        if best is None or ms < best:
            best = ms
    if best is None:
        raise GlidsError(f"no link between {x} and {y}")
    return best


def compute_ribs(topo: Topology, announcers: set[IsdAsId],
                 max_rounds: int | None = None) -> BgpRib:
    """Propagate announcements to a fixpoint under Gao-Rexford export rules.

    Only `announcers` originate a destination (their own AS). Raises if the
    iteration cap is hit, which cannot happen on relationship-consistent
    inputs.
    """
    unknown = sorted(a for a in announcers if a not in topo.ases)
    if unknown:
        raise ConfigError(f"announcers not in topology: {unknown}")
    rel = _relationships(topo)
    metric_cache: dict[tuple[IsdAsId, IsdAsId], float] = {}

    def metric(x, y):
        key = (x, y)
        if key not in metric_cache:
            metric_cache[key] = _link_metric(topo, x, y)
        return metric_cache[key]

    dests = sorted(announcers)
    # routes[as][dest], rebuilt from scratch every round so replaced or
    # withdrawn upstream routes never linger (implicit withdrawal).
    routes: dict[IsdAsId, dict[IsdAsId, Route]] = {a: {} for a in topo.ases}
    for origin in dests:
        routes[origin][origin] = Route(origin, (), PREF_CUSTOMER, None, 0.0)

    cap = max_rounds if max_rounds is not None else 2 * len(topo.ases) + 10
    for _ in range(cap):
        new_routes: dict[IsdAsId, dict[IsdAsId, Route]] = {a: {} for a in topo.ases}
        for origin in dests:
            new_routes[origin][origin] = routes[origin][origin]
        for y in sorted(topo.ases):
            for dest in dests:
                if y == dest:
                    continue
                best = None
                for x in sorted(rel[y]):
                    offered = routes[x].get(dest)
                    if offered is None:
                        continue
                    # Gao-Rexford export: x gives y a peer/provider-learned
                    # route only when y is x's customer.
                    exportable = offered.neighbor is None or offered.pref == PREF_CUSTOMER
                    if rel[x][y] != PREF_CUSTOMER and not exportable:
                        continue
                    if y in offered.as_path or y == x:
                        continue
                    candidate = Route(dest, (x, *offered.as_path), rel[y][x], x, metric(y, x))
                    if best is None or candidate.selection_key() < best.selection_key():
                        best = candidate
                if best is not None:
                    new_routes[y][dest] = best
        if new_routes == routes:
            rib = BgpRib()
            rib.routes = routes
            return rib
        routes = new_routes
    raise GlidsError(f"BGP propagation did not converge within {cap} rounds")


@dataclass
class RouterLevelPath:
    hops: list[tuple[IsdAsId, int | None, int | None]]  # (as, ingress_if, egress_if)
    end_latency_ms: float


def bgp_router_path(topo: Topology, rib: BgpRib, src: IsdAsId, src_coord: GeoCoord,
                    dst: IsdAsId, server_coord: GeoCoord) -> RouterLevelPath:
    """Hot-potato router walk along the chosen AS path, great-circle weights."""
    if src == dst:
        return RouterLevelPath([(src, None, None)],
                               great_circle_latency(src_coord, server_coord))
    as_path = rib.full_path(src, dst)
    if as_path is None:
        raise GlidsError(f"{src} has no BGP route to {dst}")
    total = 0.0
    pos = src_coord
    hops: list[tuple[IsdAsId, int | None, int | None]] = []
    ingress_if: int | None = None
    for i in range(len(as_path) - 1):
        x, y = as_path[i], as_path[i + 1]
        best = None
        for link in topo.links:
            if {link.a_as, link.b_as} != {x, y}:
                continue
            x_if = link.a_if if link.a_as == x else link.b_if
            coord = topo.ases[x].interfaces[x_if]
            move = great_circle_latency(pos, coord)
            if best is None or move < best[0]:
                best = (move, link, x_if)
        if best is None:
            raise GlidsError(f"no link between {x} and {y} on chosen path")
        move, link, x_if = best
        hops.append((x, ingress_if, x_if))
        total += move + link.latency_from(x, x_if).min
        y_as, y_if = link.other(x, x_if)
        pos = topo.ases[y_as].interfaces[y_if]
        ingress_if = y_if
    hops.append((dst, ingress_if, None))
    total += great_circle_latency(pos, server_coord)
    return RouterLevelPath(hops, total)


@dataclass
class ComparisonRow:
    probe_id: str
    server_id: str
    glids_ms: float | None
    bgp_ms: float | None

    @property
    def delta_ms(self) -> float | None:
        if self.glids_ms is None or self.bgp_ms is None:
            return None
        return self.glids_ms - self.bgp_ms


def glids_endpoint_latency(topo: Topology, store, probe_as: IsdAsId, probe_coord: GeoCoord,
                           server_as: IsdAsId, server_coord: GeoCoord,
                           limit: int = 1000) -> float | None:
    """Realized latency of the path a latency-aware endpoint would pick.

    The endpoint ranks combinations by what it can know: its own
    great-circle latency to the path's first egress interface plus the
    disseminated path estimate. The destination-side leg from the path's
    ingress interface to the server is *not* visible to the endpoint; it is
    added to the chosen path afterwards, so a path whose ingress lands far
    from the server shows up as inflation, never as a different choice.
    """
    from .paths import enumerate_paths  # local import: avoids a module cycle

    if probe_as == server_as:
        return great_circle_latency(probe_coord, server_coord)
    candidates = enumerate_paths(store, topo, probe_as, server_as, limit=limit)
    best = None
    for path, est in candidates:
        egress_coord = topo.ases[probe_as].interfaces[path.hops[0].egress]
        known = great_circle_latency(probe_coord, egress_coord) + est.total_min
        key = (known, path.path_id)
        if best is None or key < best[0]:
            best = (key, path)
    if best is None:
        return None
    (known, _), path = best
    ingress_coord = topo.ases[server_as].interfaces[path.hops[-1].ingress]
    return known + great_circle_latency(ingress_coord, server_coord)


def compare_glids_vs_bgp(topo: Topology, store, rib: BgpRib,
                         probes: list[tuple[str, IsdAsId, GeoCoord]],
                         servers: list[tuple[str, IsdAsId, GeoCoord]],
                         limit: int = 1000) -> list[ComparisonRow]:
    """Per (probe, server) realized latency under both routing worlds."""
    rows = []
    for probe_id, probe_as, probe_coord in probes:
        for server_id, server_as, server_coord in servers:
            glids_ms = glids_endpoint_latency(topo, store, probe_as, probe_coord,
                                              server_as, server_coord, limit)
            try:
                bgp_ms = bgp_router_path(topo, rib, probe_as, probe_coord,
                                         server_as, server_coord).end_latency_ms
            except GlidsError:
                bgp_ms = None
            rows.append(ComparisonRow(probe_id, server_id, glids_ms, bgp_ms))
    return rows
