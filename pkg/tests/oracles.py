"""Independent reference implementations the tests check the library against.

Everything here recomputes results from first principles (topology ground
truth, brute-force enumeration) without touching beacons, junction maps or
estimates, so a bug in the dissemination path cannot hide in the oracle.
"""

from __future__ import annotations

import math
from itertools import product

from glids.geo import EARTH_RADIUS_KM, GeoCoord
from glids.topology import IsdAsId, Link, Topology


def reference_great_circle_ms(a: GeoCoord, b: GeoCoord, speed_km_s: float = 200_000.0) -> float:
    """Vincenty sphere formula (atan2 form), distinct from the haversine path."""
    p1, l1 = math.radians(a.lat), math.radians(a.lon)
    p2, l2 = math.radians(b.lat), math.radians(b.lon)
    dl = l2 - l1
    y = math.hypot(math.cos(p2) * math.sin(dl),
                   math.cos(p1) * math.sin(p2) - math.sin(p1) * math.cos(p2) * math.cos(dl))
    x = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return EARTH_RADIUS_KM * math.atan2(y, x) / speed_km_s * 1000.0


# -- structural path enumeration over the raw topology -----------------------

def _links_between(topo: Topology, x: IsdAsId, y: IsdAsId, kinds) -> list[Link]:
    return [l for l in topo.links if {l.a_as, l.b_as} == {x, y} and l.kind in kinds]


def tree_chains_to(topo: Topology, leaf: IsdAsId) -> list[list[IsdAsId]]:
    """All provider->customer chains ending at leaf, starting at a core AS.

    Returned in construction order (core first). A core leaf yields the
    trivial one-AS chain.
    """
    if topo.ases[leaf].is_core:
        return [[leaf]]
    chains = []

    def climb(current: IsdAsId, acc: list[IsdAsId]):
        for link in topo.links:
            if link.kind != "parent_child" or link.b_as != current:
                continue
            parent = link.a_as
            if parent in acc:
                continue
            chain = [parent, *acc]
            if topo.ases[parent].is_core:
                chains.append(chain)
            climb(parent, chain)

    climb(leaf, [leaf])
    return chains


def core_as_paths(topo: Topology, start: IsdAsId, end: IsdAsId) -> list[list[IsdAsId]]:
    """All simple core-link paths start..end (directed traversal)."""
    paths = []

    def walk(current: IsdAsId, acc: list[IsdAsId]):
        if current == end:
            paths.append(list(acc))
            return
        for link in topo.links:
            if link.kind != "core" or current not in (link.a_as, link.b_as):
                continue
            nxt = link.b_as if link.a_as == current else link.a_as
            if nxt in acc:
                continue
            acc.append(nxt)
            walk(nxt, acc)
            acc.pop()

    walk(start, [start])
    return paths


def _link_choices(topo: Topology, seq: list[IsdAsId], kinds) -> list[list[Link]]:
    per_step = []
    for x, y in zip(seq, seq[1:]):
        links = _links_between(topo, x, y, kinds)
        if not links:
            return []
        per_step.append(links)
    return [list(combo) for combo in product(*per_step)]


def true_walk_latency(topo: Topology, seq: list[IsdAsId], links: list[Link]) -> float:
    """Ground-truth one-way latency along seq over the given links."""
    total = 0.0
    arrival_if = None
    for i, link in enumerate(links):
        x, y = seq[i], seq[i + 1]
        x_if = link.a_if if link.a_as == x else link.b_if
        if arrival_if is not None:
            total += topo.ases[x].intra_latency(arrival_if, x_if).min
        total += link.latency_from(x, x_if).min
        _, arrival_if = link.other(x, x_if)
    return total


def oracle_best_latency(topo: Topology, src: IsdAsId, dst: IsdAsId) -> float | None:
    """Minimum true latency over all segment-expressible src->dst walks.

    Mirrors the structural rule (reversed provider chain, core walk,
    provider chain) directly on the topology, with brute-force enumeration
    of every AS sequence and every parallel-link choice.
    """
    if src == dst:
        return None
    best = None
    ups = tree_chains_to(topo, src)      # core .. src, construction order
    downs = tree_chains_to(topo, dst)
    for up in ups:
        up_rev = list(reversed(up))      # src .. core: travel order
        for down in downs:
            if up[0] == down[0]:
                middles = [[up[0]]]
            else:
                middles = core_as_paths(topo, up[0], down[0])
            for mid in middles:
                seq = up_rev[:-1] + mid + down[1:]
                if len(seq) < 2:
                    continue
                kinds = ("parent_child", "core")
                for links in _link_choices(topo, seq, kinds):
                    total = true_walk_latency(topo, seq, links)
                    if best is None or total < best:
                        best = total
    return best


def combinable_junction_pairs(store):
    """(arrival_entry, if_arr, departure_entry, if_dep) for every junction the
    combiner would accept across the store's segments."""
    from glids.beaconing import KIND_INTRA_ISD

    pairs = []
    all_ases = store.ases()
    for dst in all_ases:
        downs = [s for s in store.segments(dst, KIND_INTRA_ISD) if s.terminal == dst]
        for down in downs:
            d_origin = down.entries[0]
            for src in all_ases:
                if src == dst:
                    continue
                for up in store.segments(src, KIND_INTRA_ISD):
                    if up.terminal != src or up.origin != down.origin:
                        continue
                    u_origin = up.entries[0]
                    pairs.append((u_origin, u_origin.egress, d_origin, d_origin.egress))
            for core_origin in all_ases:
                for core in store.core_segments(core_origin, down.origin):
                    c_term = core.entries[-1]
                    pairs.append((c_term, c_term.ingress, d_origin, d_origin.egress))
        for up in store.segments(dst, KIND_INTRA_ISD):
            if up.terminal != dst:
                continue
            u_origin = up.entries[0]
            for core_term in all_ases:
                for core in store.core_segments(up.origin, core_term):
                    c_origin = core.entries[0]
                    pairs.append((u_origin, u_origin.egress, c_origin, c_origin.egress))
    return pairs


def junction_sources(arrival_entry, departure_entry, if_arr: int, if_dep: int) -> int:
    """How many independent places carry the junction pair's latency."""
    if if_arr == if_dep:
        return 1  # identity: zero by definition
    count = 0
    for entry, key in ((arrival_entry, if_dep), (departure_entry, if_arr)):
        if entry is None or entry.latency is None:
            continue
        if key in entry.latency.junction_map:
            count += 1
        if entry.ingress == key and entry.latency.intra_fwd is not None:
            count += 1
    return count
