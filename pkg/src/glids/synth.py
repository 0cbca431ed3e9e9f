"""Seeded synthetic topology generator.

Produces valid topologies of any desk-scale shape: one geographic band per
ISD, cores on a global ring (plus optional chords), non-core ASes attached
under random parents inside their ISD, optional multihoming and peering.

Placement policy: every AS sits at a seeded point inside its ISD band, and
each border-router interface is placed part way from its own AS toward the
neighbor (`interface_pull`), so intra-AS interface spreads and inter-AS
link latencies are both nonzero and geographically plausible.

Interface identifiers honor the dissemination convention from
`glids.topology`: core and peering interfaces receive the lowest AS-local
identifiers, provider-side interfaces the highest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ConfigError
from .geo import GeoCoord, great_circle_latency
from .topology import (
    ROLE_CORE, ROLE_CUSTOMER, ROLE_ORDER, ROLE_PEERING, ROLE_PROVIDER,
    DirectedLatency, IsdAsId, Link, Topology,
)


@dataclass
class GeneratorParams:
    n_isds: int = 1
    cores_per_isd: int = 1
    noncore_per_isd: int = 0
    extra_core_links: int = 0
    core_full_mesh: bool = False
    multihome_prob: float = 0.0
    n_peering: int = 0
    cross_isd_peering: bool = True
    interface_pull: float = 0.25
    asymmetry: float = 0.0
    # circuity: per-link factor in [1, 1+latency_noise] over the great-circle
    # latency, modeling fiber paths that are longer than the geodesic
    latency_noise: float = 0.0
    lat_range: tuple[float, float] = (-50.0, 60.0)

    def validate(self):
        if self.n_isds < 1:
            raise ConfigError("need at least one ISD")
        if self.cores_per_isd < 1:
            raise ConfigError("need at least one core AS per ISD")
        if self.noncore_per_isd < 0 or self.extra_core_links < 0 or self.n_peering < 0:
            raise ConfigError("counts must be >= 0")
        if not 0.0 <= self.multihome_prob <= 1.0:
            raise ConfigError("multihome_prob must be in [0, 1]")
        if self.latency_noise < 0:
            raise ConfigError("latency_noise must be >= 0")
        if not 0.0 < self.interface_pull < 1.0:
            raise ConfigError("interface_pull must be in (0, 1)")
        if self.asymmetry < 0:
            raise ConfigError("asymmetry must be >= 0")


def _lerp_coord(a: GeoCoord, b: GeoCoord, t: float) -> GeoCoord:
    # Good enough for generator placement; bands stay clear of the antimeridian.
    return GeoCoord(a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t)


def synth_topology(seed: int, params: GeneratorParams) -> Topology:
    """Build a deterministic topology for the given seed and parameters."""
    params.validate()
    rng = random.Random(seed)

    # AS ids and positions.
    positions: dict[IsdAsId, GeoCoord] = {}
    cores: list[IsdAsId] = []
    noncores_by_isd: dict[int, list[IsdAsId]] = {}
    band = 320.0 / params.n_isds
    for isd in range(1, params.n_isds + 1):
        lon_lo = -160.0 + (isd - 1) * band + 0.1 * band
        lon_hi = lon_lo + 0.8 * band
        ids = []
        for num in range(1, params.cores_per_isd + params.noncore_per_isd + 1):
            as_id = IsdAsId(isd, num)
            positions[as_id] = GeoCoord(rng.uniform(*params.lat_range), rng.uniform(lon_lo, lon_hi))
            ids.append(as_id)
        cores.extend(ids[: params.cores_per_isd])
        noncores_by_isd[isd] = ids[params.cores_per_isd:]

    # Abstract edges: (a, b, kind); for parent_child a is the provider.
    edges: list[tuple[IsdAsId, IsdAsId, str]] = []
    seen_pairs: set[tuple[IsdAsId, IsdAsId]] = set()

    def add_edge(a: IsdAsId, b: IsdAsId, kind: str) -> bool:
        key = (min(a, b), max(a, b))
        if a == b or key in seen_pairs:
            return False
        seen_pairs.add(key)
        edges.append((a, b, kind))
        return True

    if len(cores) > 1:
        ring = sorted(cores)
        if params.core_full_mesh:
            for i, a in enumerate(ring):
                for b in ring[i + 1:]:
                    add_edge(a, b, "core")
        else:
            for i, a in enumerate(ring):
                add_edge(a, ring[(i + 1) % len(ring)], "core")
            for _ in range(params.extra_core_links):
                a, b = rng.sample(ring, 2)
                add_edge(min(a, b), max(a, b), "core")

    for isd in range(1, params.n_isds + 1):
        eligible = list(cores[(isd - 1) * params.cores_per_isd: isd * params.cores_per_isd])
        for child in noncores_by_isd[isd]:
            parent = rng.choice(eligible)
            add_edge(parent, child, "parent_child")
            if eligible and rng.random() < params.multihome_prob:
                second = rng.choice(eligible)
                add_edge(second, child, "parent_child")
            eligible.append(child)

    all_noncore = [a for isd in sorted(noncores_by_isd) for a in noncores_by_isd[isd]]
    attempts = 0
    placed = 0
    while placed < params.n_peering and attempts < params.n_peering * 20 and len(all_noncore) > 1:
        attempts += 1
        a, b = rng.sample(all_noncore, 2)
        if not params.cross_isd_peering and a.isd != b.isd:
            continue
        if add_edge(min(a, b), max(a, b), "peering"):
            placed += 1

    # Interface ids: per AS, role priority then deterministic edge order.
    per_as: dict[IsdAsId, list[tuple[int, int, str]]] = {a: [] for a in positions}
    for idx, (a, b, kind) in enumerate(edges):
        if kind == "core":
            per_as[a].append((ROLE_ORDER[ROLE_CORE], idx, "a"))
            per_as[b].append((ROLE_ORDER[ROLE_CORE], idx, "b"))
        elif kind == "peering":
            per_as[a].append((ROLE_ORDER[ROLE_PEERING], idx, "a"))
            per_as[b].append((ROLE_ORDER[ROLE_PEERING], idx, "b"))
        else:
            per_as[a].append((ROLE_ORDER[ROLE_PROVIDER], idx, "a"))
            per_as[b].append((ROLE_ORDER[ROLE_CUSTOMER], idx, "b"))

    ifids: dict[tuple[int, str], int] = {}
    topo = Topology()
    for as_id in sorted(positions):
        node = topo.add_as(as_id, as_id in set(cores))
        next_id = 1
        for _, idx, side in sorted(per_as[as_id]):
            ifids[(idx, side)] = next_id
            a, b, _ = edges[idx]
            other = b if side == "a" else a
            node.add_interface(next_id, _lerp_coord(positions[as_id], positions[other], params.interface_pull))
            next_id += 1

    for idx, (a, b, kind) in enumerate(edges):
        a_if, b_if = ifids[(idx, "a")], ifids[(idx, "b")]
        if kind == "peering":
            lat_ab = lat_ba = DirectedLatency(0.0, 0.0)
        else:
            ms = great_circle_latency(topo.ases[a].interfaces[a_if], topo.ases[b].interfaces[b_if])
            if params.latency_noise:
                ms *= 1.0 + rng.uniform(0.0, params.latency_noise)
            skew = 1.0 + (rng.uniform(0.0, params.asymmetry) if params.asymmetry else 0.0)
            lat_ab = DirectedLatency(ms)
            lat_ba = DirectedLatency(ms * skew)
        topo.add_link(Link(a, a_if, b, b_if, kind, lat_ab, lat_ba))

    topo.validate()
    return topo
