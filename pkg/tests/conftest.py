"""Shared fixture builders.

TopoBuilder assembles small hand-controlled topologies: every interface of
an AS sits at the AS's own coordinate (so intra-AS defaults are 0 ms and
tests set exactly the latencies they mean to test), link latencies default
to 0 ms, and interface identifiers follow the same role-priority
convention as the generator (core and peering lowest, provider side
highest).
"""

from __future__ import annotations

import pytest

from glids.geo import GeoCoord
from glids.topology import (
    ROLE_CORE, ROLE_CUSTOMER, ROLE_ORDER, ROLE_PEERING, ROLE_PROVIDER,
    DirectedLatency, IsdAsId, Link, Topology,
)


class TopoBuilder:
    def __init__(self):
        self._ases: dict[str, tuple[bool, GeoCoord]] = {}
        self._edges: list[tuple[str, str, str, float, float]] = []

    def add_as(self, name: str, core: bool = False, lat: float = 0.0, lon: float = 0.0):
        self._ases[name] = (core, GeoCoord(lat, lon))
        return self

    def link(self, a: str, b: str, kind: str, ab: float = 0.0, ba: float | None = None) -> int:
        """Returns the edge index, used to look up interface ids after build."""
        self._edges.append((a, b, kind, ab, ab if ba is None else ba))
        return len(self._edges) - 1

    def build(self) -> tuple[Topology, dict[tuple[int, str], int]]:
        topo = Topology()
        per_as: dict[str, list[tuple[int, int, str]]] = {n: [] for n in self._ases}
        for idx, (a, b, kind, _, _) in enumerate(self._edges):
            if kind == "parent_child":
                per_as[a].append((ROLE_ORDER[ROLE_PROVIDER], idx, "a"))
                per_as[b].append((ROLE_ORDER[ROLE_CUSTOMER], idx, "b"))
            else:
                role = ROLE_CORE if kind == "core" else ROLE_PEERING
                per_as[a].append((ROLE_ORDER[role], idx, "a"))
                per_as[b].append((ROLE_ORDER[role], idx, "b"))
        ifids: dict[tuple[int, str], int] = {}
        for name in sorted(self._ases, key=IsdAsId.parse):
            core, coord = self._ases[name]
            node = topo.add_as(IsdAsId.parse(name), core)
            next_id = 1
            for _, idx, side in sorted(per_as[name]):
                ifids[(idx, side)] = next_id
                node.add_interface(next_id, coord)
                next_id += 1
        for idx, (a, b, kind, ab, ba) in enumerate(self._edges):
            topo.add_link(Link(IsdAsId.parse(a), ifids[(idx, "a")],
                               IsdAsId.parse(b), ifids[(idx, "b")], kind,
                               DirectedLatency(ab), DirectedLatency(ba)))
        topo.validate()
        return topo, ifids


def asid(text: str) -> IsdAsId:
    return IsdAsId.parse(text)


@pytest.fixture
def builder():
    return TopoBuilder()


def line_core_chain(latencies: list[float]) -> tuple[Topology, dict]:
    """Core ASes 1-1 .. 1-(n+1) on a chain of core links with given latencies."""
    b = TopoBuilder()
    n = len(latencies) + 1
    for i in range(1, n + 1):
        b.add_as(f"1-{i}", core=True, lon=float(i))
    edges = {}
    for i, ms in enumerate(latencies, start=1):
        edges[i] = b.link(f"1-{i}", f"1-{i + 1}", "core", ab=ms)
    topo, ifids = b.build()
    return topo, {"edges": edges, "ifids": ifids}


def fig_one_shape() -> Topology:
    """Three ISDs, five core and seven non-core ASes, plus a cross-ISD peering."""
    b = TopoBuilder()
    b.add_as("1-1", core=True, lat=10, lon=0)
    b.add_as("1-2", core=True, lat=12, lon=4)
    b.add_as("2-1", core=True, lat=20, lon=40)
    b.add_as("3-1", core=True, lat=-10, lon=80)
    b.add_as("3-2", core=True, lat=-12, lon=84)
    for name, (la, lo) in {"1-3": (8, 1), "1-4": (7, 3), "2-2": (18, 41),
                           "2-3": (17, 43), "3-3": (-14, 81), "3-4": (-15, 83),
                           "3-5": (-16, 85)}.items():
        b.add_as(name, core=False, lat=la, lon=lo)
    b.link("1-1", "1-2", "core", 1.0)
    b.link("1-1", "2-1", "core", 20.0)
    b.link("1-2", "3-1", "core", 35.0)
    b.link("2-1", "3-1", "core", 30.0)
    b.link("3-1", "3-2", "core", 1.5)
    b.link("1-1", "1-3", "parent_child", 2.0)
    b.link("1-2", "1-4", "parent_child", 2.5)
    b.link("1-3", "1-4", "peering", 0.5)
    b.link("2-1", "2-2", "parent_child", 3.0)
    b.link("2-2", "2-3", "parent_child", 1.0)
    b.link("3-1", "3-3", "parent_child", 2.0)
    b.link("3-2", "3-4", "parent_child", 2.0)
    b.link("3-3", "3-5", "parent_child", 1.0)
    b.link("2-2", "3-4", "peering", 0.25)
    topo, _ = b.build()
    return topo


def small_random_params(rng_seed: int):
    """Deterministic small-topology parameter mix for property sweeps."""
    import random

    from glids.synth import GeneratorParams

    rng = random.Random(rng_seed)
    return GeneratorParams(
        n_isds=rng.choice((1, 2, 3)),
        cores_per_isd=rng.choice((1, 2)),
        noncore_per_isd=rng.choice((2, 3, 5, 7)),
        extra_core_links=rng.choice((0, 1, 2)),
        multihome_prob=rng.choice((0.0, 0.3, 0.6)),
        n_peering=rng.choice((0, 1, 2)),
        asymmetry=rng.choice((0.0, 0.15)),
    )
