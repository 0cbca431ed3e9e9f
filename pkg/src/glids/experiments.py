"""Scenario runner: named experiment recipes with CSV outputs and manifests.

A scenario is a JSON document selecting one experiment kind and its
parameters (see README for the schema). Every run writes its CSV artifacts
plus manifest.json recording the scenario hash, the seed, and the output
digests, so a rerun can be checked byte for byte.

Experiment kinds:

* estimator: advertised (disseminated) vs experienced (probed) latency per
  path, with advertised values from ground truth or from min-RTT link
  measurements.
* reduction: latency of the hop-count default path vs the best estimated
  path per endpoint pair, plus the reduction CDF.
* probing: efficient vs exhaustive probing cost per endpoint pair.
* cca_sweep: BBR/CUBIC capacity shares across the flow mix.
* bgp_compare: realized latency to announced destinations under
  latency-aware path choice vs the BGP baseline.
"""

from __future__ import annotations

import csv
import hashlib
import json
import random
from pathlib import Path

import numpy as np

from . import __version__
from .beaconing import BeaconSelectionPolicy, SegmentStore, run_beaconing
from .bgp import compare_glids_vs_bgp, compute_ribs
from .congestion import DumbbellConfig, run_fairness
from .dataplane import CrossTraffic, DataPlaneSim
from .errors import ConfigError, MeasurementError, ProbeLost
from .geo import GeoCoord
from .paths import enumerate_paths
from .probing import RETURNS_RTT, efficient_probe, exhaustive_probe
from .synth import GeneratorParams, synth_topology
from .topology import DirectedLatency, IsdAsId, Link, Topology, load_topology

SCENARIO_KINDS = ("estimator", "reduction", "probing", "cca_sweep", "bgp_compare")


def fmt_ms(value: float) -> str:
    return f"{value:.6f}"


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def emit_cdf(in_csv: Path, column: str, out_csv: Path) -> Path:
    """Sorted (value, cumulative fraction) pairs for one numeric column."""
    with open(in_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ConfigError(f"column {column!r} not in {in_csv}")
        values = []
        for row in reader:
            cell = row[column]
            if cell == "":
                continue
            values.append(float(cell))
    if not values:
        raise ConfigError(f"no numeric data in column {column!r} of {in_csv}")
    data = np.sort(np.asarray(values))
    fractions = np.arange(1, len(data) + 1) / len(data)
    rows = [[fmt_ms(v), f"{f:.6f}"] for v, f in zip(data, fractions)]
    return write_csv(out_csv, [column, "cum_fraction"], rows)


# -- scenario plumbing -------------------------------------------------------

def load_scenario(path: Path) -> dict:
    try:
        scenario = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load scenario {path}: {exc}") from exc
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: dict):
    if not isinstance(scenario, dict):
        raise ConfigError("scenario must be a JSON object")
    kind = scenario.get("kind")
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {SCENARIO_KINDS}")
    if "name" not in scenario:
        raise ConfigError("scenario needs a name")
    if kind != "cca_sweep" and "topology" not in scenario:
        raise ConfigError(f"{kind} scenario needs a topology")


def scenario_hash(scenario: dict) -> str:
    return hashlib.sha256(json.dumps(scenario, sort_keys=True).encode()).hexdigest()


def build_topology(spec: dict, default_seed: int) -> Topology:
    if "file" in spec:
        return load_topology(Path(spec["file"]).read_text())
    if "synth" in spec:
        params = dict(spec["synth"])
        seed = params.pop("seed", default_seed)
        return synth_topology(seed, GeneratorParams(**params))
    raise ConfigError("topology spec needs 'file' or 'synth'")


def cross_traffic_from_spec(topo: Topology, entries: list[dict]) -> dict:
    out = {}
    for item in entries:
        as_id = IsdAsId.parse(item["as"])
        ifid = int(item["if"])
        if as_id not in topo.ases or ifid not in topo.ases[as_id].interfaces:
            raise ConfigError(f"cross-traffic target {as_id}#{ifid} not in topology")
        params = {k: v for k, v in item.items() if k not in ("as", "if")}
        out[(as_id, ifid)] = CrossTraffic(**params)
    return out


def _beacon(topo: Topology, scenario: dict) -> SegmentStore:
    opts = scenario.get("beaconing", {})
    rounds = opts.get("rounds") or topo.diameter() + 2
    policy = BeaconSelectionPolicy(k=opts.get("k", 5))
    disclosure = {IsdAsId.parse(key): value
                  for key, value in scenario.get("disclosure", {}).items()}
    return run_beaconing(topo, rounds, policy, disclosure)


def _sample_pairs(topo: Topology, store: SegmentStore, count: int, rng: random.Random,
                  limit: int) -> list[tuple[IsdAsId, IsdAsId, list]]:
    """Seeded endpoint pairs that actually have at least one path."""
    ases = sorted(topo.ases)
    pairs = []
    attempts = 0
    while len(pairs) < count and attempts < count * 30:
        attempts += 1
        src, dst = rng.sample(ases, 2)
        candidates = enumerate_paths(store, topo, src, dst, limit=limit)
        if candidates:
            pairs.append((src, dst, candidates))
    return pairs


def measured_topology(topo: Topology, sim: DataPlaneSim,
                      duration_s: float, interval_ms: float) -> Topology:
    """Clone with link latencies replaced by inferred values (min RTT / 2).

    The halving is the documented estimator limitation: asymmetric ground
    truth shows up as estimation error, exactly as an RTT-based operator
    measurement would have it.
    """
    out = Topology()
    for as_id in sorted(topo.ases):
        node = topo.ases[as_id]
        clone = out.add_as(as_id, node.is_core)
        clone.interfaces = dict(node.interfaces)
        clone.intra_overrides = dict(node.intra_overrides)
    for link in topo.links:
        inferred = sim.link_min_rtt(link, duration_s, interval_ms) / 2.0
        lat = DirectedLatency(inferred)
        out.add_link(Link(link.a_as, link.a_if, link.b_as, link.b_if, link.kind, lat, lat))
    out.validate()
    return out


# -- experiment bodies -------------------------------------------------------

def _run_estimator(scenario: dict, topo: Topology, out_dir: Path, seed: int) -> list[Path]:
    rng = random.Random(seed)
    store = _beacon(topo, scenario)
    cross = cross_traffic_from_spec(topo, scenario.get("cross_traffic", []))
    sim = DataPlaneSim(topo, cross_traffic=cross)
    limit = scenario.get("limit", 1000)
    if scenario.get("advertised", "ground_truth") == "measured":
        opts = scenario.get("measure", {})
        adv_topo = measured_topology(topo, sim, opts.get("duration_s", 10.0),
                                     opts.get("interval_ms", 500.0))
        adv_store = _beacon(adv_topo, scenario)
    else:
        adv_store = store
    pairs = _sample_pairs(topo, store, scenario.get("pairs", 20), rng, limit)
    rows = []
    for src, dst, candidates in pairs:
        advertised = {p.path_id: (e.total_min + e.total_min_rev)
                      for p, e in enumerate_paths(adv_store, topo, src, dst, limit=limit)}
        for path, _est in candidates[: scenario.get("paths_per_pair", 5)]:
            if path.path_id not in advertised:
                continue
            try:
                experienced = sim.measure_experienced(path, n=5, spacing_ms=200.0,
                                                      start_ms=rng.uniform(0.0, 1000.0))
            except MeasurementError:
                continue
            adv = advertised[path.path_id]
            rows.append([str(src), str(dst), path.path_id, fmt_ms(adv), fmt_ms(experienced),
                         int(experienced < adv - 1e-9)])
    out = write_csv(out_dir / "estimator.csv",
                    ["src", "dst", "path_id", "advertised_rtt_ms", "experienced_rtt_ms", "violation"],
                    rows)
    return [out]


def _run_reduction(scenario: dict, topo: Topology, out_dir: Path, seed: int) -> list[Path]:
    rng = random.Random(seed)
    store = _beacon(topo, scenario)
    limit = scenario.get("limit", 1000)
    pairs = _sample_pairs(topo, store, scenario.get("pairs", 50), rng, limit)
    rows = []
    for src, dst, candidates in pairs:
        best_path, best_est = candidates[0]
        default_path, default_est = min(
            candidates, key=lambda c: (len(c[0].hops), c[0].path_id))
        reduction = default_est.total_min - best_est.total_min
        relative = reduction / default_est.total_min if default_est.total_min > 0 else 0.0
        rows.append([str(src), str(dst), default_path.path_id, best_path.path_id,
                     fmt_ms(default_est.total_min), fmt_ms(best_est.total_min),
                     fmt_ms(reduction), f"{relative:.6f}"])
    out = write_csv(out_dir / "reduction.csv",
                    ["src", "dst", "default_path", "best_path", "default_ms",
                     "best_ms", "reduction_ms", "relative_reduction"], rows)
    cdf = emit_cdf(out, "reduction_ms", out_dir / "reduction_cdf.csv")
    return [out, cdf]


def _run_probing(scenario: dict, topo: Topology, out_dir: Path, seed: int) -> list[Path]:
    rng = random.Random(seed)
    store = _beacon(topo, scenario)
    cross = cross_traffic_from_spec(topo, scenario.get("cross_traffic", []))
    sim = DataPlaneSim(topo, cross_traffic=cross)
    limit = scenario.get("limit", 1000)
    batch = scenario.get("probe_batch", 1)
    pairs = _sample_pairs(topo, store, scenario.get("pairs", 20), rng, limit)
    rows = []
    for src, dst, candidates in pairs:
        start = rng.uniform(0.0, 1000.0)

        def prober(path, _start=start):
            return sim.send_probe(path, _start).rtt_ms

        eff = efficient_probe(candidates, prober, batch=batch, prober_returns=RETURNS_RTT)
        exh = exhaustive_probe(candidates, prober, prober_returns=RETURNS_RTT)
        savings = 1.0 - eff.probes_sent / exh.probes_sent if exh.probes_sent else 0.0
        rows.append([str(src), str(dst), len(candidates), eff.probes_sent, exh.probes_sent,
                     int(eff.best_path_id == exh.best_path_id), f"{savings:.6f}",
                     fmt_ms(eff.best_measured) if eff.best_measured is not None else ""])
    out = write_csv(out_dir / "probing.csv",
                    ["src", "dst", "candidates", "efficient_probes", "exhaustive_probes",
                     "argmin_match", "probe_savings", "best_rtt_ms"], rows)
    return [out]


def _run_cca_sweep(scenario: dict, _topo: Topology | None, out_dir: Path, seed: int) -> list[Path]:
    opts = scenario.get("cca", {})
    flows = opts.get("flows", 10)
    duration = opts.get("duration_s", 60.0)
    warmup = opts.get("warmup_s", 10.0)
    points = opts.get("n_bbr", list(range(flows + 1)))
    variants = opts.get("variants", ["standard", "informed"])
    sweep_rows = []
    flow_rows = []
    for variant in variants:
        informed = variant == "informed"
        for n_bbr in points:
            cfg = DumbbellConfig(n_bbr=n_bbr, n_cubic=flows - n_bbr, informed=informed,
                                 duration_s=duration, warmup_s=warmup, seed=seed)
            result = run_fairness(cfg)
            sweep_rows.append([n_bbr, variant, f"{result.bbr_share:.6f}",
                               f"{result.total_goodput_bits_per_s / 1e6:.6f}",
                               f"{result.utilization:.6f}", result.drops])
            for f in result.flows:
                flow_rows.append([n_bbr, variant, f.flow_id, f.cca,
                                  f"{f.goodput_bits_per_s / 1e6:.6f}", f.losses,
                                  fmt_ms(f.min_rtprop_ms) if f.min_rtprop_ms is not None else "",
                                  fmt_ms(f.last_rtprop_ms) if f.last_rtprop_ms is not None else ""])
    sweep = write_csv(out_dir / "cca_sweep.csv",
                      ["n_bbr", "variant", "bbr_share", "total_goodput_mbps",
                       "utilization", "drops"], sweep_rows)
    per_flow = write_csv(out_dir / "cca_flows.csv",
                         ["n_bbr", "variant", "flow_id", "cca", "goodput_mbps",
                          "losses", "min_rtprop_ms", "last_rtprop_ms"], flow_rows)
    return [sweep, per_flow]


def _coord_near(rng: random.Random, coord: GeoCoord) -> GeoCoord:
    lat = min(90.0, max(-90.0, coord.lat + rng.uniform(-2.0, 2.0)))
    lon = coord.lon + rng.uniform(-2.0, 2.0)
    if lon <= -180.0:
        lon += 360.0
    if lon > 180.0:
        lon -= 360.0
    return GeoCoord(lat, lon)


def _run_bgp_compare(scenario: dict, topo: Topology, out_dir: Path, seed: int) -> list[Path]:
    rng = random.Random(seed)
    opts = scenario.get("bgp", {})
    store = _beacon(topo, scenario)
    cores = topo.core_ases()
    if "announcer_ases" in opts:
        announcers = [IsdAsId.parse(a) for a in opts["announcer_ases"]]
    else:
        n = min(opts.get("announcers", 3), len(cores))
        announcers = rng.sample(cores, n)
    rib = compute_ribs(topo, set(announcers))
    servers = []
    for i, as_id in enumerate(sorted(announcers)):
        node = topo.ases[as_id]
        base = next(iter(sorted(node.interfaces.items())))[1] if node.interfaces else GeoCoord(0, 0)
        servers.append((f"s{i}", as_id, _coord_near(rng, base)))
    n_probes = opts.get("probes", 50)
    candidates = [a for a in sorted(topo.ases) if a not in set(announcers)]
    chosen = candidates if len(candidates) <= n_probes else rng.sample(candidates, n_probes)
    probes = []
    for i, as_id in enumerate(sorted(chosen)):
        node = topo.ases[as_id]
        base = next(iter(sorted(node.interfaces.items())))[1] if node.interfaces else GeoCoord(0, 0)
        probes.append((f"p{i}", as_id, _coord_near(rng, base)))
    rows = compare_glids_vs_bgp(topo, store, rib, probes, servers,
                                limit=scenario.get("limit", 1000))
    out_rows = []
    for r in rows:
        out_rows.append([r.probe_id, r.server_id,
                         fmt_ms(r.glids_ms) if r.glids_ms is not None else "",
                         fmt_ms(r.bgp_ms) if r.bgp_ms is not None else "",
                         fmt_ms(r.delta_ms) if r.delta_ms is not None else ""])
    out = write_csv(out_dir / "bgp_compare.csv",
                    ["probe_id", "server_id", "glids_ms", "bgp_ms", "delta_ms"], out_rows)
    cdf = emit_cdf(out, "delta_ms", out_dir / "bgp_compare_cdf.csv")
    return [out, cdf]


_RUNNERS = {
    "estimator": _run_estimator,
    "reduction": _run_reduction,
    "probing": _run_probing,
    "cca_sweep": _run_cca_sweep,
    "bgp_compare": _run_bgp_compare,
}


def run_scenario(scenario: dict, out_dir: Path, seed: int | None = None) -> dict:
    """Execute one scenario; returns the manifest (also written to disk)."""
    validate_scenario(scenario)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    effective_seed = seed if seed is not None else scenario.get("seed", 1)
    topo = None
    if "topology" in scenario:
        topo = build_topology(scenario["topology"], effective_seed)
    outputs = _RUNNERS[scenario["kind"]](scenario, topo, out_dir, effective_seed)
    manifest = {
        "name": scenario["name"],
        "kind": scenario["kind"],
        "seed": effective_seed,
        "config_sha256": scenario_hash(scenario),
        "package_version": __version__,
        "outputs": {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in outputs},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
