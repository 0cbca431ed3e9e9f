"""Command-line surface.

Subcommands: import-caida, gen-topology, beacon, paths, probe, cca,
compare, run, cdf. Global flags: --seed (default 1), --out (file or
directory, subcommand dependent). Exit codes: 0 success, 1 configuration
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from .beaconing import BeaconSelectionPolicy, SegmentStore, run_beaconing
from .bgp import compare_glids_vs_bgp, compute_ribs
from .caida import import_caida
from .congestion import DumbbellConfig, run_fairness, run_sweep
from .dataplane import DataPlaneSim
from .errors import ConfigError, GlidsError
from .experiments import emit_cdf, fmt_ms, load_scenario, run_scenario
from .geo import GeoCoord
from .paths import enumerate_paths
from .probing import RETURNS_RTT, efficient_probe, exhaustive_probe
from .synth import GeneratorParams, synth_topology
from .topology import IsdAsId, Topology, load_topology, prune_to_top_degree


def _load_topo(path: str) -> Topology:
    return load_topology(Path(path).read_text())


def _get_store(args, topo: Topology) -> SegmentStore:
    if getattr(args, "store", None):
        return SegmentStore.import_text(Path(args.store).read_text())
    rounds = getattr(args, "rounds", None) or topo.diameter() + 2
    return run_beaconing(topo, rounds, BeaconSelectionPolicy(k=getattr(args, "k", 5)))


def _write_out(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_endpoint_file(path: str, tag: str) -> list[tuple[str, IsdAsId, GeoCoord]]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 5 or fields[0] != tag:
            raise ConfigError(f"{path}:{lineno}: expected '{tag} <id> <isd>-<as> <lat> <lon>'")
        out.append((fields[1], IsdAsId.parse(fields[2]),
                    GeoCoord(float(fields[3]), float(fields[4]))))
    if not out:
        raise ConfigError(f"{path}: no {tag} records")
    return out


def cmd_import_caida(args) -> int:
    topo, report = import_caida(Path(args.input).read_text(), prune_to=args.prune,
                                drop_unreachable=args.drop_unreachable)
    _write_out(args, topo.serialize())
    print(f"imported {report.n_ases} ASes, {report.n_links} links, "
          f"{report.n_core} core; dropped {report.n_dropped_unreachable}, "
          f"coerced {report.n_coerced_peering} p2c->peering", file=sys.stderr)
    return 0


def cmd_gen_topology(args) -> int:
    params = GeneratorParams(
        n_isds=args.isds, cores_per_isd=args.cores, noncore_per_isd=args.noncore,
        extra_core_links=args.extra_core_links, core_full_mesh=args.core_full_mesh,
        multihome_prob=args.multihome_prob, n_peering=args.peering,
        asymmetry=args.asymmetry)
    _write_out(args, synth_topology(args.seed, params).serialize())
    return 0


def cmd_beacon(args) -> int:
    topo = _load_topo(args.topology)
    rounds = args.rounds or topo.diameter() + 2
    disclosure = {}
    for item in args.disclose or []:
        try:
            as_text, policy = item.split("=", 1)
        except ValueError as exc:
            raise ConfigError(f"--disclose wants AS=policy, got {item!r}") from exc
        disclosure[IsdAsId.parse(as_text)] = policy
    store = run_beaconing(topo, rounds, BeaconSelectionPolicy(k=args.k), disclosure)
    _write_out(args, store.export_text())
    return 0


def cmd_paths(args) -> int:
    topo = _load_topo(args.topology)
    store = _get_store(args, topo)
    results = enumerate_paths(store, topo, IsdAsId.parse(args.src), IsdAsId.parse(args.dst),
                              limit=args.limit, policy=args.policy)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["path_id", "hop_string", "total_min_ms", "completeness"])
    for path, est in results:
        writer.writerow([path.path_id, path.hop_string(), fmt_ms(est.total_min), est.completeness])
    _write_out(args, buf.getvalue())
    return 0


def cmd_probe(args) -> int:
    topo = _load_topo(args.topology)
    store = _get_store(args, topo)
    candidates = enumerate_paths(store, topo, IsdAsId.parse(args.src), IsdAsId.parse(args.dst),
                                 limit=args.limit)
    if not candidates:
        raise ConfigError(f"no paths from {args.src} to {args.dst}")
    sim = DataPlaneSim(topo)

    def prober(path):
        return sim.send_probe(path, 0.0).rtt_ms

    reports = [("efficient", efficient_probe(candidates, prober, batch=args.batch,
                                             prober_returns=RETURNS_RTT)),
               ("exhaustive", exhaustive_probe(candidates, prober, prober_returns=RETURNS_RTT))]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["algorithm", "probes_sent", "best_path_id", "best_measured_ms",
                     "terminated_early", "probed_path_ids", "veracity_alerts"])
    for name, rep in reports:
        writer.writerow([name, rep.probes_sent, rep.best_path_id,
                         fmt_ms(rep.best_measured) if rep.best_measured is not None else "",
                         int(rep.terminated_early), ";".join(rep.probed_path_ids),
                         ";".join(rep.veracity_alerts)])
    _write_out(args, buf.getvalue())
    return 0


def cmd_cca(args) -> int:
    buf = io.StringIO()
    writer = csv.writer(buf)
    if args.mode == "sweep":
        writer.writerow(["n_bbr", "variant", "bbr_share", "total_goodput_mbps", "utilization"])
        for informed in (False, True):
            for r in run_sweep(n_flows=args.flows, informed=informed, seed=args.seed,
                               duration_s=args.duration):
                writer.writerow([r.config.n_bbr, "informed" if informed else "standard",
                                 f"{r.bbr_share:.6f}",
                                 f"{r.total_goodput_bits_per_s / 1e6:.6f}",
                                 f"{r.utilization:.6f}"])
    else:
        cfg = DumbbellConfig(n_bbr=args.n_bbr, n_cubic=args.flows - args.n_bbr,
                             informed=args.informed, seed=args.seed,
                             duration_s=args.duration, warmup_s=args.warmup)
        result = run_fairness(cfg)
        writer.writerow(["flow_id", "cca", "goodput_mbps", "losses", "min_rtprop_ms"])
        for f in result.flows:
            writer.writerow([f.flow_id, f.cca, f"{f.goodput_bits_per_s / 1e6:.6f}", f.losses,
                             fmt_ms(f.min_rtprop_ms) if f.min_rtprop_ms is not None else ""])
        print(f"bbr_share {result.bbr_share:.6f}", file=sys.stderr)
    _write_out(args, buf.getvalue())
    return 0


def cmd_compare(args) -> int:
    topo = _load_topo(args.topology)
    store = _get_store(args, topo)
    probes = _parse_endpoint_file(args.probes, "probe")
    servers = _parse_endpoint_file(args.servers, "server")
    rib = compute_ribs(topo, {as_id for _, as_id, _ in servers})
    rows = compare_glids_vs_bgp(topo, store, rib, probes, servers, limit=args.limit)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["probe_id", "server_id", "glids_ms", "bgp_ms", "delta_ms"])
    for r in rows:
        writer.writerow([r.probe_id, r.server_id,
                         fmt_ms(r.glids_ms) if r.glids_ms is not None else "",
                         fmt_ms(r.bgp_ms) if r.bgp_ms is not None else "",
                         fmt_ms(r.delta_ms) if r.delta_ms is not None else ""])
    _write_out(args, buf.getvalue())
    return 0


def cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)
    out_dir = Path(args.out) if args.out else Path(scenario.get("out_dir", "out")) / scenario["name"]
    manifest = run_scenario(scenario, out_dir, seed=args.seed if args.seed_given else None)
    print(f"wrote {len(manifest['outputs'])} outputs to {out_dir}", file=sys.stderr)
    return 0


def cmd_cdf(args) -> int:
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".cdf.csv")
    emit_cdf(Path(args.input), args.column, out)
    return 0


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit code 1, not 2)."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    # --seed/--out are accepted both before and after the subcommand; the
    # per-subcommand copy uses SUPPRESS so an absent flag keeps the global.
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="output file (or directory for run)")
    parser = _Parser(prog="glids")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", default=None, help="output file (or directory for run)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.parser_class = _Parser

    def add_sub(name, **kwargs):
        return subparsers.add_parser(name, parents=[common], **kwargs)

    p = add_sub("import-caida", help="convert rel-geo records to the topology format")
    p.add_argument("--input", required=True)
    p.add_argument("--prune", type=int, default=None, help="keep only the N highest-degree ASes")
    p.add_argument("--drop-unreachable", action="store_true")
    p.set_defaults(func=cmd_import_caida)

    p = add_sub("gen-topology", help="generate a seeded synthetic topology")
    p.add_argument("--isds", type=int, default=1)
    p.add_argument("--cores", type=int, default=1)
    p.add_argument("--noncore", type=int, default=0)
    p.add_argument("--extra-core-links", type=int, default=0)
    p.add_argument("--core-full-mesh", action="store_true")
    p.add_argument("--multihome-prob", type=float, default=0.0)
    p.add_argument("--peering", type=int, default=0)
    p.add_argument("--asymmetry", type=float, default=0.0)
    p.set_defaults(func=cmd_gen_topology)

    p = add_sub("beacon", help="run beaconing and export the segment store")
    p.add_argument("--topology", required=True)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--disclose", action="append", metavar="AS=POLICY",
                   help="per-AS disclosure override, e.g. 1-3=none")
    p.set_defaults(func=cmd_beacon)

    p = add_sub("paths", help="enumerate end-to-end paths with estimates")
    p.add_argument("--topology", required=True)
    p.add_argument("--store", help="segment store export; beacons on the fly if omitted")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--policy", choices=["zero_fill", "discard"], default="zero_fill")
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_paths)

    p = add_sub("probe", help="efficient vs exhaustive path probing")
    p.add_argument("--topology", required=True)
    p.add_argument("--store")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_probe)

    p = add_sub("cca", help="bottleneck fairness: one run or the full sweep")
    p.add_argument("mode", nargs="?", choices=["run", "sweep"], default="run")
    p.add_argument("--n-bbr", type=int, default=1)
    p.add_argument("--flows", type=int, default=10)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--informed", action="store_true")
    group.add_argument("--standard", dest="informed", action="store_false")
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--warmup", type=float, default=10.0)
    p.set_defaults(func=cmd_cca, informed=False)

    p = add_sub("compare", help="latency-aware routing vs the BGP baseline")
    p.add_argument("--topology", required=True)
    p.add_argument("--store")
    p.add_argument("--probes", required=True)
    p.add_argument("--servers", required=True)
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_compare)

    p = add_sub("run", help="run a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = add_sub("cdf", help="emit (value, cumulative fraction) pairs for a CSV column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", required=True)
    p.set_defaults(func=cmd_cdf)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.seed_given = any(a == "--seed" or a.startswith("--seed=") for a in argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GlidsError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
