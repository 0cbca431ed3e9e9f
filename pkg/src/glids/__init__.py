"""Latency-transparent path-aware routing, desk scale.

Library layout:

* topology, synth, caida: AS/ISD topologies with geo-located interfaces
* beaconing: path-segment construction with latency dissemination
* paths: segment combination and propagation-latency estimation
* dataplane: deterministic probe-level simulator and measurements
* probing: latency-ordered path probing with early termination
* congestion: CUBIC vs BBR (standard/informed) bottleneck fairness
* bgp: Gao-Rexford baseline and the routing comparison
* experiments, cli: scenario runner and the command-line surface
"""

__version__ = "0.1.0"

from .beaconing import (
    BeaconSelectionPolicy, LatencyInfo, PathSegment, SegmentStore,
    extend, originate, run_beaconing, verify_attestations,
)
from .congestion import DumbbellConfig, FairnessResult, run_fairness, run_sweep
from .dataplane import CrossTraffic, DataPlaneSim, ProbeResult
from .errors import (
    BeaconingError, CombineError, ConfigError, EstimateRejected, GlidsError,
    JunctionResolutionError, MeasurementError, ProbeLost,
    TopologyParseError, TopologyValidationError,
)
from .geo import GeoCoord, great_circle_latency
from .paths import (
    EndToEndPath, LatencyEstimate, MissingInfoPolicy,
    combine, combine_peering, enumerate_paths, estimate_latency,
)
from .probing import ProbingReport, efficient_probe, exhaustive_probe
from .bgp import BgpRib, bgp_router_path, compare_glids_vs_bgp, compute_ribs
from .caida import import_caida
from .synth import GeneratorParams, synth_topology
from .topology import (
    AsNode, DirectedLatency, IsdAsId, Link, Topology,
    load_topology, prune_to_top_degree,
)

__all__ = [name for name in dir() if not name.startswith("_")]
