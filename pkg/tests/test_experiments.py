import csv
import json
from pathlib import Path

import pytest

from glids.caida import import_caida
from glids.cli import main
from glids.errors import ConfigError, TopologyParseError
from glids.experiments import emit_cdf, run_scenario, validate_scenario, write_csv
from glids.topology import IsdAsId, load_topology


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- emit_cdf -----------------------------------------------------------------

def _values_csv(tmp_path, values):
    path = tmp_path / "vals.csv"
    write_csv(path, ["x"], [[v] for v in values])
    return path


def test_cdf_three_values(tmp_path):
    out = emit_cdf(_values_csv(tmp_path, [3, 1, 2]), "x", tmp_path / "cdf.csv")
    rows = _read_csv(out)
    got = [(float(r["x"]), float(r["cum_fraction"])) for r in rows]
    assert got == [(1.0, pytest.approx(1 / 3)), (2.0, pytest.approx(2 / 3)), (3.0, 1.0)]


def test_cdf_single_value(tmp_path):
    rows = _read_csv(emit_cdf(_values_csv(tmp_path, [7.5]), "x", tmp_path / "c.csv"))
    assert [(float(r["x"]), float(r["cum_fraction"])) for r in rows] == [(7.5, 1.0)]


def test_cdf_constant_column_is_vertical(tmp_path):
    rows = _read_csv(emit_cdf(_values_csv(tmp_path, [4, 4, 4, 4]), "x", tmp_path / "c.csv"))
    assert all(float(r["x"]) == 4.0 for r in rows)
    assert [float(r["cum_fraction"]) for r in rows] == [0.25, 0.5, 0.75, 1.0]


def test_cdf_errors(tmp_path):
    with pytest.raises(ConfigError):
        emit_cdf(_values_csv(tmp_path, []), "x", tmp_path / "c.csv")
    with pytest.raises(ConfigError):
        emit_cdf(_values_csv(tmp_path, [1]), "nope", tmp_path / "c.csv")


# -- scenarios ----------------------------------------------------------------

def test_scenario_validation():
    with pytest.raises(ConfigError):
        validate_scenario({"name": "x", "kind": "nope"})
    with pytest.raises(ConfigError):
        validate_scenario({"kind": "estimator"})
    with pytest.raises(ConfigError):
        validate_scenario({"name": "x", "kind": "estimator"})  # topology missing


SYNTH = {"synth": {"n_isds": 2, "cores_per_isd": 2, "noncore_per_isd": 4,
                   "extra_core_links": 1, "multihome_prob": 0.5, "n_peering": 1,
                   "core_full_mesh": True, "seed": 5}}


def test_estimator_scenario_ground_truth(tmp_path):
    scenario = {"name": "est", "kind": "estimator", "seed": 3, "topology": SYNTH,
                "pairs": 4, "paths_per_pair": 3}
    manifest = run_scenario(scenario, tmp_path)
    rows = _read_csv(tmp_path / "estimator.csv")
    assert rows, "estimator scenario produced no rows"
    # advertised values from ground truth are never undercut by experienced
    assert all(r["violation"] == "0" for r in rows)
    assert "estimator.csv" in manifest["outputs"]


def test_estimator_scenario_measured(tmp_path):
    scenario = {"name": "est-m", "kind": "estimator", "seed": 3, "topology": SYNTH,
                "pairs": 3, "paths_per_pair": 2, "advertised": "measured",
                "measure": {"duration_s": 2.0, "interval_ms": 250.0}}
    run_scenario(scenario, tmp_path)
    assert (tmp_path / "estimator.csv").exists()


def test_reduction_scenario(tmp_path):
    scenario = {"name": "red", "kind": "reduction", "seed": 4, "topology": SYNTH,
                "pairs": 6}
    run_scenario(scenario, tmp_path)
    rows = _read_csv(tmp_path / "reduction.csv")
    assert rows
    for r in rows:
        assert float(r["best_ms"]) <= float(r["default_ms"]) + 1e-9
    assert (tmp_path / "reduction_cdf.csv").exists()


def test_probing_scenario(tmp_path):
    scenario = {"name": "prb", "kind": "probing", "seed": 5, "topology": SYNTH,
                "pairs": 4}
    run_scenario(scenario, tmp_path)
    rows = _read_csv(tmp_path / "probing.csv")
    assert rows
    for r in rows:
        assert r["argmin_match"] == "1"
        assert int(r["efficient_probes"]) <= int(r["exhaustive_probes"])


def test_cca_sweep_scenario(tmp_path):
    scenario = {"name": "cca", "kind": "cca_sweep", "seed": 1,
                "cca": {"flows": 4, "duration_s": 4.0, "warmup_s": 1.0,
                        "n_bbr": [0, 2, 4], "variants": ["standard"]}}
    run_scenario(scenario, tmp_path)
    rows = _read_csv(tmp_path / "cca_sweep.csv")
    assert [r["n_bbr"] for r in rows] == ["0", "2", "4"]
    assert float(rows[0]["bbr_share"]) == 0.0
    assert float(rows[-1]["bbr_share"]) == 1.0
    assert (tmp_path / "cca_flows.csv").exists()


def test_bgp_compare_scenario(tmp_path):
    scenario = {"name": "cmp", "kind": "bgp_compare", "seed": 6, "topology": SYNTH,
                "bgp": {"announcers": 2, "probes": 5}}
    run_scenario(scenario, tmp_path)
    rows = _read_csv(tmp_path / "bgp_compare.csv")
    assert rows
    assert (tmp_path / "bgp_compare_cdf.csv").exists()


def test_reproducibility_byte_identical(tmp_path):
    scenario = {"name": "rep", "kind": "reduction", "seed": 9, "topology": SYNTH,
                "pairs": 5}
    m1 = run_scenario(scenario, tmp_path / "a")
    m2 = run_scenario(scenario, tmp_path / "b")
    assert m1["outputs"] == m2["outputs"]
    assert (tmp_path / "a" / "reduction.csv").read_bytes() == \
        (tmp_path / "b" / "reduction.csv").read_bytes()
    assert m1["config_sha256"] == m2["config_sha256"]


def test_manifest_names_config_hash(tmp_path):
    scenario = {"name": "man", "kind": "reduction", "seed": 2, "topology": SYNTH,
                "pairs": 2}
    manifest = run_scenario(scenario, tmp_path)
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk["config_sha256"] == manifest["config_sha256"]
    assert set(on_disk["outputs"]) == {"reduction.csv", "reduction_cdf.csv"}


# -- CAIDA import -------------------------------------------------------------

REL_GEO = """# test data
1|2|p2p|10.0,20.0
1|3|p2p|11.0,21.0
2|3|0|12.0,22.0
1|4|-1|10.5,20.5
2|5|p2c|12.5,22.5
4|6|p2c|10.7,20.7
"""


def test_import_caida_basic():
    topo, report = import_caida(REL_GEO)
    assert report.n_ases == 6
    assert report.n_core == 3
    core = {a.as_num for a in topo.core_ases()}
    assert core == {1, 2, 3}
    kinds = {l.kind for l in topo.links}
    assert kinds == {"core", "parent_child"}
    topo.validate()
    assert load_topology(topo.serialize()).serialize() == topo.serialize()


def test_import_caida_drop_unreachable():
    text = REL_GEO + "7|8|p2p|0.0,0.0\n"  # island pair, no provider chain
    with pytest.raises(Exception):
        import_caida(text)
    topo, report = import_caida(text, drop_unreachable=True)
    assert report.n_dropped_unreachable == 2
    assert len(topo.ases) == 6


def test_import_caida_prune():
    topo, report = import_caida(REL_GEO, prune_to=4, drop_unreachable=True)
    assert len(topo.ases) <= 4


def test_import_caida_bad_records():
    with pytest.raises(TopologyParseError):
        import_caida("1|2\n")
    with pytest.raises(TopologyParseError):
        import_caida("1|2|sibling|0,0\n")
    with pytest.raises(TopologyParseError):
        import_caida("1|1|p2p|0,0\n")


# -- CLI ----------------------------------------------------------------------

def test_cli_end_to_end(tmp_path):
    topo_file = tmp_path / "topo.txt"
    assert main(["gen-topology", "--seed", "5", "--isds", "2", "--cores", "2",
                 "--noncore", "3", "--core-full-mesh", "--out", str(topo_file)]) == 0
    store_file = tmp_path / "store.txt"
    assert main(["beacon", "--topology", str(topo_file), "--out", str(store_file)]) == 0
    paths_csv = tmp_path / "paths.csv"
    assert main(["paths", "--topology", str(topo_file), "--store", str(store_file),
                 "--src", "1-3", "--dst", "2-3", "--out", str(paths_csv)]) == 0
    rows = _read_csv(paths_csv)
    assert rows and set(rows[0]) == {"path_id", "hop_string", "total_min_ms", "completeness"}
    probe_csv = tmp_path / "probe.csv"
    assert main(["probe", "--topology", str(topo_file), "--store", str(store_file),
                 "--src", "1-3", "--dst", "2-3", "--out", str(probe_csv)]) == 0
    rows = _read_csv(probe_csv)
    assert [r["algorithm"] for r in rows] == ["efficient", "exhaustive"]
    cdf_out = tmp_path / "cdf.csv"
    assert main(["cdf", "--input", str(paths_csv), "--column", "total_min_ms",
                 "--out", str(cdf_out)]) == 0


def test_cli_cca_run(tmp_path):
    out = tmp_path / "cca.csv"
    assert main(["cca", "run", "--n-bbr", "1", "--flows", "2", "--duration", "3.0", "--warmup", "1.0",
                 "--out", str(out), "--seed", "2"]) == 0
    rows = _read_csv(out)
    assert len(rows) == 2


def test_cli_compare(tmp_path):
    topo_file = tmp_path / "topo.txt"
    main(["gen-topology", "--seed", "6", "--isds", "1", "--cores", "2",
          "--noncore", "3", "--out", str(topo_file)])
    topo = load_topology(topo_file.read_text())
    core = topo.core_ases()[0]
    leaf = sorted(a for a in topo.ases if not topo.ases[a].is_core)[0]
    probes = tmp_path / "probes.txt"
    servers = tmp_path / "servers.txt"
    probes.write_text(f"probe p0 {leaf} 0.0 0.0\n")
    servers.write_text(f"server s0 {core} 0.0 1.0\n")
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--topology", str(topo_file), "--probes", str(probes),
                 "--servers", str(servers), "--out", str(out)]) == 0
    assert _read_csv(out)


def test_cli_run_scenario(tmp_path):
    topo_file = tmp_path / "topo.txt"
    main(["gen-topology", "--seed", "5", "--isds", "1", "--cores", "2",
          "--noncore", "4", "--out", str(topo_file)])
    scenario = {"name": "cli-red", "kind": "reduction", "seed": 2,
                "topology": {"file": str(topo_file)}, "pairs": 3}
    scen_file = tmp_path / "scenario.json"
    scen_file.write_text(json.dumps(scenario))
    out_dir = tmp_path / "out"
    assert main(["run", str(scen_file), "--out", str(out_dir)]) == 0
    assert (out_dir / "manifest.json").exists()


def test_cli_exit_codes(tmp_path):
    assert main(["paths", "--topology", "/nonexistent", "--src", "1-1", "--dst", "1-2"]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "kind": "bogus"}))
    assert main(["run", str(bad)]) == 1
    assert main(["cca", "run", "--n-bbr", "nope"]) == 1  # argparse error -> config


def test_cli_import_caida(tmp_path):
    rel = tmp_path / "rel.txt"
    rel.write_text(REL_GEO)
    out = tmp_path / "topo.txt"
    assert main(["import-caida", "--input", str(rel), "--out", str(out)]) == 0
    topo = load_topology(out.read_text())
    assert len(topo.ases) == 6
