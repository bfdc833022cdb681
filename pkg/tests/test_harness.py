import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from vcdas import cli, harness
from vcdas.geometry import Topology
from vcdas.harness import ConfigError, ExperimentConfig


def small(**kw):
    base = dict(K=8, L=16, V=(1, 2), n_topologies=4, n_fading_samples=1000, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_topologies_shared_across_runners():
    cfg = small()
    assert harness.topology(cfg, 2) == harness.topology(small(mode="group"), 2)
    assert harness.topology(cfg, 2) != harness.topology(cfg, 3)


def test_mrt_sweep_deterministic():
    a = harness.run_mrt_sweep(small())
    b = harness.run_mrt_sweep(small())
    assert a == b
    assert [r["v"] for r in a] == [1, 2]
    assert all(r["upper_bound"] > 0 for r in a)


def test_worker_count_does_not_change_results():
    cfg = small()
    np.testing.assert_array_equal(harness.mrt_rates(cfg, workers=1), harness.mrt_rates(cfg, workers=2))
    g1 = harness.grouping_stats(small(mode="group"), workers=1)
    g2 = harness.grouping_stats(small(mode="group"), workers=2)
    np.testing.assert_array_equal(g1, g2)


def test_worker_env(monkeypatch):
    monkeypatch.setenv(harness.WORKERS_ENV, "3")
    assert harness.worker_count() == 3
    monkeypatch.setenv(harness.WORKERS_ENV, "x")
    with pytest.raises(ConfigError):
        harness.worker_count()


def test_single_topology_closed_form_vs_mc():
    rows = harness.run_single_topology(small(K=6, L=12, V=(1, 3), n_fading_samples=20_000))
    assert len(rows) == 12
    for r in rows:
        assert abs(r["closed_form"] - r["mc"]) < 4 * r["mc_stderr"] + 1e-3


def test_rate_depends_on_topology_seed():
    a = harness.run_single_topology(small(K=6, L=12, V=(2,), seed=1))
    b = harness.run_single_topology(small(K=6, L=12, V=(2,), seed=2))
    assert any(abs(x["closed_form"] - y["closed_form"]) > 3 * (x["mc_stderr"] + y["mc_stderr"])
               for x, y in zip(a, b))


def test_comparison_rows_are_paired():
    rows = harness.run_comparison(small(mode="compare", V=(2,), n_topologies=2))
    assert len(rows) == 16
    assert {r["topology"] for r in rows} == {0, 1}


def test_csv_format():
    text = harness.run(small())
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == harness.COLUMNS["mrt"]
    assert len(rows) == 3
    assert all(len(r) == 5 for r in rows)
    # ten significant digits
    assert len(rows[1][1].replace(".", "").lstrip("0")) <= 10


def test_json_format():
    doc = json.loads(harness.run(small(fmt="json", mode="vstar", K=50, L=1000)))
    assert doc["rows"][0]["v_integer"] == 4 and doc["rows"][0]["v_rule"] == 4
    assert doc["config"]["K"] == 50


@pytest.mark.parametrize("kw", [dict(K=0), dict(V=(20,)), dict(alpha=2.0), dict(snr_db=float("nan")),
                                dict(n_topologies=0), dict(seed=-1), dict(fmt="xml"),
                                dict(mode="bound", n_fading_samples=10), dict(mode="nope")])
def test_config_errors(kw):
    with pytest.raises(ConfigError):
        small(**kw).validate()


def test_cli_vstar(capsys):
    assert cli.main(["vstar", "--k", "50", "--l", "2500"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "k,l,v_exact,v_integer,mean_nn_distance,v_rule"
    assert out[1].split(",")[3] == "10"


def test_cli_config_error_exit_code(capsys):
    assert cli.main(["mrt-sweep", "--k", "5", "--l", "3", "--v", "4"]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_v_range():
    assert cli.parse_v("2..5") == (2, 3, 4, 5)
    assert cli.parse_v("7") == (7,)
    with pytest.raises(Exception):
        cli.parse_v("5..2")


def test_cli_out_file_and_topo_dump(tmp_path):
    out = tmp_path / "t.json"
    assert cli.main(["topo-dump", "--k", "4", "--l", "6", "--seed", "9", "--out", str(out)]) == 0
    topo = Topology.from_json(out.read_text())
    assert topo == harness.topology(small(K=4, L=6, seed=9), 0)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "vcdas", "vstar", "--k", "50", "--l", "100"],
                       capture_output=True, text=True, check=True)
    assert r.stdout.startswith("k,l,")
