from __future__ import annotations

import json

import pytest

from sturm_attractor import InconsistencyError, SturmData
from sturm_attractor.cli import main
from sturm_attractor.config import ConfigError, apply_overrides, load_config, parse_config
from sturm_attractor.serialize import fmt_float, read_csv, write_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- configuration ---------------------------------------------------------------------


def test_parse_defaults():
    cfg = parse_config({"problem": {"params": {"lambda": 2.0}}})
    assert cfg.family == "chafee_infante"
    assert cfg.sim is None
    assert cfg.formats == ("json", "csv", "dot")
    assert cfg.spec().params["lambda"] == 2.0


@pytest.mark.parametrize(
    "raw,key",
    [
        ({"problem": {"params": {"lambda": 2}}, "extra": 1}, "extra"),
        ({"problem": {"family": "chafee_infante", "colour": 1}}, "colour"),
        ({"problem": {"params": {"lambda": 2}}, "sim": {"mm": 3}}, "mm"),
        ({"problem": {"params": {"lambda": 2}}, "sim": {"dropping": {"pair": 3}}}, "pair"),
        ({"problem": {"params": {"lambda": 2}}, "shooting": {"rtoll": 1e-9}}, "rtoll"),
        ({"problem": {"params": {"lambda": 2}}, "sim": {"m": "big"}}, "sim.m"),
        ({"problem": {"params": {"lambda": 2}}, "sim": {"probes": [{"source": 3, "mode": 1, "sign": 2}]}}, "sign"),
        ({"problem": {"params": {"lambda": 2}}, "output": {"formats": ["png"]}}, "formats"),
        ({"problem": {"params": {"lambda": -2}}}, "lambda"),
        ({"shooting": {}}, "problem"),
    ],
)
def test_parse_rejects_and_names_key(raw, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(raw)


def test_overrides():
    raw = apply_overrides({"problem": {"family": "chafee_infante"}}, ["λ=5", "sim.m=129", "output.formats=[csv]"])
    assert raw["problem"]["params"]["lambda"] == 5
    cfg = parse_config(raw)
    assert cfg.sim.m == 129 and cfg.formats == ("csv",)
    with pytest.raises(ConfigError):
        apply_overrides({}, ["lambda"])


def test_yaml_and_json_files_agree(tmp_path):
    y = tmp_path / "run.yaml"
    y.write_text("problem:\n  params: {lambda: 2.0}\nsim:\n  probes: [{source: 3, mode: 1, sign: -1}]\n")
    j = tmp_path / "run.json"
    j.write_text(json.dumps({"problem": {"params": {"lambda": 2.0}}, "sim": {"probes": [{"source": 3, "mode": 1, "sign": -1}]}}))
    a, b = load_config(y), load_config(j)
    assert a == b
    assert a.sim.probes[0].sign == -1


# -- serialization -----------------------------------------------------------------------


def test_csv_floats_round_trip(tmp_path):
    vals = [0.1, 1 / 3, -0.800780775775786, 2.0**-1074, 1e300]
    p = write_csv(tmp_path / "t.csv", ["v"], [[v] for v in vals])
    _, rows = read_csv(p)
    assert [float(r[0]) for r in rows] == vals
    assert fmt_float(0.1) == "0.10000000000000001"


# -- commands ----------------------------------------------------------------------------


def test_equilibria_command(tmp_path, capsys):
    code, out, _ = run(capsys, "equilibria", "--param", "lambda=0.5", "--out", str(tmp_path))
    assert code == 0
    header, rows = read_csv(tmp_path / "equilibria.csv")
    assert header[0] == "id" and len(rows) == 3
    doc = json.loads((tmp_path / "equilibria.json").read_text())
    assert [e["morse"] for e in doc["equilibria"]] == [0, 1, 0]
    assert (tmp_path / "curve.csv").exists()


def test_permutation_command(tmp_path, capsys, ci):
    code, _, _ = run(capsys, "permutation", "--param", "lambda=2", "--out", str(tmp_path))
    assert code == 0
    header, rows = read_csv(tmp_path / "equilibria.csv")
    assert [int(r[header.index("morse")]) for r in rows] == [0, 1, 2, 1, 0]
    text = (tmp_path / "sturm.json").read_text()
    data = SturmData.from_json(text)
    assert data == ci(2.0)[3]
    assert data.sigma == (1, 4, 3, 2, 5)
    # file floats read back to the exact in-memory doubles
    assert [float(r[1]) for r in rows] == list(data.a)


@pytest.mark.parametrize("lam,nodes,hasse,edges", [(0.5, 3, 2, 2), (2.0, 5, 6, 8), (5.0, 7, 10, None)])
def test_attractor_command(tmp_path, capsys, lam, nodes, hasse, edges):
    code, _, _ = run(capsys, "attractor", "--param", f"lambda={lam}", "--out", str(tmp_path))
    assert code == 0
    dot = (tmp_path / "attractor.dot").read_text()
    assert dot.count("[label=") == nodes
    assert dot.count("style=solid") == hasse
    doc = json.loads((tmp_path / "graph.json").read_text())
    assert sum(e["hasse"] for e in doc["edges"]) == hasse
    if edges is not None:
        assert len(doc["edges"]) == edges


def test_malformed_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("problem:\n  params: {lambda: 2}\nsim:\n  tmax: 3\n")
    code, _, err = run(capsys, "attractor", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 1
    assert "tmax" in err
    cfg.write_text("problem: [unclosed\n")
    code, _, err = run(capsys, "equilibria", "--config", str(cfg))
    assert code == 1 and "cannot parse" in err


def test_verify_without_sim_exit_1(tmp_path, capsys):
    code, _, err = run(capsys, "verify", "--param", "lambda=2", "--out", str(tmp_path))
    assert code == 1
    assert "verification requires a simulable spec" in err


def test_non_hyperbolic_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "equilibria", "--param", "lambda=1", "--out", str(tmp_path))
    assert code == 2
    assert "non-hyperbolic" in err


def test_inconsistent_graph_exit_3(tmp_path, capsys, monkeypatch):
    import sturm_attractor.connectome as connectome

    def broken(data, eqs=None):
        raise InconsistencyError("routes disagree", {(3, 2)}, set(), {"edge": "e3->e2"})

    monkeypatch.setattr(connectome, "build_connection_graph", broken)
    code, _, err = run(capsys, "attractor", "--param", "lambda=2", "--out", str(tmp_path))
    assert code == 3
    assert "e3->e2" in err
    doc = json.loads((tmp_path / "inconsistency.json").read_text())
    assert doc["only_direct"] == [[3, 2]]


def test_unresolved_probe_exit_4(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "verify",
        "--param", "lambda=2",
        "--param", "problem.family=chafee_infante_semilinear",
        "--param", "sim.t_max=0.5",
        "--param", "sim.m=65",
        "--param", "sim.dropping.pairs=0",
        "--param", "sim.probes=[{source: 3, mode: 0, sign: 1}]",
        "--out", str(tmp_path),
    )
    assert code == 4
    assert "unresolved" in out
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["unresolved"][0]["source"] == 3


def test_verify_semilinear_probes(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "verify",
        "--param", "lambda=2",
        "--param", "problem.family=chafee_infante_semilinear",
        "--param", "sim.m=129",
        "--param", "sim.dropping={pairs: 2, t_end: 1.0, pool: 3}",
        "--param", "sim.probes=[{source: 3, mode: 1, sign: 1}, {source: 3, mode: 1, sign: -1}]",
        "--out", str(tmp_path),
    )
    assert code == 0, out
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert sorted(p["target"] for p in doc["probes"]) == [2, 4]
    assert all(p["pass"] and p["z_consistent"] for p in doc["probes"])


def test_simulate_writes_trajectory(tmp_path, capsys):
    code, out, _ = run(
        capsys,
        "simulate",
        "--param", "lambda=2",
        "--param", "sim.m=33",
        "--param", "sim.t_end=1.0",
        "--param", "sim.snap_dt=0.5",
        "--out", str(tmp_path),
    )
    assert code == 0
    header, rows = read_csv(tmp_path / "trajectory.csv")
    assert header[:2] == ["t", "u0"] and len(header) == 34
    assert [float(r[0]) for r in rows] == [0.0, 0.5, 1.0]
    assert "nearest e" in out
