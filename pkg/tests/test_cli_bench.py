import csv
import json

import pytest

from fibm.bench import RunReport, cmd_report, cmd_select, cmd_sweep, MissingArtifacts
from fibm.cli import main
from fibm.config import ConfigError, RunConfig, parse_grid, read_config_file


def karate_args(karate_paths, out, *extra):
    g, c = karate_paths
    return ["--graph", str(g), "--communities", str(c), "--negative-seeds", "ids:33", "--k", "3",
            "--vrr-samples", "100", "--repetitions", "2", "--out", str(out), *extra]


def test_parse_grid():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("0.5, 0") == [0.0, 0.5]
    assert len(parse_grid("0:1:0.01")) == 101
    for bad in ("0:1:0", "1:0:0.1", "0:2:0.5", "x"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_config_file_and_flag_precedence(write, tmp_path):
    path = write("run.cfg", "# demo\ngraph = g.txt\nk = 7\nvrr.samples_per_root = 40\nseed = 9\nselector = fc\n")
    values = read_config_file(path)
    cfg = RunConfig(**values)
    assert (cfg.k, cfg.samples_per_root, cfg.rng_seed, cfg.selector) == (7, 40, 9, "fc")
    assert cfg.with_overrides(k=2, beta=None).k == 2
    with pytest.raises(ConfigError):
        read_config_file(write("bad.cfg", "nope = 1\n"))
    with pytest.raises(ConfigError):
        RunConfig(alpha=1.0)
    with pytest.raises(ConfigError):
        RunConfig(negative_seeds="random:3")


def test_exit_codes(karate_paths, tmp_path, write, capsys):
    assert main(["select", "--k", "-2"]) == 1
    assert main(["select", "--graph", str(write("e.txt", "# empty\n"))]) == 1
    assert main(["report", str(tmp_path / "nothing")]) == 3
    assert "select_*.json" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["select", "--selector", "bogus"])
    assert exc.value.code == 1
    assert main(["select", *karate_args(karate_paths, tmp_path / "ok")]) == 0


def test_validate_chain(write, tmp_path):
    g = write("chain.txt", "0 1\n1 2\n")
    args = ["--graph", str(g), "--directed", "--negative-seeds", "ids:0", "--vrr-samples", "50",
            "--mc-runs", "500", "--out", str(tmp_path / "v")]
    assert main(["validate", *args]) == 0
    report = json.loads((tmp_path / "v" / "validate.json").read_text())
    assert report["passed"] and all(c["passed"] for c in report["checks"])
    assert main(["validate", *args, "--inject-fault"]) == 2


def test_select_chain_report(write, tmp_path):
    g = write("chain.txt", "A B\nB C\n")
    cfg = RunConfig(graph=str(g), directed=True, negative_seeds="ids:A", k=1, samples_per_root=20,
                    repetitions=1, out=str(tmp_path))
    report = cmd_select(cfg)
    assert report.repetitions[0]["seeds"] == ["B"]
    assert report.averages["F"] == pytest.approx(2 / 3)
    empty = cmd_select(cfg.with_overrides(k=0))
    assert empty.averages["F"] == 0.0 and empty.averages["W"] == 0.0


def test_reports_are_byte_deterministic(karate_paths, tmp_path):
    out = tmp_path / "run"
    snapshots = []
    for _ in range(2):
        assert main(["sample", *karate_args(karate_paths, out)]) == 0
        assert main(["select", *karate_args(karate_paths, out, "--beta", "0.5")]) == 0
        assert main(["sweep", *karate_args(karate_paths, out, "--beta-grid", "0:1:0.5")]) == 0
        assert main(["report", str(out)]) == 0
        snapshots.append({p.name: p.read_bytes() for p in out.iterdir() if not p.name.endswith(".timing.json")})
    assert "pareto.csv" in snapshots[0] and any(f.endswith(".vrr") for f in snapshots[0])
    assert snapshots[0] == snapshots[1]


def test_report_round_trip_and_averages(karate_paths, tmp_path):
    g, c = karate_paths
    cfg = RunConfig(graph=str(g), communities=str(c), negative_seeds="ids:33", k=3, samples_per_root=100,
                    repetitions=3, beta=0.5, out=str(tmp_path))
    report = cmd_select(cfg)
    back = RunReport.from_json((tmp_path / "select_celf-r_fibm_beta0.5.json").read_text())
    assert back.averages == report.averages
    assert back.config["k"] == 3 and back.version and back.schema == 1
    for key in ("F", "W", "K"):
        vals = [r["final"][key] for r in report.repetitions]
        assert report.averages[key] == pytest.approx(sum(vals) / len(vals), abs=1e-15)
    assert [r["rng_seed"] for r in report.repetitions] == [0, 1, 2]
    with open(tmp_path / "select_celf-r_fibm_beta0.5.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["F"]) for r in rows] == [r["final"]["F"] for r in report.repetitions]


def test_report_csvs(karate_paths, tmp_path):
    g, c = karate_paths
    base = RunConfig(graph=str(g), communities=str(c), negative_seeds="ids:33", k=3, samples_per_root=100,
                     repetitions=1, beta=0.5, out=str(tmp_path))
    cmd_select(base)
    cmd_select(base.with_overrides(selector="fc"))
    cmd_report(tmp_path)
    with open(tmp_path / "psi.csv") as fh:
        psi = [r for r in csv.DictReader(fh) if r["selector"] == "celf-r"]
    assert [int(r["k"]) for r in psi] == [1, 2, 3]
    assert all(float(b["psi"]) >= float(a["psi"]) for a, b in zip(psi, psi[1:]))
    with open(tmp_path / "evals.csv") as fh:
        ev = list(csv.DictReader(fh))
    lazy = [int(r["evaluations"]) for r in ev if r["selector"] == "celf-r"]
    full = [int(r["evaluations"]) for r in ev if r["selector"] == "fc"]
    assert len(lazy) == len(full) == 3 and all(a <= b for a, b in zip(lazy, full))


def test_sweep_grid_zero_and_front(karate_paths, tmp_path):
    g, c = karate_paths
    cfg = RunConfig(graph=str(g), communities=str(c), negative_seeds="ids:33", k=3, samples_per_root=200,
                    repetitions=1, beta_grid="0", out=str(tmp_path))
    assert len(cmd_sweep(cfg).pareto) == 1
    report = cmd_sweep(cfg.with_overrides(beta_grid="0:1:0.1"))
    distinct = {(p["F"], p["W"]) for p in report.pareto if not p["dominated"]}
    assert len(distinct) >= 2


def test_missing_artifacts(tmp_path):
    with pytest.raises(MissingArtifacts, match="sweep_"):
        cmd_report(tmp_path)
