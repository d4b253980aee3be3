from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import pytest

from varpo.cli import main
from varpo.config import ConfigError, build_config
from varpo.report import CSV_HEADER, HIST_HEADER
from varpo.scenario import load_scenario, write_scenario


def write(path, text):
    path.write_text(text)
    return str(path)


def run(argv, capsys=None):
    code = main(argv)
    out = capsys.readouterr() if capsys is not None else None
    return code, out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestExitCodes:
    def test_unknown_key(self, tmp_path, capsys):
        cfg = write(tmp_path / "c.ini", "[bandit3]\nepsilonn = 0.1\n")
        code, out = run(["bandit3", "--config", cfg], capsys)
        assert code == 2 and "epsilonn" in out.err

    def test_unknown_section(self, tmp_path, capsys):
        cfg = write(tmp_path / "c.ini", "[banditt]\nepsilon = 0.1\n")
        assert run(["bandit3", "--config", cfg], capsys)[0] == 2

    def test_bad_value(self, tmp_path, capsys):
        cfg = write(tmp_path / "c.ini", "[run]\ntrials = 0\n")
        assert run(["risk", "--config", cfg], capsys)[0] == 2

    def test_missing_file(self, tmp_path, capsys):
        assert run(["risk", "--config", str(tmp_path / "nope.ini")], capsys)[0] == 2

    def test_bad_cli_args(self, capsys):
        assert run(["nonexperiment"], capsys)[0] == 2
        assert run(["risk", "--format", "xml"], capsys)[0] == 2

    def test_numerical_failure_writes_partial_report(self, tmp_path, capsys):
        cfg = write(tmp_path / "c.ini",
                    "[rlhf-sim]\npopulation = 2\niterations = 50\nlearning_rate = 1e7\nranges =\n")
        out = tmp_path / "r.csv"
        code, _ = run(["rlhf-sim", "--config", cfg, "--out", str(out)], capsys)
        assert code == 3
        table = {r["metric"]: r["value"] for r in rows(out.read_text())}
        assert table["training_failed"] == "1" and table["failed_policy_index"] == "0"

    def test_check_failure(self, capsys):
        code, out = run(["stats-report", "--check"], capsys)
        assert code == 4
        assert "[FAIL] F_0.975(79,79)" in out.err and "[PASS] F = 6.33" in out.err

    def test_check_pass(self, capsys):
        code, out = run(["coverage", "--check", "--trials", "2000"], capsys)
        assert code == 0 and "[FAIL]" not in out.err


class TestOutput:
    def test_csv_schema(self, tmp_path, capsys):
        out = tmp_path / "a.csv"
        assert run(["bandit3", "--trials", "2000", "--seed", "3", "--out", str(out)], capsys)[0] == 0
        text = out.read_text()
        assert text.splitlines()[0] == ",".join(CSV_HEADER)
        table = rows(text)
        assert table[0]["metric"] == "config_hash" and len(table[0]["value"]) == 16
        assert all(r["experiment"] == "bandit3" and r["seed"] == "3" for r in table)
        ref = next(r for r in table if r["metric"] == "reference_return")
        assert ref["std_error"] == "exact" and abs(float(ref["value"]) - 1.48333) < 1e-4
        mc = next(r for r in table if r["metric"] == "mc_risk_vanilla")
        assert float(mc["std_error"]) >= 0 and mc["n"] == "2000"

    def test_histograms(self, tmp_path, capsys):
        out = tmp_path / "a.csv"
        run(["bandit3", "--trials", "1000", "--out", str(out)], capsys)
        for name in ("return_vanilla", "return_variance_aware"):
            h = tmp_path / f"a.{name}.hist.csv"
            lines = h.read_text().splitlines()
            assert lines[0] == ",".join(HIST_HEADER)
            assert sum(int(l.split(",")[2]) for l in lines[1:]) == 1000

    def test_json_mirrors_csv(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "a.json"
        run(["coverage", "--trials", "500", "--out", str(a)], capsys)
        run(["coverage", "--trials", "500", "--out", str(b), "--format", "json"], capsys)
        doc = json.loads(b.read_text())
        table = rows(a.read_text())
        assert doc["config_hash"] == table[0]["value"]
        assert [r["metric"] for r in doc["records"]] == [r["metric"] for r in table]
        assert [str(r["n"]) for r in doc["records"]] == [r["n"] for r in table]

    def test_stdout_when_no_out(self, capsys):
        code, out = run(["stats-report"], capsys)
        assert code == 0 and out.out.startswith(",".join(CSV_HEADER))

    def test_byte_identical_reruns_and_workers(self, tmp_path, capsys, monkeypatch):
        outs = []
        for workers in ("1", "1", "3"):
            monkeypatch.setenv("VARPO_WORKERS", workers)
            p = tmp_path / f"r{len(outs)}.csv"
            run(["risk", "--trials", "20000", "--seed", "11", "--out", str(p)], capsys)
            outs.append(p.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_project_simplex_flag(self, tmp_path, capsys):
        p = tmp_path / "p.csv"
        run(["bandit3", "--trials", "1000", "--project-simplex", "--out", str(p)], capsys)
        table = {r["metric"]: r for r in rows(p.read_text())}
        assert table["analytic_risk_vanilla"]["value"] == "NA"


class TestConfig:
    def test_hash_ignores_key_order_and_out(self, tmp_path):
        a = write(tmp_path / "a.ini", "[run]\nseed = 5\n[bandit3]\nepsilon = 0.02\nbins = 10\n")
        b = write(tmp_path / "b.ini", "[bandit3]\nbins = 10\nepsilon = 0.02\n[run]\nseed = 5\n")
        ca = build_config("bandit3", a, out="x.csv")
        cb = build_config("bandit3", b, out="y.csv")
        assert ca.config_hash() == cb.config_hash()
        assert build_config("bandit3", a, seed=6).config_hash() != ca.config_hash()

    def test_cli_overrides_run_section(self, tmp_path):
        a = write(tmp_path / "a.ini", "[run]\nseed = 5\ntrials = 10\n")
        cfg = build_config("risk", a, seed=9)
        assert cfg.seed == 9 and cfg.trials == 10

    def test_seed_range(self):
        with pytest.raises(ConfigError):
            build_config("risk", seed=-1)
        assert build_config("risk", seed=2**64 - 1).seed == 2**64 - 1

    def test_defaults(self):
        assert build_config("bandit3").trials == 100_000
        assert build_config("fig-distribution").trials == 1000
        assert build_config("coverage").params["n"] == 9


class TestScenario:
    def test_csv_roundtrip_and_bandit(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        path.write_text("pair_id,r_star,sigma2\n0:0,1.0,2.25\n0:1,1.8,0.16\n0:2,1.65,0.09\n")
        sc = load_scenario(str(path))
        assert sc.mode == "gaussian" and sc.shape == (1, 3)
        cfg = write(tmp_path / "c.ini", f"[bandit3]\nscenario = {path}\n")
        out = tmp_path / "o.csv"
        assert run(["bandit3", "--config", cfg, "--trials", "500", "--out", str(out)], capsys)[0] == 0
        table = {r["metric"]: r["value"] for r in rows(out.read_text())}
        assert abs(float(table["reference_return"]) - 1.48333) < 1e-4

    def test_json_interval(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps([{"pair_id": "0:0", "a": 1, "b": 3},
                                    {"pair_id": "0:1", "a": 2, "b": 9}]))
        sc = load_scenario(str(path))
        assert sc.mode == "interval" and sc.first.tolist() == [[1.0, 2.0]]
        write_scenario(str(tmp_path / "t.json"), sc)
        again = load_scenario(str(tmp_path / "t.json"))
        assert again.second.tolist() == sc.second.tolist()

    def test_invalid(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("pair_id,r_star\n0:0,1.0\n")
        with pytest.raises(ConfigError):
            load_scenario(str(path))
        path.write_text("pair_id,r_star,sigma2\n0:0,1.0,1\n0:0,2.0,1\n")
        with pytest.raises(ConfigError):
            load_scenario(str(path))

    def test_missing_scenario_is_config_error(self, tmp_path, capsys):
        cfg = write(tmp_path / "c.ini", f"[risk]\nscenario = {tmp_path / 'none.csv'}\n")
        assert run(["risk", "--config", cfg], capsys)[0] == 2


def test_population_records(tmp_path, capsys):
    pop = tmp_path / "pop.json"
    cfg = write(tmp_path / "c.ini",
                f"[rlhf-sim]\npopulation = 3\niterations = 30\nranges =\npopulation_out = {pop}\n")
    assert run(["rlhf-sim", "--config", cfg, "--out", str(tmp_path / "r.csv")], capsys)[0] == 0
    recs = json.loads(pop.read_text())
    assert len(recs) == 6
    assert set(recs[0]) == {"method", "policy_index", "seed", "eval_return", "final_logits", "range_max"}
    assert {r["method"] for r in recs} == {"vanilla", "variance_aware"}


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "varpo", "stats-report"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("experiment,metric")
