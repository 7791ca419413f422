import json

import pytest

from composite_ccz import cli
from composite_ccz.textio import parse


def run_cli(capsys, *argv):
    code = cli.main(["--quiet" if a == "-q" else a for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsage:
    def test_no_command(self, capsys):
        assert run_cli(capsys)[0] == cli.EXIT_USAGE

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == cli.EXIT_USAGE

    @pytest.mark.parametrize("argv", [
        ["bound", "--p", "1.5"],
        ["bound", "--p", "abc"],
        ["montecarlo", "--shots", "0", "--p", "0.1"],
        ["enumerate-full", "--max-weight", "5"],
        ["export-circuit", "nonsense"],
    ])
    def test_bad_values(self, capsys, argv):
        assert run_cli(capsys, *argv)[0] == cli.EXIT_USAGE

    def test_montecarlo_needs_one_mode(self, capsys):
        code, _, err = run_cli(capsys, "montecarlo", "-q")
        assert code == cli.EXIT_USAGE and "exactly one" in err

    def test_version(self, capsys):
        assert run_cli(capsys, "--version")[0] == 0


class TestCommands:
    def test_bound(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--p", "0.01")
        rep = json.loads(out)
        assert code == 0
        assert rep["results"]["pfail_upper"] == pytest.approx(1 - 0.99**64)
        assert rep["results"]["linear_cap"] == pytest.approx(0.64)
        for key in ("circuit_hash", "seed", "version", "config", "report_hash"):
            assert key in rep

    def test_enumerate_round1(self, capsys):
        code, out, _ = run_cli(capsys, "enumerate-round1", "-q")
        res = json.loads(out)["results"]
        assert code == 0
        assert (res["w1_detected"], res["w2_accepted_error"], res["patterns"]) == (8, 28, 7)

    def test_enumerate_full_csv(self, capsys):
        code, out, _ = run_cli(capsys, "enumerate-full", "--max-weight", "2", "--format", "csv", "-q")
        lines = out.strip().splitlines()
        assert code == 0
        assert lines[0].startswith("weight,total,detected")
        assert lines[2].startswith("2,2016,2016")

    def test_montecarlo_fixed_weight(self, capsys):
        code, out, _ = run_cli(capsys, "montecarlo", "--fixed-weight", "4", "--shots", "20000", "-q")
        assert code == 0
        assert json.loads(out)["results"]["weight"] == 4

    def test_poly(self, capsys):
        code, out, _ = run_cli(capsys, "poly", "--p", "0.001", "0.002", "-q")
        res = json.loads(out)["results"]
        assert code == 0
        assert res["polynomial"]["distance"] == 4
        assert len(res["evaluations"]) == 2

    def test_verify_quick(self, capsys):
        code, out, err = run_cli(capsys, "verify", "--quick")
        assert code == 0
        assert all(g["passed"] for g in json.loads(out)["results"]["gadgets"])
        assert "composite-ccz" in err

    @pytest.mark.parametrize("name", sorted(cli.CIRCUITS))
    def test_export_circuit(self, capsys, name):
        code, out, _ = run_cli(capsys, "export-circuit", name)
        assert code == 0
        assert parse(out).instructions

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        assert run_cli(capsys, "bound", "--p", "0.1", "--output", str(path))[0] == 0
        assert json.loads(path.read_text())["command"] == "bound"

    def test_byte_identical_reports(self, capsys):
        a = run_cli(capsys, "montecarlo", "--p", "0.02", "--shots", "5000", "--seed", "3", "-q")[1]
        b = run_cli(capsys, "montecarlo", "--p", "0.02", "--shots", "5000", "--seed", "3",
                    "--workers", "2", "-q")[1]
        ja, jb = json.loads(a), json.loads(b)
        assert ja["results"] == jb["results"]
        again = run_cli(capsys, "montecarlo", "--p", "0.02", "--shots", "5000", "--seed", "3", "-q")[1]
        assert again == a

    def test_checkpoint_dir_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_CHECKPOINT_DIR, str(tmp_path))
        code = run_cli(capsys, "enumerate-full", "--max-weight", "1", "--checkpoint", "ck.jsonl", "-q")[0]
        assert code == 0 and (tmp_path / "ck.jsonl").exists()

    def test_corrupt_checkpoint(self, capsys, tmp_path):
        path = tmp_path / "ck.jsonl"
        path.write_text("garbage\n")
        code, _, err = run_cli(capsys, "enumerate-full", "--max-weight", "1", "--checkpoint", str(path), "-q")
        assert code == cli.EXIT_USAGE and "header" in err


class TestDeviation:
    def test_structural_deviation_exits_one(self, capsys, monkeypatch):
        monkeypatch.setattr(cli, "ROUND1_PATTERNS", 6)
        code, out, err = run_cli(capsys, "enumerate-round1", "-q")
        assert code == cli.EXIT_DEVIATION
        assert json.loads(out)["status"] == "deviation"
        assert "DEVIATION" in err


class TestReports:
    def test_hash_stable_and_sensitive(self):
        from composite_ccz.reports import make_report

        a = make_report("x", {"seed": 1}, {"n": 3}, "abc")
        b = make_report("x", {"seed": 1}, {"n": 3}, "abc")
        c = make_report("x", {"seed": 1}, {"n": 4}, "abc")
        assert a["report_hash"] == b["report_hash"] != c["report_hash"]
        assert "timestamp" not in a

    def test_numpy_values_serialize(self):
        import numpy as np

        from composite_ccz.reports import make_report, to_json

        rep = make_report("x", {"seed": np.int64(2)}, {"v": np.float64(0.5), "t": (1, 2)})
        assert json.loads(to_json(rep))["results"] == {"t": [1, 2], "v": 0.5}

    def test_csv_key_value(self):
        from composite_ccz.reports import make_report, to_csv

        text = to_csv(make_report("bound", {"seed": 0}, {"p": 0.1, "nested": {"a": 1}}))
        assert "nested.a,1" in text.splitlines()
