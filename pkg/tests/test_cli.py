import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from matchpoly.cli import main
from matchpoly.core import complete_graph, make_sym_zero, num_pairs, packed_index, save_matrix
from matchpoly.polytope import barycenter


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    payload = json.loads(out)
    assert set(payload["manifest"]) == {"command", "parameters", "seed", "version", "timestamp", "inputs"}
    return payload["result"], payload["manifest"]


@pytest.fixture
def files(tmp_path):
    up = [0] * num_pairs(6)
    for i, j in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]:
        up[packed_index(i, j, 6)] = Fraction(1, 2)
    paths = {
        "bary": tmp_path / "bary.json",
        "triangles": tmp_path / "triangles.json",
        "k6": tmp_path / "k6.csv",
        "bad": tmp_path / "bad.json",
    }
    save_matrix(barycenter(6), paths["bary"])
    save_matrix(make_sym_zero(6, up), paths["triangles"])
    save_matrix(complete_graph(6).to_float(), paths["k6"])
    paths["bad"].write_text("{not json")
    return {k: str(v) for k, v in paths.items()}


class TestFormulas:
    def test_n3(self, capsys):
        result, man = run_json(capsys, "formulas", "--n", "3")
        assert [r["k"] for r in result["rows"]] == [2, 3]
        assert result["rows"][0]["haf_exact"] == "9/5"
        assert result["rows"][1]["haf_float"] == pytest.approx(0.12)
        assert result["chain"]["holds"] is True
        assert man["command"] == "formulas" and man["parameters"]["n"] == 3

    def test_n2_float_regime(self, capsys):
        result, _ = run_json(capsys, "--regime", "float", "formulas", "--n", "2")
        assert result["chain"]["middle"] == pytest.approx(1 / 3)

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "formulas", "--n", "3", "--format", "csv")
        assert code == 0
        lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert any(ln.startswith("# seed") for ln in out.splitlines())
        rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
        assert [r["haf_exact"] for r in rows] == ["9/5", "3/25"]

    def test_table(self, capsys):
        code, out, _ = run(capsys, "formulas", "--n", "3", "--format", "table")
        assert code == 0 and "3/25" in out and out.startswith("# formulas")

    @pytest.mark.parametrize("argv", [["--n", "1"], ["--n", "3", "--k-range", "2:5"], ["--n", "3", "--k-range", "x"]])
    def test_usage_errors(self, capsys, argv):
        code, _, err = run(capsys, "formulas", *argv)
        assert code == 1 and "usage error" in err

    def test_quiet(self, capsys):
        code, out, _ = run(capsys, "formulas", "--n", "3", "--quiet")
        assert code == 0 and out == ""


class TestMember:
    def test_barycenter(self, capsys, files):
        result, man = run_json(capsys, "member", "--matrix", files["bary"])
        assert result["member"] is True and result["order"] == 6
        assert len(man["inputs"][files["bary"]]) == 64

    def test_triangles(self, capsys, files):
        code, out, _ = run(capsys, "member", "--matrix", files["triangles"])
        assert code == 2
        violations = json.loads(out)["result"]["violations"]
        assert violations[0] == {"subset": [0, 1, 2], "excess": 1.0}

    def test_malformed(self, capsys, files):
        code, _, err = run(capsys, "member", "--matrix", files["bad"])
        assert code == 1 and "error" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "member", "--matrix", str(tmp_path / "nope.json"))
        assert code == 1

    def test_csv_output(self, capsys, files):
        code, out, _ = run(capsys, "member", "--matrix", files["triangles"], "--format", "csv")
        assert code == 2
        rows = list(csv.DictReader(ln for ln in out.splitlines() if not ln.startswith("#")))
        assert rows[0]["kind"] == "odd_set"


class TestMinimize:
    def test_n2(self, capsys):
        result, man = run_json(capsys, "minimize", "--n", "2", "--k", "2", "--seed", "3")
        assert result["best_value"] == pytest.approx(1 / 3, abs=1e-6)
        assert result["label"] == "upper estimate"
        assert man["seed"] == 3

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"n": 3, "k": 2, "seed": 11, "random_starts": 2}))
        traj = tmp_path / "traj.csv"
        result, man = run_json(capsys, "minimize", "--n", "3", "--k", "2", "--config", str(cfg),
                               "--trajectory", str(traj))
        assert result["best_value"] == pytest.approx(1.8, abs=1e-6)
        assert str(cfg) in man["inputs"]
        assert traj.read_text().startswith("iteration,value,duality_gap")

    def test_missing_seed(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"n": 2, "k": 2}))
        assert run(capsys, "minimize", "--n", "2", "--k", "2", "--config", str(cfg))[0] == 1
        assert run(capsys, "minimize", "--n", "2", "--k", "2")[0] == 1

    def test_bad_k(self, capsys):
        assert run(capsys, "minimize", "--n", "2", "--k", "3", "--seed", "1")[0] == 1

    def test_missing_argument(self, capsys):
        assert run(capsys, "minimize", "--n", "2")[0] == 1


class TestOtherCommands:
    def test_bounds(self, capsys):
        result, _ = run_json(capsys, "bounds", "--n", "3", "--k", "3", "--samples", "30", "--seed", "2")
        assert result["hyperbolic_bound"] == pytest.approx(64 / 729)
        assert result["all_hold"] is True
        statuses = {s["status"] for s in result["samples"]}
        assert statuses <= {"holds", "bound not applicable"}
        assert "bound not applicable" in statuses

    def test_bounds_k2(self, capsys):
        result, _ = run_json(capsys, "bounds", "--n", "3", "--k", "2", "--samples", "5", "--seed", "2")
        assert result["hyperbolic_bound"] == pytest.approx(1.3515, abs=1e-4)

    def test_bounds_needs_seed(self, capsys):
        assert run(capsys, "bounds", "--n", "3", "--k", "3")[0] == 1

    def test_capacity(self, capsys):
        result, _ = run_json(capsys, "capacity", "--n", "2", "--k", "2")
        assert result["value"] == pytest.approx(16, abs=1e-6)

    def test_capacity_file(self, capsys, files):
        result, _ = run_json(capsys, "capacity", "--k", "1", "--matrix", files["bary"])
        assert result["value"] == pytest.approx(6, abs=1e-6)

    def test_hessian(self, capsys):
        result, _ = run_json(capsys, "hessian", "--n", "3", "--k", "3")
        assert result["min_eigenvalue"] > 0 and result["dimension"] == 9

    def test_count(self, capsys, files):
        result, _ = run_json(capsys, "count", "--matrix", files["k6"], "--k", "2")
        assert result["count"] == 45

    def test_count_fractional(self, capsys, files):
        assert run(capsys, "count", "--matrix", files["bary"], "--k", "2")[0] == 1

    def test_mu_table(self, capsys):
        result, _ = run_json(capsys, "mu-table", "--max-n", "3", "--seed", "1")
        assert result["cps_upper_bound"] == pytest.approx(-1.0184, abs=1e-4)
        for row in result["rows"]:
            assert row["mu_estimate"] <= row["barycenter_value"] + 1e-9

    def test_mu_table_csv(self, capsys):
        code, out, _ = run(capsys, "mu-table", "--max-n", "2", "--seed", "1", "--format", "csv")
        rows = list(csv.DictReader(ln for ln in out.splitlines() if not ln.startswith("#")))
        assert code == 0 and float(rows[0]["barycenter_value"]) == pytest.approx(1 / 3)


class TestReproducibility:
    def test_byte_identical(self, capsys, monkeypatch, files):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        first = run(capsys, "member", "--matrix", files["bary"])[1]
        second = run(capsys, "member", "--matrix", files["bary"])[1]
        assert first == second
        assert json.loads(first)["manifest"]["timestamp"].startswith("2023-11-14")

    def test_console_entry(self):
        proc = subprocess.run([sys.executable, "-m", "matchpoly.cli", "formulas", "--n", "2"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["result"]["rows"][0]["haf_exact"] == "1/3"
