import json
import math
import subprocess
import sys

import numpy as np
import pytest

from elicit import cli, jsonio, make_scoring_rule, simplex_grid

FIG_FAMILY = {
    "typeSpace": {"dim": 1, "points": [[0.0], [1.0], [2.0]]},
    "family": [[0.0], [1.0], [2.0]],
}
BAD_FAMILY = {
    "typeSpace": {"dim": 1, "points": [[0.0], [1.0]]},
    "family": [[1.0], [0.0]],
}


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


class TestExitContract:
    def test_rev_interval_narrowed(self, tmp_path, capsys):
        fam = write(tmp_path, "fam.json", FIG_FAMILY)
        code, out, _ = run_cli(
            ["rev-interval", fam, "--anchor", "0=0", "--anchor", "1=0.5", "--target", "2"],
            capsys,
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["lower"] == 1.5
        assert doc["upper"] == 2.5

    def test_check_cmon_bad_family_exits_2_with_cycle(self, tmp_path, capsys):
        fam = write(tmp_path, "bad.json", BAD_FAMILY)
        code, out, _ = run_cli(["check-cmon", fam], capsys)
        assert code == 2
        doc = json.loads(out)
        assert doc["passed"] is False
        assert doc["witnesses"][0]["kind"] == "cycle"
        assert doc["witnesses"][0]["slack"] == 1.0

    def test_check_cmon_good_family_exits_0(self, tmp_path, capsys):
        fam = write(tmp_path, "fam.json", FIG_FAMILY)
        code, out, _ = run_cli(["check-cmon", fam], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_missing_file_exits_1(self, tmp_path, capsys):
        code, out, err = run_cli(["check-cmon", str(tmp_path / "nope.json")], capsys)
        assert code == 1
        assert out == ""
        assert "error" in err

    def test_synth_payments_on_bad_family_exits_2(self, tmp_path, capsys):
        fam = write(tmp_path, "bad.json", BAD_FAMILY)
        code, out, _ = run_cli(["synth-payments", fam], capsys)
        assert code == 2
        doc = json.loads(out)
        assert doc["error"] == "NotImplementableError"
        assert doc["weight"] == 1.0


class TestDeterminism:
    def test_byte_identical_output(self, tmp_path):
        fam_path = write(tmp_path, "fam.json", FIG_FAMILY)
        cmd = [sys.executable, "-m", "elicit.cli"]
        args = ["rev-interval", fam_path, "--anchor", "0=0", "--target", "2"]
        runs = [
            subprocess.run(cmd + args, capture_output=True, text=True)
            for _ in range(2)
        ]
        assert runs[0].returncode == 0
        assert runs[0].stdout == runs[1].stdout
        assert runs[0].stdout.endswith("\n")

    def test_sorted_keys_and_17_digits(self, tmp_path, capsys):
        fam = write(tmp_path, "fam.json", FIG_FAMILY)
        code, out, _ = run_cli(
            ["rev-interval", fam, "--anchor", "0=0.1", "--target", "1"], capsys
        )
        assert code == 0
        keys = list(json.loads(out))
        assert keys == sorted(keys)
        assert "0.10000000000000001" in out  # 17 significant digits of 0.1


class TestRoundTrips:
    def test_make_score_feeds_check_proper(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["make-score", "--g", "brier", "--reports", "grid:10"], capsys
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["reports"]) == 11
        table_path = write(tmp_path, "table.json", doc)
        code, out, _ = run_cli(["check-proper", table_path, "--strict"], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_make_score_matches_library_rows(self, capsys):
        code, out, _ = run_cli(
            ["make-score", "--g", "brier", "--reports", "grid:10"], capsys
        )
        doc = json.loads(out)
        expect = make_scoring_rule(
            __import__("elicit").SquaredNorm(), simplex_grid(2, 10)
        )
        assert np.asarray(doc["payoffs"]) == pytest.approx(expect.payoffs, abs=1e-15)

    def test_synth_payments_feeds_check_truthful(self, tmp_path, capsys):
        fam = write(tmp_path, "fam.json", FIG_FAMILY)
        code, out, _ = run_cli(["synth-payments", fam], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["surplus"] == [0.0, 0.0, 1.0]
        assert doc["payments"] == [0.0, 1.0, 3.0]
        score_path = write(tmp_path, "score.json", doc)
        code, out, _ = run_cli(["check-truthful", score_path], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_log_table_neg_inf_round_trip(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["make-score", "--g", "log", "--reports", "grid:4"], capsys
        )
        assert code == 0
        assert '"-inf"' in out
        table_path = write(tmp_path, "log.json", json.loads(out))
        code, out, _ = run_cli(
            ["score", table_path, "--report", "0", "--outcome", "0"], capsys
        )
        assert code == 0
        assert json.loads(out)["score"] == "-inf"


class TestSubcommands:
    def test_check_wmon(self, tmp_path, capsys):
        fam = write(tmp_path, "bad.json", BAD_FAMILY)
        code, out, _ = run_cli(["check-wmon", fam], capsys)
        assert code == 2
        assert json.loads(out)["witnesses"][0]["indices"] == [0, 1]

    def test_myerson(self, tmp_path, capsys):
        alloc = write(
            tmp_path, "alloc.json", {"breakpoints": [0.0, 1.0], "values": [0.0, 1.0]}
        )
        code, out, _ = run_cli(["myerson", alloc, "--t", "2.0"], capsys)
        assert code == 0
        assert json.loads(out)["payment"] == 1.0

    def test_myerson_decreasing_is_certified_negative(self, tmp_path, capsys):
        alloc = write(
            tmp_path, "alloc.json", {"breakpoints": [0.0, 1.0], "values": [1.0, 0.0]}
        )
        code, out, _ = run_cli(["myerson", alloc, "--t", "2.0"], capsys)
        assert code == 2
        assert json.loads(out)["error"] == "NotMonotoneError"

    def test_power_label_and_fit_weights(self, tmp_path, capsys):
        diag = write(
            tmp_path, "diag.json", {"sites": [[0.0], [1.0]], "weights": [0.0, 2.0]}
        )
        pts = write(tmp_path, "pts.json", {"points": [[0.0], [-0.6]]})
        code, out, _ = run_cli(["power-label", diag, pts], capsys)
        assert code == 0
        assert json.loads(out)["labels"] == [1, 0]

        sites = write(tmp_path, "sites.json", {"sites": [[0.0], [1.0]]})
        sample = write(
            tmp_path, "sample.json", {"points": [[0.0], [2.0]], "labels": [1, 0]}
        )
        code, out, _ = run_cli(["fit-weights", sites, sample], capsys)
        assert code == 2
        assert json.loads(out)["feasible"] is False

    def test_homothet_then_relabel(self, tmp_path, capsys):
        diag = write(
            tmp_path, "diag.json", {"sites": [[0.0], [1.0]], "weights": [0.0, 0.0]}
        )
        code, out, _ = run_cli(
            ["homothet", diag, "--alpha", "2.0", "--p0", "0"], capsys
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["sites"] == [[0.0], [2.0]]
        assert doc["weights"][1] - doc["weights"][0] == 2.0

    def test_level_convexity(self, tmp_path, capsys):
        sample = write(
            tmp_path,
            "sample.json",
            {"points": [[0.0], [1.0], [2.0]], "labels": [0, 1, 0]},
        )
        code, out, _ = run_cli(["level-convexity", sample], capsys)
        assert code == 2
        assert json.loads(out)["witnesses"][0]["kind"] == "sandwich"

    def test_breg2power_voronoi(self, tmp_path, capsys):
        g = write(tmp_path, "g.json", {"analytic": "squaredNorm"})
        sites = write(tmp_path, "sites.json", {"sites": [[0.0, 0.0], [1.0, 1.0]]})
        code, out, _ = run_cli(["breg2power", g, sites], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["sites"] == [[0.0, 0.0], [1.0, 1.0]]
        assert doc["weights"] == [0.0, 0.0]

    def test_duality_check_and_game(self, tmp_path, capsys):
        g = write(tmp_path, "g.json", {"analytic": "squaredNorm"})
        axis = np.linspace(-1, 1, 5)
        pts = [[float(x), float(y)] for x in axis for y in axis]
        grids = write(
            tmp_path,
            "grids.json",
            {
                "typeSpace": {"dim": 2, "points": pts},
                "duals": [[2 * x, 2 * y] for x, y in pts],
            },
        )
        code, out, _ = run_cli(["duality-check", g, grids], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True

        code, out, _ = run_cli(["game", g, grids], capsys)
        assert code == 0
        eqs = json.loads(out)["equilibria"]
        assert len(eqs) == len(pts)  # each (2t, t) pair is dual-optimal
        assert all(e["dIndex"] == e["tIndex"] for e in eqs)

    def test_check_local(self, tmp_path, capsys):
        doc = {
            "score": {
                "reports": [0, 1],
                "linear": [[1.0], [0.0]],
                "constant": [0.0, 0.0],
            },
            "typeSpace": {"dim": 1, "points": [[0.0], [1.0]]},
        }
        path = write(tmp_path, "score.json", doc)
        code, out, _ = run_cli(["check-local", path, "--radius", "2.0"], capsys)
        assert code == 2
        assert json.loads(out)["info"]["agrees"] is True

    def test_decision_score(self, tmp_path, capsys):
        doc = {
            "g": {"analytic": "squaredNorm"},
            "reports": [[[0.5, 0.5], [0.5, 0.5]]],
            "decisions": [[0.5, 0.5]],
        }
        path = write(tmp_path, "spec.json", doc)
        code, out, _ = run_cli(["decision-score", path], capsys)
        assert code == 0
        got = json.loads(out)
        assert got["scores"][0] == [[1.0, 1.0], [1.0, 1.0]]

    def test_make_score_from_max_affine_file(self, tmp_path, capsys):
        # tangents of sum p^2 at two reports, as an explicit spec file
        g_obj = {
            "maxAffine": [
                {"a": [0.6, 1.4], "b": -0.58},
                {"a": [1.0, 1.0], "b": -0.5},
            ]
        }
        g_path = write(tmp_path, "g.json", g_obj)
        reports = write(tmp_path, "reports.json", {"reports": [[0.3, 0.7], [0.5, 0.5]]})
        code, out, _ = run_cli(
            ["make-score", "--g", g_path, "--reports", reports], capsys
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["payoffs"]) == 2

    def test_check_proper_with_beliefs_file(self, tmp_path, capsys):
        code, out, _ = run_cli(
            ["make-score", "--g", "brier", "--reports", "grid:4"], capsys
        )
        table_path = write(tmp_path, "table.json", json.loads(out))
        beliefs = write(tmp_path, "beliefs.json", {"beliefs": [[0.5, 0.5], [1.0, 0.0]]})
        code, out, _ = run_cli(["check-proper", table_path, beliefs], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_tol_env_override(self, tmp_path, capsys, monkeypatch):
        # a tiny violation passes under a loose tolerance
        fam = write(
            tmp_path,
            "fam.json",
            {
                "typeSpace": {"dim": 1, "points": [[0.0], [1.0]]},
                "family": [[1e-7], [0.0]],
            },
        )
        code, _, _ = run_cli(["check-wmon", fam], capsys)
        assert code == 2
        monkeypatch.setenv("ELICIT_TOL", "1e-3")
        code, _, _ = run_cli(["check-wmon", fam], capsys)
        assert code == 0
        code, _, _ = run_cli(["check-wmon", fam, "--tol", "1e-9"], capsys)
        assert code == 2
