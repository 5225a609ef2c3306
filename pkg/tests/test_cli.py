import math

import pytest

from mlap1d.cli import (
    ClaimRecord,
    ReproReport,
    main,
    parse_report,
    parse_repro_report,
)
from mlap1d.errors import InvalidConfig


class TestClassify:
    def test_supercritical_output(self, capsys):
        assert main(["classify", "--m", "2", "--p", "0.5", "--q", "1"]) == 0
        out = capsys.readouterr().out
        assert "Supercritical" in out
        assert "0.666667" in out
        assert "tau_sup = 3.000000" in out

    def test_subcritical(self, capsys):
        assert main(["classify", "--m", "2", "--p", "0", "--q", "0"]) == 0
        assert "Subcritical" in capsys.readouterr().out

    def test_inadmissible_exits_2(self, capsys):
        assert main(["classify", "--m", "2", "--p", "0", "--q", "1.6"]) == 2
        assert "p + q" in capsys.readouterr().err


class TestConfigHandling:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nn = 12\n")
        assert main(["classify", "--config", str(cfg)]) == 2

    def test_file_then_flag_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("m = 2\np = 0.5\nq = 0.5\n")  # critical as written
        assert main(["classify", "--config", str(cfg), "--q", "1"]) == 0
        out = capsys.readouterr().out
        assert "Supercritical" in out  # flag q=1 overrode file q=0.5

    def test_env_override(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MLAP1D_Q", "1")
        assert main(["classify", "--m", "2", "--p", "0.5"]) == 0
        assert "Supercritical" in capsys.readouterr().out

    def test_set_flag(self, capsys):
        assert main(["classify", "--set", "m=2", "--set", "p=0.5", "--set", "q=1"]) == 0
        assert "Supercritical" in capsys.readouterr().out

    def test_malformed_config_line(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just a line\n")
        assert main(["classify", "--config", str(cfg)]) == 2

    def test_comments_and_blanks_ok(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\n\nm = 2\np = 0.5\nq = 1\n")
        assert main(["classify", "--config", str(cfg)]) == 0


class TestSolveCommand:
    def test_torsion_csv_peak(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            [
                "solve", "--rhs", "const", "--theta-const", "1", "--m", "3",
                "--n", "1025", "--grading", "2", "--output-dir", str(out),
            ]
        )
        assert code == 0
        rows = (out / "solution.csv").read_text().strip().splitlines()
        assert rows[0] == "x,delta,u,du"
        peak = max(float(r.split(",")[2]) for r in rows[1:])
        assert peak == pytest.approx((2.0 / 3.0) * 0.5**1.5, abs=5e-4)
        report = parse_report((out / "solve.report").read_text())
        assert report[0]["converged"] == "true"

    def test_determinism(self, tmp_path):
        args = [
            "solve", "--rhs", "singular", "--m", "2", "--p", "0.5", "--q", "1",
            "--n", "257", "--grading", "3",
        ]
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            assert main(args + ["--output-dir", str(d)]) == 0
            outs.append(
                (d / "solution.csv").read_bytes() + (d / "solve.report").read_bytes()
            )
        assert outs[0] == outs[1]


class TestEigenCommand:
    def test_lambda_reported(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["eigen", "--m", "2", "--n", "513", "--grading", "1",
                     "--output-dir", str(out)])
        assert code == 0
        report = parse_report((out / "eigen.report").read_text())
        lam = float(report[0]["lambda"])
        assert lam == pytest.approx(math.pi**2, rel=1e-3)
        assert (out / "eigenfunction.csv").exists()


class TestBarrierCheckCommand:
    def test_certified_exit_0(self, tmp_path):
        code = main(
            [
                "barrier-check", "--rhs", "singular", "--m", "2", "--p", "0.5",
                "--q", "1", "--n", "257", "--grading", "3", "--family", "regime",
                "--side", "super", "--output-dir", str(tmp_path / "o"),
            ]
        )
        assert code == 0

    def test_wrong_exponent_exit_1(self, tmp_path):
        code = main(
            [
                "barrier-check", "--rhs", "singular", "--m", "2", "--p", "0.5",
                "--q", "1", "--n", "4097", "--grading", "3", "--family", "power",
                "--gamma", "0.3", "--side", "sub", "--c-max", "64",
                "--output-dir", str(tmp_path / "o"),
            ]
        )
        assert code == 1


class TestFitCommand:
    def test_expectation_pass_and_fail(self, tmp_path):
        base = [
            "fit-exponent", "--rhs", "singular", "--m", "2", "--p", "0.5",
            "--q", "1", "--n", "2049", "--grading", "3",
            "--window-lo", "1e-3", "--window-hi", "1e-2",
        ]
        ok = main(base + ["--expect", "0.6667", "--expect-tol", "0.05",
                          "--output-dir", str(tmp_path / "a")])
        assert ok == 0
        bad = main(base + ["--expect", "0.5", "--expect-tol", "0.01",
                           "--output-dir", str(tmp_path / "b")])
        assert bad == 1


class TestScanCommand:
    def test_scan_csv_and_verify(self, tmp_path):
        out = tmp_path / "o"
        code = main(
            [
                "scan-threshold", "--rhs", "singular", "--m", "2", "--p", "0.5",
                "--q", "1", "--taus", "2.5,3.5", "--levels", "257,513,1025,2049",
                "--grading", "3", "--verify", "true", "--output-dir", str(out),
            ]
        )
        assert code == 0
        rows = (out / "scan.csv").read_text().strip().splitlines()
        assert rows[0] == "tau,n,seminorm,ratio,verdict"
        assert len(rows) == 1 + 2 * 4  # one row per (tau, level)


class TestLemmaIntegralCommand:
    def test_infinite_verdict_exit_0(self, tmp_path, capsys):
        code = main(["lemma-integral", "--a", "1.1", "--output-dir", str(tmp_path / "o")])
        assert code == 0
        assert "Infinite" in capsys.readouterr().out

    def test_finite_value(self, tmp_path, capsys):
        code = main(["lemma-integral", "--a", "0.5", "--output-dir", str(tmp_path / "o")])
        assert code == 0
        out = capsys.readouterr().out
        assert "Finite" in out


class TestReports:
    def test_round_trip(self):
        rep = ReproReport(
            (
                ClaimRecord("E3.exponent", 2.0 / 3.0, 0.65, 0.03),
                ClaimRecord("E3.regime", 2.0, 2.0, 0.0),
            )
        )
        from mlap1d.cli import write_report
        import pathlib
        import tempfile

        with tempfile.TemporaryDirectory() as d:
            path = pathlib.Path(d) / "r.report"
            write_report(path, rep.blocks())
            back = parse_repro_report(path.read_text())
        assert back == rep
        assert back.overall

    def test_parse_rejects_garbage(self):
        with pytest.raises(InvalidConfig):
            parse_repro_report("nonsense\n")


class TestReproduceSmall:
    def test_empty_matrix_exit_2(self, tmp_path):
        assert main(["reproduce-theorem1", "--set", "matrix=",
                     "--output-dir", str(tmp_path / "o")]) == 2

    def test_unknown_entry_exit_2(self, tmp_path):
        assert main(["reproduce-theorem1", "--set", "matrix=E9",
                     "--output-dir", str(tmp_path / "o")]) == 2

    def test_override_for_absent_entry_rejected(self, tmp_path):
        assert main(
            ["reproduce-theorem1", "--set", "matrix=E1",
             "--set", "e3.boundary_exponent=0.5", "--output-dir", str(tmp_path / "o")]
        ) == 2


class TestRadialDomain:
    def test_radial_solve_csv(self, tmp_path):
        out = tmp_path / "o"
        code = main(
            [
                "solve", "--rhs", "const", "--theta-const", "1", "--m", "2",
                "--domain", "ball", "--ball-dim", "3", "--n", "257",
                "--grading", "1", "--output-dir", str(out),
            ]
        )
        assert code == 0
        rows = (out / "solution.csv").read_text().strip().splitlines()
        first = rows[1].split(",")
        # center value of (1 - r^2)/6 and delta = 1 - r
        assert float(first[2]) == pytest.approx(1.0 / 6.0, abs=1e-10)
        assert float(first[1]) == pytest.approx(1.0, abs=0)

    def test_radial_eigen(self, tmp_path, capsys):
        code = main(
            ["eigen", "--m", "2", "--domain", "ball", "--ball-dim", "3",
             "--n", "1025", "--grading", "1", "--output-dir", str(tmp_path / "o")]
        )
        assert code == 0
        out = capsys.readouterr().out
        lam = float([l for l in out.splitlines() if l.startswith("lambda")][0].split("=")[1])
        assert lam == pytest.approx(math.pi**2, rel=1e-3)


def test_filesystem_error_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    # output dir cannot be created below a regular file
    code = main(
        ["lemma-integral", "--a", "0.5", "--output-dir", str(blocker / "sub")]
    )
    assert code == 2
