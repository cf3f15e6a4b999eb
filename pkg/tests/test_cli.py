"""CLI exit codes, report schema, determinism, and file outputs."""

import json

import numpy as np
import pytest

from inflap.cli import main
from inflap.grid import ScalarField


def run(args):
    return main(args)


def read_report(path):
    with open(path) as fh:
        return json.load(fh)


class TestExitCodes:
    def test_barrier_pass_and_fail(self, tmp_path):
        out = tmp_path / "b.json"
        assert run(["barrier", "--K", "100", "--a", "4", "--b", "144",
                    "--L", "1", "--out", str(out)]) == 1
        assert run(["barrier", "--K", "100", "--a", "4", "--b", "144",
                    "--out", str(out)]) == 0

    def test_missing_required_flag(self, capsys):
        assert run(["barrier", "--a", "4", "--b", "144"]) == 2
        capsys.readouterr()

    def test_unknown_command(self, capsys):
        assert run(["frobnicate"]) == 2
        capsys.readouterr()

    def test_bad_grid_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,grid\n")
        assert run(["certify", "--grid-in", str(bad)]) == 2
        capsys.readouterr()

    def test_solver_nonconvergence(self, capsys):
        code = run(["solve", "--profile", "prandtl", "--m", "17", "--n", "1",
                    "--max-iters", "2"])
        assert code == 3
        capsys.readouterr()


class TestCertify:
    def test_prandtl_report_schema(self, tmp_path):
        out = tmp_path / "c.json"
        assert run(["certify", "--profile", "prandtl", "--C", "1",
                    "--m", "17", "--out", str(out)]) == 0
        rep = read_report(out)
        assert set(rep) == {"config", "ledger", "results", "checks"}
        assert rep["config"]["command"] == "certify"
        for check in rep["checks"]:
            assert set(check) == {"name", "pass", "lhs", "rhs", "slack"}
            assert check["pass"] is True
        # numbers are decimal text with 17 significant digits
        assert isinstance(rep["ledger"]["L"], str)
        assert float(rep["ledger"]["varrho"]) == 9.0 * float(rep["ledger"]["normU"])
        assert rep["results"]["witness"] is None

    def test_byte_identical_reports(self, tmp_path):
        out = tmp_path / "same.json"
        args = ["certify", "--profile", "prandtl", "--C", "1", "--m", "17",
                "--seed", "7", "--out", str(out)]
        assert run(args) == 0
        first = out.read_bytes()
        assert run(args) == 0
        assert out.read_bytes() == first

    def test_counterexample_exits_one_with_witness(self, tmp_path):
        out = tmp_path / "cx.json"
        code = run(["certify", "--profile", "linear", "--C", "50",
                    "--Lambda", "0.1", "--L", "5", "--tau-w", "1.0",
                    "--m", "33", "--out", str(out)])
        assert code == 1
        rep = read_report(out)
        assert rep["results"]["witness"] is not None
        assert float(rep["results"]["witness"]["gap"]) > 1.0
        failed = [c["name"] for c in rep["checks"] if not c["pass"]]
        assert "no witness: max gap <= tau_w" in failed

    def test_figures_rendered_next_to_report(self, tmp_path):
        out = tmp_path / "f.json"
        assert run(["certify", "--profile", "prandtl", "--m", "17",
                    "--out", str(out)]) == 0
        assert (tmp_path / "f.field.png").exists()
        assert (tmp_path / "f.barrier.png").exists()

    def test_no_figures_flag(self, tmp_path):
        out = tmp_path / "nf.json"
        assert run(["certify", "--profile", "prandtl", "--m", "17",
                    "--no-figures", "--out", str(out)]) == 0
        assert not (tmp_path / "nf.field.png").exists()


class TestSolveCommand:
    def test_writes_grid_csv_roundtrip(self, tmp_path):
        out = tmp_path / "s.json"
        grid = tmp_path / "s.grid.csv"
        assert run(["solve", "--profile", "prandtl", "--m", "17", "--n", "1",
                    "--out", str(out), "--out-grid", str(grid)]) == 0
        sol = ScalarField.load_csv(grid)
        assert sol.m == 17 and sol.n == 1
        again = ScalarField.from_csv(sol.to_csv())
        assert np.array_equal(sol.values, again.values)
        rep = read_report(out)
        assert float(rep["results"]["residual"]) < 1e-5

    def test_grid_feeds_certify(self, tmp_path):
        grid = tmp_path / "g.csv"
        assert run(["solve", "--profile", "prandtl", "--m", "17", "--n", "1",
                    "--out-grid", str(grid)]) == 0
        out = tmp_path / "gc.json"
        assert run(["certify", "--grid-in", str(grid), "--Lambda", "1.1",
                    "--out", str(out)]) == 0


class TestOtherCommands:
    def test_lipschitz_cone(self, tmp_path):
        out = tmp_path / "l.json"
        assert run(["lipschitz", "--profile", "cone", "--C", "3",
                    "--m", "17", "--out", str(out)]) == 0
        rep = read_report(out)
        assert float(rep["results"]["sup_quotient"]) == pytest.approx(3.0, rel=1e-9)

    def test_viscosity_checks_pass(self, tmp_path):
        out = tmp_path / "v.json"
        assert run(["viscosity", "--profile", "prandtl", "--m", "33",
                    "--out", str(out)]) == 0
        rep = read_report(out)
        names = [c["name"] for c in rep["checks"]]
        assert "phase sets pairwise disjoint" in names
        assert any("subsolution" in n for n in names)
        assert any("supersolution" in n for n in names)

    def test_convergence_table_and_monotone(self, tmp_path):
        out = tmp_path / "cv.json"
        assert run(["convergence", "--profile", "cone", "--C", "1",
                    "--m-list", "9,17", "--out", str(out)]) == 0
        rep = read_report(out)
        table = rep["results"]["table"]
        assert len(table) == 2
        assert float(table[1]["sup_error"]) < float(table[0]["sup_error"])
        lines = (tmp_path / "cv.table.csv").read_text().splitlines()
        assert lines[0] == "m,h,sup_error,residual,iterations"
        assert len(lines) == 3
