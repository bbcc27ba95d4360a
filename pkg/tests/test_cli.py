"""Command-line surface: outputs, round trips, determinism, exit codes."""

import json
import math

import pytest

from branchvol import cli
from branchvol.branching import GaussianBase
from branchvol.closedform import BleedParams, m4_bleed
from branchvol.mixstats import convexity_ratio, exceedance_constant_a


def run_cli(*argv, capsys=None):
    rc = cli.main(list(argv))
    out = capsys.readouterr().out if capsys is not None else None
    return rc, out


class TestDensityCommand:
    def test_grid_row_count_and_peak(self, tmp_path):
        out = tmp_path / "density.csv"
        rc = cli.main(
            [
                "density",
                "--mu", "0", "--sigma", "1",
                "--schedule", "constant:a=0.1,N=5",
                "--x=-4:4:0.05",
                "--out", str(out),
            ]
        )
        assert rc == 0
        columns, rows = cli.parse_table_csv(out.read_text())
        assert columns == ["x", "f_N5"]
        assert len(rows) == 161
        mid = rows[80]
        assert mid[0] == 0.0
        assert mid[1] > 0.39894228040143268  # above the plain Gaussian peak

    def test_space_separated_negative_grid(self, capsys):
        # The documented flag shape: a space before a grid starting with "-".
        rc, out = run_cli(
            "density", "--mu", "0", "--sigma", "1",
            "--schedule", "constant:a=0.1,N=5",
            "--x", "-4:4:0.05",
            capsys=capsys,
        )
        assert rc == 0
        _, rows = cli.parse_table_csv(out)
        assert len(rows) == 161

    def test_depth_zero_peak_value(self, capsys):
        rc, out = run_cli(
            "density", "--schedule", "constant:a=0.1,N=0", "--x=0:1:0.5",
            capsys=capsys,
        )
        assert rc == 0
        _, rows = cli.parse_table_csv(out)
        assert math.isclose(rows[0][1], 0.39894228040143268, rel_tol=1e-12)

    def test_overlay_peaks_increase_with_depth(self, capsys):
        rc, out = run_cli(
            "density",
            "--schedule", "constant:a=0.1,N=5",
            "--n-list", "0,5,10,25",
            "--x=-1:1:0.5",
            capsys=capsys,
        )
        assert rc == 0
        columns, rows = cli.parse_table_csv(out)
        assert columns == ["x", "f_N0", "f_N5", "f_N10", "f_N25"]
        peak = next(r for r in rows if r[0] == 0.0)
        assert peak[1] < peak[2] < peak[3] < peak[4]

    def test_non_constant_schedule_uses_enumeration(self, capsys):
        rc, out = run_cli(
            "density", "--schedule", "bleed:a1=0.2,lambda=0.9,N=4", "--x=0:1:1",
            capsys=capsys,
        )
        assert rc == 0


class TestExceedCommand:
    def test_values_match_library(self, capsys):
        rc, out = run_cli(
            "exceed",
            "--schedule", "constant:a=0.1,N=8",
            "--k", "3,5",
            capsys=capsys,
        )
        assert rc == 0
        _, rows = cli.parse_table_csv(out)
        base = GaussianBase(0.0, 1.0)
        for row, k in zip(rows, (3.0, 5.0)):
            assert row[0] == 8 and row[1] == k
            assert math.isclose(row[2], exceedance_constant_a(base, 0.1, 8, k), rel_tol=1e-9)
            assert math.isclose(row[3], math.log(row[2]), rel_tol=1e-9)


class TestRatioTableCommand:
    def test_default_reproduces_both_tables(self, capsys):
        rc, out = run_cli("ratio-table", capsys=capsys)
        assert rc == 0
        columns, rows = cli.parse_table_csv(out)
        assert columns == ["a", "N", "K3", "K5", "K10"]
        assert len(rows) == 10
        cells = {(r[0], r[1]): r for r in rows}
        base = GaussianBase(0.0, 1.0)
        assert math.isclose(
            cells[(0.01, 25)][4], convexity_ratio(base, 0.01, 25, 10.0), rel_tol=1e-9
        )
        # Spot values, frozen from exact binomial sums.
        assert math.isclose(cells[(0.01, 20)][3], 1.7200527903053911, rel_tol=1e-6)
        assert math.isclose(cells[(0.1, 25)][4], 3.6234200602639237e18, rel_tol=1e-6)

    def test_depth_zero_rows_are_one(self, capsys):
        rc, out = run_cli("ratio-table", "--a", "0.07", "--n-list", "0", capsys=capsys)
        assert rc == 0
        _, rows = cli.parse_table_csv(out)
        assert rows[0][2:] == [1.0, 1.0, 1.0]


class TestMomentsCommand:
    def test_constant_schedule_closed_vs_enumeration(self, capsys):
        rc, out = run_cli(
            "moments", "--schedule", "constant:a=0.1,N=8", "--orders", "2,4",
            capsys=capsys,
        )
        assert rc == 0
        columns, rows = cli.parse_table_csv(out)
        assert columns == ["order", "closed_form", "enumeration", "rel_diff", "limit_inf"]
        for row in rows:
            assert row[3] < 1e-12

    def test_bleed_limit_column(self, capsys):
        rc, out = run_cli(
            "moments", "--schedule", "bleed:a1=0.2,lambda=0.9,N=6", "--orders", "2,4",
            capsys=capsys,
        )
        assert rc == 0
        _, rows = cli.parse_table_csv(out)
        limits = {int(r[0]): r[4] for r in rows}
        assert math.isclose(limits[4], m4_bleed(BleedParams(0.2, 0.9, cli.INFINITY)), rel_tol=1e-12)
        assert math.isclose(limits[4], 9.88, rel_tol=5e-3)

    def test_additive_schedule_partial_closed_forms(self, capsys):
        rc, out = run_cli(
            "moments", "--schedule", "geometric:a=0.1,N=6", "--orders", "1,2,3,4",
            capsys=capsys,
        )
        assert rc == 0
        _, rows = cli.parse_table_csv(out)
        by_order = {int(r[0]): r for r in rows}
        assert by_order[3][1] is None  # no additive closed form at order 3
        assert by_order[3][2] is not None  # enumeration still reported
        assert by_order[2][3] < 1e-12


class TestLogLogCommand:
    def test_slope_columns(self, capsys):
        rc, out = run_cli(
            "loglog",
            "--schedule", "constant:a=0.1,N=50",
            "--n-list", "0,50",
            "--x", "2:8:25",
            capsys=capsys,
        )
        assert rc == 0
        columns, rows = cli.parse_table_csv(out)
        assert columns == ["N", "x", "ln_x", "ln_p", "local_slope"]
        n0 = [r for r in rows if r[0] == 0]
        n50 = [r for r in rows if r[0] == 50]
        assert len(n0) == len(n50) == 25
        # Depth-0 Gaussian slopes steepen monotonically.
        slopes0 = [r[4] for r in n0]
        assert all(a > b for a, b in zip(slopes0, slopes0[1:]))
        # At the same x the depth-50 curve is flatter.
        i = min(range(25), key=lambda j: abs(n0[j][1] - 6.0))
        assert abs(n50[i][4]) < abs(n0[i][4])


class TestValidateCommand:
    def test_passes_and_self_test_fails(self, tmp_path):
        args = [
            "validate",
            "--schedule", "constant:a=0.1,N=8",
            "--n-samples", "200000",
            "--seed", "42",
            "--format", "json",
            "--out", str(tmp_path / "v.json"),
        ]
        assert cli.main(args) == 0
        columns, rows = cli.parse_table_json((tmp_path / "v.json").read_text())
        assert columns == ["kind", "key", "estimate", "se", "reference", "z", "reliable", "passed"]
        assert all(r[7] for r in rows)
        assert cli.main(args + ["--self-test"]) == 1

    def test_seed_changes_output(self, capsys):
        base_args = (
            "validate", "--schedule", "constant:a=0.1,N=4", "--n-samples", "50000",
        )
        rc1, out1 = run_cli(*base_args, "--seed", "1", capsys=capsys)
        rc2, out2 = run_cli(*base_args, "--seed", "2", capsys=capsys)
        assert rc1 == rc2 == 0
        assert out1 != out2


class TestOutputContract:
    def test_byte_identical_reruns(self, tmp_path):
        for cmd in (
            ["density", "--schedule", "constant:a=0.1,N=4", "--x=-2:2:0.25"],
            ["ratio-table", "--a", "0.1", "--n-list", "5,10"],
            ["moments", "--schedule", "bleed:a1=0.2,lambda=0.9,N=5"],
            ["loglog", "--schedule", "constant:a=0.1,N=5", "--x", "2:8:12"],
            ["validate", "--schedule", "constant:a=0.1,N=3", "--n-samples", "5000",
             "--seed", "7"],
        ):
            paths = [tmp_path / "a.out", tmp_path / "b.out"]
            for p in paths:
                assert cli.main(cmd + ["--out", str(p)]) in (0, 1)
            assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_json_self_parse_all_commands(self, tmp_path):
        for cmd in (
            ["density", "--schedule", "constant:a=0.1,N=4", "--x=-2:2:1"],
            ["exceed", "--schedule", "constant:a=0.1,N=4", "--k", "3"],
            ["ratio-table", "--a", "0.1", "--n-list", "5"],
            ["moments", "--schedule", "constant:a=0.1,N=4", "--orders", "2"],
            ["loglog", "--schedule", "constant:a=0.1,N=4", "--x", "2:6:5"],
            ["validate", "--schedule", "constant:a=0.1,N=3", "--n-samples", "2000",
             "--seed", "3"],
        ):
            p = tmp_path / "t.json"
            assert cli.main(cmd + ["--format", "json", "--out", str(p)]) in (0, 1)
            columns, rows = cli.parse_table_json(p.read_text())
            assert columns and rows
            payload = json.loads(p.read_text())
            assert payload["schema_version"] == 1

    def test_csv_number_format(self):
        assert cli._format_value(0.0) == "0"
        assert cli._format_value(1.5) == "1.5"
        assert cli._format_value(123456.789) == "123456.789"
        assert cli._format_value(1e-5) == "0.00001"
        # Scientific notation kicks in at |exponent| >= 6.
        assert "e" in cli._format_value(1.2e6)
        assert "e" in cli._format_value(3.4e-7)
        assert cli._format_value(True) == "true"
        assert cli._format_value(None) == ""
        assert cli._format_value(7) == "7"


class TestExitCodes:
    def test_config_errors_exit_two(self, capsys):
        assert cli.main(["density", "--schedule", "nope:a=1", "--x=0:1:1"]) == 2
        assert cli.main(["density", "--schedule", "constant:a=0.1,N=2", "--x", "bad"]) == 2
        assert cli.main(["exceed", "--schedule", "explicit:0.1,0.2", "--k", "3",
                         "--n-list", "4"]) == 2
        capsys.readouterr()

    def test_domain_errors_exit_three(self, capsys):
        assert cli.main(["density", "--sigma", "-1",
                         "--schedule", "constant:a=0.1,N=2", "--x=0:1:1"]) == 3
        assert cli.main(["density", "--schedule", "constant:a=1.5,N=2", "--x=0:1:1"]) == 3
        assert cli.main(["density", "--schedule", "bleed:a1=0.2,lambda=0.9,N=30",
                         "--x=0:1:1"]) == 3
        capsys.readouterr()

    def test_argparse_errors_exit_two(self, capsys):
        assert cli.main(["density", "--no-such-flag"]) == 2
        assert cli.main([]) == 2
        capsys.readouterr()
