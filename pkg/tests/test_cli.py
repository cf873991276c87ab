import csv

import pytest

import oracle
from conftest import FIG_GRID_TEXT, FIG_PUZZLE_TEXT
from minclue.cli import RESULT_FIELDS, bucket_label, main, parse_budget


def write(path, *lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture()
def grid4_file(tmp_path, grids4):
    text = "".join(str(v) for v in grids4[25])
    return write(tmp_path / "grid4.txt", text)


class TestVerify:
    def test_valid(self, tmp_path, capsys):
        g = write(tmp_path / "g.txt", FIG_GRID_TEXT)
        p = write(tmp_path / "p.txt", FIG_PUZZLE_TEXT)
        assert main(["verify", g, p]) == 0
        assert "VALID" in capsys.readouterr().out

    def test_invalid_multiple(self, tmp_path, capsys):
        g = write(tmp_path / "g.txt", FIG_GRID_TEXT)
        # drop the clue in row 2, column 1
        weak = "...64.2...." + FIG_PUZZLE_TEXT[11:]
        p = write(tmp_path / "p.txt", weak)
        assert main(["verify", g, p]) == 1
        assert "INVALID(multiple)" in capsys.readouterr().out

    def test_mismatch(self, tmp_path, capsys):
        g = write(tmp_path / "g.txt", FIG_GRID_TEXT)
        contradicted = "9" + FIG_PUZZLE_TEXT[1:]  # grid has 7 at (1,1)
        p = write(tmp_path / "p.txt", contradicted)
        assert main(["verify", g, p]) == 1
        assert "MISMATCH" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        g = write(tmp_path / "g.txt", FIG_GRID_TEXT)
        with pytest.raises(FileNotFoundError):
            main(["verify", g, str(tmp_path / "nope.txt")])


class TestGenunav:
    def test_complete_4x4_collection(self, tmp_path, grid4_file, grids4, capsys):
        out = tmp_path / "sets.unav"
        progress = tmp_path / "progress.csv"
        assert (
            main(
                [
                    "genunav",
                    grid4_file,
                    "--out",
                    str(out),
                    "--progress-csv",
                    str(progress),
                ]
            )
            == 0
        )
        stdout = capsys.readouterr().out
        assert "generation time [s]" in stdout
        from minclue import GridSize, Grid, load_collection

        grid = Grid(GridSize.of_side(4), grids4[25])
        coll = load_collection(out, grid)
        diffs = oracle.diff_masks(list(grids4), 25)
        assert len(coll) == len(oracle.minimal_masks(diffs))
        with open(progress) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["set_index", "m", "elapsed_seconds"]
        assert len(rows) - 1 == len(coll)

    def test_max_sets_zero_is_usage_error(self, grid4_file):
        with pytest.raises(SystemExit) as err:
            main(["genunav", grid4_file, "--max-sets", "0"])
        assert err.value.code == 2

    def test_bucket_labels(self):
        assert bucket_label(0.2) == "<=1"
        assert bucket_label(5) == "1-10"
        assert bucket_label(7200) == "3600-7200"
        assert bucket_label(9000) == ">=7200"


class TestSolve:
    def test_single_instance(self, tmp_path, grid4_file, grids4, capsys):
        trace = tmp_path / "trace.csv"
        results = tmp_path / "results.csv"
        code = main(
            [
                "solve",
                grid4_file,
                "--seed-cuts",
                "0",
                "--trace-csv",
                str(trace),
                "--results-csv",
                str(results),
            ]
        )
        assert code == 0
        diffs = oracle.diff_masks(list(grids4), 25)
        want, _ = oracle.mscp_optimum(diffs, 16)
        assert f"optimum {want}" in capsys.readouterr().out
        with open(trace) as fh:
            header = fh.readline().strip().split(",")
        assert header == [
            "iteration",
            "lower",
            "upper",
            "certificate_size",
            "elapsed_seconds",
        ]

    def test_batch_isolates_failures(self, tmp_path, grids4, capsys):
        good = "".join(str(v) for v in grids4[0])
        bad = "1134341221434321"
        grid_file = write(tmp_path / "batch.txt", good, bad)
        code = main(["solve", grid_file, "--seed-cuts", "0"])
        out = capsys.readouterr().out
        assert code == 1
        assert "batch.txt:1: optimum" in out
        assert "batch.txt:2: ERROR" in out

    def test_jobs_preserve_order(self, tmp_path, grids4, capsys):
        lines = ["".join(str(v) for v in grids4[i]) for i in (3, 4)]
        grid_file = write(tmp_path / "two.txt", *lines)
        assert main(["solve", grid_file, "--seed-cuts", "0", "--jobs", "2"]) == 0
        sequential = capsys.readouterr().out
        assert main(["solve", grid_file, "--seed-cuts", "0", "--jobs", "1"]) == 0
        assert capsys.readouterr().out == sequential

    def test_cuts_file_reuse(self, tmp_path, grid4_file, capsys):
        out = tmp_path / "sets.unav"
        assert main(["genunav", grid4_file, "--out", str(out)]) == 0
        capsys.readouterr()
        assert (
            main(
                ["solve", grid4_file, "--seed-cuts", "5", "--cuts-file", str(out)]
            )
            == 0
        )
        assert "optimum" in capsys.readouterr().out


class TestExportCommand:
    def test_reports_counts(self, tmp_path, capsys):
        g = write(tmp_path / "g.txt", FIG_GRID_TEXT)
        assert main(["export", g, "--out-dir", str(tmp_path / "out")]) == 0
        out = capsys.readouterr().out
        assert "811 variables, 407 constraint rows" in out

    def test_missing_grid_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            main(["export", str(tmp_path / "absent.txt")])


class TestResultsCsv:
    def test_schema_is_stable_across_commands(self, tmp_path, grid4_file, capsys):
        results = tmp_path / "results.csv"
        g = write(tmp_path / "g.txt", FIG_GRID_TEXT)
        p = write(tmp_path / "p.txt", FIG_PUZZLE_TEXT)
        main(["verify", g, p, "--results-csv", str(results)])
        main(["solve", grid4_file, "--seed-cuts", "0", "--results-csv", str(results)])
        main(
            [
                "genunav",
                grid4_file,
                "--out",
                str(tmp_path / "c.unav"),
                "--max-sets",
                "4",
                "--results-csv",
                str(results),
            ]
        )
        main(
            [
                "export",
                g,
                "--out-dir",
                str(tmp_path / "m"),
                "--results-csv",
                str(results),
            ]
        )
        capsys.readouterr()
        with open(results) as fh:
            rows = list(csv.DictReader(fh))
        assert [r["command"] for r in rows] == ["verify", "solve", "genunav", "export"]
        with open(results) as fh:
            assert fh.readline().strip() == ",".join(RESULT_FIELDS)

    def test_one_record_per_run(self, tmp_path, grid4_file):
        results = tmp_path / "results.csv"
        for _ in range(3):
            main(["solve", grid4_file, "--seed-cuts", "0", "--results-csv", str(results)])
        with open(results) as fh:
            assert len(list(csv.DictReader(fh))) == 3


class TestBudgetParsing:
    def test_forms(self):
        assert parse_budget(None).max_nodes is None
        assert parse_budget("60").max_time == 60.0
        assert parse_budget("60s").max_time == 60.0
        assert parse_budget("500n").max_nodes == 500
        b = parse_budget("30s,1000n")
        assert b.max_time == 30.0 and b.max_nodes == 1000

    def test_determinism_under_node_budget(self, tmp_path, grids4, capsys):
        grid_file = write(tmp_path / "g.txt", "".join(str(v) for v in grids4[77]))
        outputs = []
        for _ in range(2):
            main(["solve", grid_file, "--seed-cuts", "0", "--budget", "100000n"])
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]
