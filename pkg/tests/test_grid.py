import random

import pytest

import oracle
from conftest import FIG_GRID_TEXT, FIG_PUZZLE_TEXT
from minclue import (
    Cell,
    CluePattern,
    ConstraintViolationError,
    Grid,
    GridError,
    GridSize,
    IllegalCharacterError,
    LengthMismatchError,
    Puzzle,
    SizeMismatchError,
    apply_pattern,
    parse_grid,
    parse_puzzle,
    serialize,
)
from minclue.grid import infer_size, iter_instance_lines


def recount_units(size, entries):
    """Plain recount of all 4n^2 unit constraints, independent of the library."""
    n, s = size.n, size.s
    rows = [[entries[r * n + c] for c in range(n)] for r in range(n)]
    cols = [[entries[r * n + c] for r in range(n)] for c in range(n)]
    boxes = [
        [
            entries[r * n + c]
            for r in range(br, br + s)
            for c in range(bc, bc + s)
        ]
        for br in range(0, n, s)
        for bc in range(0, n, s)
    ]
    want = list(range(1, n + 1))
    return all(sorted(unit) == want for unit in rows + cols + boxes)


class TestGridSize:
    def test_of_side(self):
        assert GridSize.of_side(9) == GridSize(9, 3)
        assert GridSize.of_side(16).s == 4

    @pytest.mark.parametrize("n", [0, 1, 2, 3, 5, 8, 12])
    def test_rejects_non_square_or_small(self, n):
        with pytest.raises(GridError):
            GridSize.of_side(n)

    def test_rejects_inconsistent_pair(self):
        with pytest.raises(GridError):
            GridSize(9, 2)


class TestCellOrder:
    def test_lexicographic(self):
        assert Cell(1, 9) < Cell(2, 1)
        assert sorted([Cell(2, 1), Cell(1, 2), Cell(1, 1)]) == [
            Cell(1, 1),
            Cell(1, 2),
            Cell(2, 1),
        ]

    def test_one_based(self):
        with pytest.raises(GridError):
            Cell(0, 1)


class TestParseGrid:
    def test_figure_grid(self, size9, figure_grid):
        assert figure_grid.entry(1, 1) == 7
        assert figure_grid.entry(9, 9) == 4
        assert recount_units(size9, figure_grid.entries)

    def test_serialize_round_trip(self, size9):
        assert serialize(parse_grid(FIG_GRID_TEXT, size9)) == FIG_GRID_TEXT

    def test_length_mismatch(self, size9):
        with pytest.raises(LengthMismatchError):
            parse_grid(FIG_GRID_TEXT[:-1], size9)

    def test_illegal_character(self, size4):
        with pytest.raises(IllegalCharacterError):
            parse_grid("12345678" + "1" * 8, size4)

    def test_row_violation(self, size4):
        # the 16-char example floated for this case is actually a valid grid
        assert parse_grid("1234341221434321", size4) is not None
        with pytest.raises(ConstraintViolationError) as err:
            parse_grid("1134341221434321", size4)
        assert err.value.unit == "row" and err.value.digit == 1

    def test_box_violation(self, size4):
        # rows and columns are clean; only the top-left box repeats digits
        with pytest.raises(ConstraintViolationError) as err:
            parse_grid("1234214334124321", size4)
        assert err.value.unit == "box"

    def test_all_oracle_grids_parse(self, grids4, size4):
        for board in grids4:
            text = "".join(str(v) for v in board)
            grid = parse_grid(text, size4)
            assert serialize(grid) == text

    def test_non_grids_rejected(self, grids4, size4):
        rng = random.Random(20240)
        valid = set(grids4)
        rejected = 0
        for _ in range(300):
            board = tuple(rng.randint(1, 4) for _ in range(16))
            if board in valid:
                continue
            with pytest.raises(ConstraintViolationError):
                parse_grid("".join(map(str, board)), size4)
            rejected += 1
        assert rejected > 250


class TestParsePuzzle:
    def test_figure_puzzle(self, figure_puzzle):
        assert figure_puzzle.givens_count == 17
        assert figure_puzzle.entry(1, 4) == 6
        assert figure_puzzle.entry(9, 4) == 5

    def test_zero_and_dot_interchangeable(self, size9):
        assert parse_puzzle(FIG_PUZZLE_TEXT.replace(".", "0"), size9) == parse_puzzle(
            FIG_PUZZLE_TEXT, size9
        )

    def test_empty_puzzle(self, size9):
        p = parse_puzzle("." * 81, size9)
        assert p.givens_count == 0
        assert serialize(p) == "." * 81

    def test_full_puzzle(self, size9):
        p = parse_puzzle(FIG_GRID_TEXT, size9)
        assert p.givens_count == 81

    def test_conflicting_givens(self, size9):
        text = "11" + "." * 79
        with pytest.raises(ConstraintViolationError):
            parse_puzzle(text, size9)


class TestApplyPattern:
    def test_identity(self, figure_grid):
        puzzle = apply_pattern(figure_grid, CluePattern.all_cells(figure_grid.size))
        assert puzzle.entries == figure_grid.entries

    def test_empty(self, figure_grid):
        puzzle = apply_pattern(figure_grid, CluePattern.no_cells(figure_grid.size))
        assert puzzle.givens_count == 0

    def test_figure_17_pattern(self, figure_grid, figure_puzzle, size9):
        pattern = CluePattern(size9, [v != 0 for v in figure_puzzle.entries])
        assert apply_pattern(figure_grid, pattern) == figure_puzzle

    def test_size_mismatch(self, figure_grid, size4):
        with pytest.raises(SizeMismatchError):
            apply_pattern(figure_grid, CluePattern.all_cells(size4))

    def test_givens_equal_cardinality(self, figure_grid, size9):
        rng = random.Random(99)
        for _ in range(200):
            mask = [rng.random() < 0.4 for _ in range(81)]
            pattern = CluePattern(size9, mask)
            assert (
                apply_pattern(figure_grid, pattern).givens_count
                == pattern.cardinality()
            )


class TestBigBoards:
    @staticmethod
    def shift_grid(n):
        s = int(n**0.5)
        return [
            (s * (r % s) + r // s + c) % n + 1 for r in range(n) for c in range(n)
        ]

    def test_16x16_comma_format(self):
        size = GridSize.of_side(16)
        grid = Grid(size, self.shift_grid(16))
        text = serialize(grid)
        assert "," in text
        assert parse_grid(text, size) == grid
        assert recount_units(size, grid.entries)

    def test_16x16_puzzle_round_trip(self):
        size = GridSize.of_side(16)
        entries = self.shift_grid(16)
        entries[5] = 0
        entries[255] = 0
        puzzle = Puzzle(size, entries)
        assert parse_puzzle(serialize(puzzle), size) == puzzle


class TestInstanceFiles:
    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "grids.txt"
        path.write_text(
            "# full-line comment\n\n"
            f"{FIG_GRID_TEXT}  trailing words ignored\n"
            "1234341221434321\n"
        )
        items = list(iter_instance_lines(path))
        assert [lineno for lineno, _ in items] == [3, 4]
        assert items[0][1] == FIG_GRID_TEXT

    def test_infer_size(self):
        assert infer_size(FIG_GRID_TEXT).n == 9
        assert infer_size("1234341221434321").n == 4
        assert infer_size(",".join(["1"] * 256)).n == 16
        with pytest.raises(LengthMismatchError):
            infer_size("12345")
