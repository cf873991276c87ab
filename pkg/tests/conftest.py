import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracle
from minclue import Cell, Grid, GridSize, parse_grid, parse_puzzle

# the running 9x9 example: a 17-clue puzzle and its unique solution grid
FIG_PUZZLE_TEXT = (
    "...64.2..1.8....3............7.18....6....5...........3......1.4..2......2.5....."
)
FIG_GRID_TEXT = (
    "793645281158792436642183795537418629961327548284956173375864912416239857829571364"
)

# three disjoint minimal unavoidable sets of the grid above, sizes 4/6/8
GREEN = (Cell(1, 3), Cell(1, 8), Cell(2, 3), Cell(2, 8))
BLUE = (Cell(4, 1), Cell(4, 2), Cell(4, 3), Cell(7, 1), Cell(7, 2), Cell(7, 3))
RED = (
    Cell(1, 4),
    Cell(1, 5),
    Cell(3, 4),
    Cell(3, 5),
    Cell(4, 4),
    Cell(4, 5),
    Cell(7, 4),
    Cell(7, 5),
)


@pytest.fixture(scope="session")
def size9():
    return GridSize.of_side(9)


@pytest.fixture(scope="session")
def size4():
    return GridSize.of_side(4)


@pytest.fixture(scope="session")
def figure_grid(size9):
    return parse_grid(FIG_GRID_TEXT, size9)


@pytest.fixture(scope="session")
def figure_puzzle(size9):
    return parse_puzzle(FIG_PUZZLE_TEXT, size9)


@pytest.fixture(scope="session")
def grids4():
    boards = oracle.grids4()
    assert len(boards) == 288  # brute-force count, frozen
    return boards


@pytest.fixture(scope="session")
def grid4_objects(grids4, size4):
    return [Grid(size4, board) for board in grids4]


def cells_of_mask(mask: int, n: int = 4):
    return frozenset(
        Cell(i // n + 1, i % n + 1) for i in range(n * n) if mask >> i & 1
    )


@pytest.fixture(scope="session")
def oracle_minimal_sets(grids4):
    """Per-grid minimal unavoidable sets (as Cell frozensets), all 288 grids."""
    out = []
    for idx in range(len(grids4)):
        diffs = oracle.diff_masks(list(grids4), idx)
        out.append([cells_of_mask(m) for m in oracle.minimal_masks(diffs)])
    return out
