"""Core board types: grids, puzzles, clue patterns, and their text forms.

Cells are 1-based (row, col), row major; row 1 is the top row of the usual
diagram. Box (p, q) covers rows s*p-s+1 .. s*p and columns s*q-s+1 .. s*q.
All types are immutable after construction and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt
from typing import Iterable, Iterator, Sequence, Union

__all__ = [
    "GridError",
    "LengthMismatchError",
    "IllegalCharacterError",
    "ConstraintViolationError",
    "SizeMismatchError",
    "GridSize",
    "Cell",
    "Grid",
    "Puzzle",
    "CluePattern",
    "parse_grid",
    "parse_puzzle",
    "apply_pattern",
    "serialize",
    "iter_instance_lines",
]


class GridError(ValueError):
    """Malformed board data: bad text, bad dimensions, or broken constraints."""


class LengthMismatchError(GridError):
    pass


class IllegalCharacterError(GridError):
    pass


class SizeMismatchError(GridError):
    pass


class ConstraintViolationError(GridError):
    """A digit occurs more than once in a row, column, or box."""

    def __init__(self, unit: str, index: int, digit: int):
        super().__init__(f"digit {digit} repeats in {unit} {index}")
        self.unit = unit
        self.index = index
        self.digit = digit


@dataclass(frozen=True)
class GridSize:
    """Board side length n and box side s, with n = s*s and n >= 4."""

    n: int
    s: int

    def __post_init__(self) -> None:
        if self.n < 4:
            raise GridError(f"side length must be at least 4, got {self.n}")
        if self.s < 2 or self.s * self.s != self.n:
            raise GridError(f"side length {self.n} is not the square of box side {self.s}")

    @classmethod
    def of_side(cls, n: int) -> "GridSize":
        s = isqrt(n) if n > 0 else 0
        if s * s != n:
            raise GridError(f"side length must be a perfect square, got {n}")
        return cls(n, s)

    @property
    def cell_count(self) -> int:
        return self.n * self.n

    def box_index(self, row: int, col: int) -> int:
        """0-based box number of a 1-based (row, col)."""
        return ((row - 1) // self.s) * self.s + (col - 1) // self.s

    def check_cell(self, cell: "Cell") -> None:
        if not (1 <= cell.row <= self.n and 1 <= cell.col <= self.n):
            raise GridError(f"cell {cell} out of bounds for {self.n}x{self.n} board")

    def all_cells(self) -> list["Cell"]:
        return [Cell(r, c) for r in range(1, self.n + 1) for c in range(1, self.n + 1)]


@dataclass(frozen=True, order=True)
class Cell:
    """1-based board coordinate; ordering is (row, col) lexicographic."""

    row: int
    col: int

    def __post_init__(self) -> None:
        if self.row < 1 or self.col < 1:
            raise GridError(f"cell coordinates are 1-based, got ({self.row}, {self.col})")

    def __str__(self) -> str:
        return f"({self.row},{self.col})"


def _scan_units(size: GridSize, entries: Sequence[int]) -> None:
    """Raise ConstraintViolationError on the first repeated nonzero digit."""
    n, s = size.n, size.s
    rows = [0] * n
    cols = [0] * n
    boxes = [0] * n
    for i, digit in enumerate(entries):
        if digit == 0:
            continue
        r, c = divmod(i, n)
        b = (r // s) * s + (c // s)
        bit = 1 << digit
        if rows[r] & bit:
            raise ConstraintViolationError("row", r + 1, digit)
        if cols[c] & bit:
            raise ConstraintViolationError("col", c + 1, digit)
        if boxes[b] & bit:
            raise ConstraintViolationError("box", b + 1, digit)
        rows[r] |= bit
        cols[c] |= bit
        boxes[b] |= bit


def _check_entries(size: GridSize, entries: Sequence[int], allow_empty: bool) -> tuple[int, ...]:
    entries = tuple(int(v) for v in entries)
    if len(entries) != size.cell_count:
        raise LengthMismatchError(
            f"expected {size.cell_count} entries, got {len(entries)}"
        )
    low = 0 if allow_empty else 1
    for v in entries:
        if not (low <= v <= size.n):
            raise IllegalCharacterError(f"entry {v} outside [{low}, {size.n}]")
    _scan_units(size, entries)
    return entries


class Grid:
    """A completed board: every row, column, and box holds each digit once."""

    __slots__ = ("size", "_entries")

    def __init__(self, size: GridSize, entries: Iterable[int]):
        self.size = size
        self._entries = _check_entries(size, tuple(entries), allow_empty=False)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "Grid":
        flat = [v for row in rows for v in row]
        return cls(GridSize.of_side(isqrt(len(flat))), flat)

    @property
    def entries(self) -> tuple[int, ...]:
        return self._entries

    def entry(self, row: int, col: int) -> int:
        return self._entries[(row - 1) * self.size.n + (col - 1)]

    def __getitem__(self, cell: Cell) -> int:
        return self.entry(cell.row, cell.col)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Grid)
            and self.size == other.size
            and self._entries == other._entries
        )

    def __hash__(self) -> int:
        return hash((self.size, self._entries))

    def __repr__(self) -> str:
        return f"Grid({self.size.n}x{self.size.n}, {serialize(self)!r})"


class Puzzle:
    """A partially given board; 0 marks an empty cell. Givens may not clash."""

    __slots__ = ("size", "_entries")

    def __init__(self, size: GridSize, entries: Iterable[int]):
        self.size = size
        self._entries = _check_entries(size, tuple(entries), allow_empty=True)

    @property
    def entries(self) -> tuple[int, ...]:
        return self._entries

    def entry(self, row: int, col: int) -> int:
        return self._entries[(row - 1) * self.size.n + (col - 1)]

    def __getitem__(self, cell: Cell) -> int:
        return self.entry(cell.row, cell.col)

    @property
    def givens_count(self) -> int:
        return sum(1 for v in self._entries if v)

    def given_cells(self) -> list[Cell]:
        n = self.size.n
        return [
            Cell(i // n + 1, i % n + 1) for i, v in enumerate(self._entries) if v
        ]

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Puzzle)
            and self.size == other.size
            and self._entries == other._entries
        )

    def __hash__(self) -> int:
        return hash((self.size, self._entries))

    def __repr__(self) -> str:
        return f"Puzzle({self.size.n}x{self.size.n}, {serialize(self)!r})"


class CluePattern:
    """A boolean mask over cells selecting which entries are revealed."""

    __slots__ = ("size", "_mask")

    def __init__(self, size: GridSize, mask: Iterable[bool]):
        self.size = size
        self._mask = tuple(bool(v) for v in mask)
        if len(self._mask) != size.cell_count:
            raise LengthMismatchError(
                f"expected {size.cell_count} mask entries, got {len(self._mask)}"
            )

    @classmethod
    def from_cells(cls, size: GridSize, cells: Iterable[Cell]) -> "CluePattern":
        mask = [False] * size.cell_count
        for cell in cells:
            size.check_cell(cell)
            mask[(cell.row - 1) * size.n + (cell.col - 1)] = True
        return cls(size, mask)

    @classmethod
    def all_cells(cls, size: GridSize) -> "CluePattern":
        return cls(size, [True] * size.cell_count)

    @classmethod
    def no_cells(cls, size: GridSize) -> "CluePattern":
        return cls(size, [False] * size.cell_count)

    @property
    def mask(self) -> tuple[bool, ...]:
        return self._mask

    def cardinality(self) -> int:
        return sum(self._mask)

    def is_set(self, row: int, col: int) -> bool:
        return self._mask[(row - 1) * self.size.n + (col - 1)]

    def cells(self) -> list[Cell]:
        n = self.size.n
        return [Cell(i // n + 1, i % n + 1) for i, v in enumerate(self._mask) if v]

    def without(self, cells: Iterable[Cell]) -> "CluePattern":
        mask = list(self._mask)
        for cell in cells:
            self.size.check_cell(cell)
            mask[(cell.row - 1) * self.size.n + (cell.col - 1)] = False
        return CluePattern(self.size, mask)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CluePattern)
            and self.size == other.size
            and self._mask == other._mask
        )

    def __hash__(self) -> int:
        return hash((self.size, self._mask))

    def __repr__(self) -> str:
        return f"CluePattern({self.size.n}x{self.size.n}, {self.cardinality()} cells)"


def _parse_entries(text: str, size: GridSize, allow_empty: bool) -> list[int]:
    """Digits 1..n, one character per cell for n <= 9; comma separated above.

    '.' and '0' both denote an empty cell on input.
    """
    entries: list[int] = []
    if size.n <= 9:
        if len(text) != size.cell_count:
            raise LengthMismatchError(
                f"expected {size.cell_count} characters, got {len(text)}"
            )
        for ch in text:
            if ch in ".0":
                entries.append(0)
            elif ch.isdigit() and 1 <= int(ch) <= size.n:
                entries.append(int(ch))
            else:
                raise IllegalCharacterError(f"illegal character {ch!r}")
    else:
        tokens = text.split(",")
        if len(tokens) != size.cell_count:
            raise LengthMismatchError(
                f"expected {size.cell_count} comma-separated entries, got {len(tokens)}"
            )
        for tok in tokens:
            tok = tok.strip()
            if tok in (".", "0", ""):
                entries.append(0)
            else:
                try:
                    v = int(tok)
                except ValueError:
                    raise IllegalCharacterError(f"illegal entry {tok!r}") from None
                if not (1 <= v <= size.n):
                    raise IllegalCharacterError(f"entry {v} outside [1, {size.n}]")
                entries.append(v)
    if not allow_empty and any(v == 0 for v in entries):
        raise IllegalCharacterError("empty cell in a completed grid")
    return entries


def parse_grid(text: str, size: GridSize) -> Grid:
    """Parse a single-line completed grid; rejects any constraint violation."""
    return Grid(size, _parse_entries(text, size, allow_empty=False))


def parse_puzzle(text: str, size: GridSize) -> Puzzle:
    """Parse a single-line puzzle; '.' or '0' mark empty cells."""
    return Puzzle(size, _parse_entries(text, size, allow_empty=True))


def serialize(board: Union[Grid, Puzzle]) -> str:
    """Single-line text form; round-trips bit-exact with the parsers.

    Empty puzzle cells serialize as '.'.
    """
    n = board.size.n
    if n <= 9:
        return "".join("." if v == 0 else str(v) for v in board.entries)
    return ",".join("." if v == 0 else str(v) for v in board.entries)


def apply_pattern(grid: Grid, pattern: CluePattern) -> Puzzle:
    """Puzzle revealing exactly the grid entries selected by the pattern."""
    if grid.size != pattern.size:
        raise SizeMismatchError(
            f"grid is {grid.size.n}x{grid.size.n}, pattern is {pattern.size.n}x{pattern.size.n}"
        )
    return Puzzle(
        grid.size,
        [v if keep else 0 for v, keep in zip(grid.entries, pattern.mask)],
    )


def infer_size(token: str) -> GridSize:
    """Board size implied by one instance token of the grid file format."""
    count = len(token.split(",")) if "," in token else len(token)
    n = isqrt(count)
    if n * n != count:
        raise LengthMismatchError(f"token length {count} is not a square cell count")
    return GridSize.of_side(n)


def iter_instance_lines(path) -> Iterator[tuple[int, str]]:
    """Yield (line_number, instance_token) from a grid/puzzle file.

    One instance per line; anything after the first whitespace is a comment.
    Blank lines and lines starting with '#' are skipped.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, stripped.split()[0]
