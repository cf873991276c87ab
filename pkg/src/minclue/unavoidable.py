"""Minimal unavoidable sets: discovery, shrinking, storage.

An unavoidable set of a completed grid is a cell set on which some other
completed grid differs while agreeing everywhere else; every puzzle whose
unique solution is the grid must reveal at least one cell of each such set.
The generator walks deviation distances m = 1, 2, 3, ... and excludes every
previously found set, so each emitted set is minimal and the run eventually
exhausts all minimal sets (subject to the configured limits).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from time import perf_counter
from typing import Callable, Iterable, Optional

from .engine import (
    DeviationConstraint,
    SearchBudget,
    SearchInterrupted,
    SearchStats,
    find_alternate,
    find_deviating_grid,
)
from .grid import Cell, CluePattern, Grid, GridError, serialize

__all__ = [
    "UnavoidableSet",
    "SetRecord",
    "UnavoidableCollection",
    "GenerationLimits",
    "IdenticalGridsError",
    "NotUnavoidableError",
    "FingerprintMismatchError",
    "CorruptCollectionError",
    "grid_fingerprint",
    "diff_cells",
    "is_unavoidable",
    "minimalize",
    "generate_all",
    "save_collection",
    "load_collection",
]

# Deletion-based minimality re-check of every stored set; expensive, meant
# for test runs (see tests enabling it around the generator and solver).
VERIFY_MINIMALITY = False


class IdenticalGridsError(ValueError):
    pass


class NotUnavoidableError(ValueError):
    pass


class FingerprintMismatchError(ValueError):
    pass


class CorruptCollectionError(ValueError):
    pass


def grid_fingerprint(grid: Grid) -> str:
    """Stable 64-bit hash of the serialized grid, as 16 hex digits."""
    return hashlib.blake2b(serialize(grid).encode("ascii"), digest_size=8).hexdigest()


class UnavoidableSet:
    """An immutable, canonically sorted set of cells."""

    __slots__ = ("cells",)

    def __init__(self, cells: Iterable[Cell]):
        self.cells: tuple[Cell, ...] = tuple(sorted(set(cells)))
        if not self.cells:
            raise GridError("an unavoidable set cannot be empty")

    @property
    def size(self) -> int:
        return len(self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __contains__(self, cell: Cell) -> bool:
        return cell in self.cells

    def as_frozenset(self) -> frozenset[Cell]:
        return frozenset(self.cells)

    def issubset(self, other: "UnavoidableSet") -> bool:
        return set(self.cells) <= set(other.cells)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, UnavoidableSet) and self.cells == other.cells

    def __hash__(self) -> int:
        return hash(self.cells)

    def __repr__(self) -> str:
        inner = " ".join(f"{c.row},{c.col}" for c in self.cells)
        return f"UnavoidableSet[{inner}]"


@dataclass(frozen=True)
class SetRecord:
    """One stored set plus its generation metadata."""

    cells: UnavoidableSet
    index: int
    discovered_size: int
    seconds: float


class UnavoidableCollection:
    """Insertion-ordered store of minimal unavoidable sets of one grid.

    Members form an antichain (no member contains another); violated inserts
    raise CorruptCollectionError. `complete` is False when generation was cut
    short by a limit rather than exhausting the requested size range.
    """

    def __init__(self, fingerprint: str, n: int, complete: bool = True):
        self.fingerprint = fingerprint
        self.n = n
        self.complete = complete
        self._records: list[SetRecord] = []
        self._family: list[frozenset[Cell]] = []

    def add(self, record: SetRecord) -> None:
        new = record.cells.as_frozenset()
        for existing in self._family:
            if existing <= new or new <= existing:
                raise CorruptCollectionError(
                    f"antichain violated: {record.cells} vs stored member"
                )
        self._records.append(record)
        self._family.append(new)

    @property
    def records(self) -> tuple[SetRecord, ...]:
        return tuple(self._records)

    @property
    def sets(self) -> tuple[UnavoidableSet, ...]:
        return tuple(r.cells for r in self._records)

    def family(self) -> list[frozenset[Cell]]:
        return list(self._family)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self.sets)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, UnavoidableCollection)
            and self.fingerprint == other.fingerprint
            and self.n == other.n
            and self.complete == other.complete
            and self.records == other.records
        )

    def __repr__(self) -> str:
        return (
            f"UnavoidableCollection(n={self.n}, sets={len(self)}, "
            f"complete={self.complete})"
        )


@dataclass(frozen=True)
class GenerationLimits:
    """Stop conditions for generate_all."""

    max_sets: int = 5000
    max_size: Optional[int] = None
    max_time: Optional[float] = None

    def __post_init__(self) -> None:
        if self.max_sets < 1:
            raise ValueError("max_sets must be at least 1")


def diff_cells(g: Grid, g2: Grid) -> UnavoidableSet:
    """Cells where the two grids differ (unavoidable for either grid)."""
    if g.size != g2.size:
        raise GridError("grids differ in size")
    n = g.size.n
    cells = [
        Cell(i // n + 1, i % n + 1)
        for i, (a, b) in enumerate(zip(g.entries, g2.entries))
        if a != b
    ]
    if not cells:
        raise IdenticalGridsError("grids are identical")
    return UnavoidableSet(cells)


def is_unavoidable(
    g: Grid,
    cells: Iterable[Cell],
    budget: Optional[SearchBudget] = None,
) -> bool:
    """True iff some other grid agrees with g everywhere outside `cells`."""
    pattern = CluePattern.all_cells(g.size).without(cells)
    return find_alternate(g, pattern, budget) is not None


def minimalize(
    g: Grid,
    cells: Iterable[Cell],
    budget: Optional[SearchBudget] = None,
) -> UnavoidableSet:
    """Shrink an unavoidable set until no single cell can be dropped.

    Deletions are attempted from the canonically last cell backwards, so the
    survivor is biased toward the earliest rows and columns.
    """
    keep = set(cells)
    if not is_unavoidable(g, keep, budget):
        raise NotUnavoidableError(f"{sorted(keep)} is not unavoidable")
    for cell in sorted(keep, reverse=True):
        trial = keep - {cell}
        if trial and is_unavoidable(g, trial, budget):
            keep = trial
    return UnavoidableSet(keep)


def generate_all(
    g: Grid,
    limits: GenerationLimits = GenerationLimits(),
    progress: Optional[Callable[[int, int, float], None]] = None,
    stats: Optional[SearchStats] = None,
) -> UnavoidableCollection:
    """Enumerate minimal unavoidable sets in nondecreasing size order.

    For each deviation distance m the search is re-run with all previously
    emitted sets excluded until no further grid exists at that distance;
    excluding emitted sets guarantees each new set is itself minimal, so no
    shrinking pass is needed. `progress` receives (set_index, m, seconds)
    per emitted set. A time limit cuts the run short and flags the
    collection incomplete rather than returning a wrong answer.
    """
    collection = UnavoidableCollection(grid_fingerprint(g), g.size.n)
    started = perf_counter()
    total_nodes = 0
    max_size = limits.max_size if limits.max_size is not None else g.size.cell_count
    max_size = min(max_size, g.size.cell_count)
    nogoods: list[frozenset[Cell]] = []
    m = 1
    try:
        while m <= max_size:
            remaining: Optional[float] = None
            if limits.max_time is not None:
                remaining = limits.max_time - (perf_counter() - started)
                if remaining <= 0:
                    raise SearchInterrupted("time", total_nodes)
            call_stats = SearchStats()
            found = find_deviating_grid(
                DeviationConstraint(g, m, tuple(nogoods)),
                SearchBudget(max_time=remaining),
                call_stats,
            )
            total_nodes += call_stats.nodes
            if found is None:
                m += 1
                continue
            elapsed = perf_counter() - started
            cells = diff_cells(g, found)
            if VERIFY_MINIMALITY and minimalize(g, cells.cells) != cells:
                raise AssertionError(f"generator emitted a non-minimal set {cells}")
            record = SetRecord(cells, len(collection), m, elapsed)
            collection.add(record)
            nogoods.append(cells.as_frozenset())
            if progress is not None:
                progress(record.index, m, elapsed)
            if len(collection) >= limits.max_sets:
                collection.complete = False
                break
    except SearchInterrupted:
        collection.complete = False
    if stats is not None:
        stats.nodes = total_nodes
        stats.elapsed = perf_counter() - started
    return collection


_HEADER_PREFIX = "MSCPUNAV v1"


def save_collection(collection: UnavoidableCollection, path) -> None:
    """Plain-text dump: header, then one set per line with its metadata."""
    lines = [
        f"{_HEADER_PREFIX} n={collection.n} fingerprint={collection.fingerprint} "
        f"complete={int(collection.complete)}"
    ]
    for rec in collection.records:
        cells = " ".join(f"{c.row},{c.col}" for c in rec.cells)
        lines.append(
            f"m={rec.cells.size}: {cells} "
            f"# index={rec.index} found_at_m={rec.discovered_size} seconds={rec.seconds!r}"
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_collection(path, grid: Optional[Grid] = None) -> UnavoidableCollection:
    """Read a collection back, verifying header, antichain, and (when a grid
    is supplied) the grid fingerprint."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise CorruptCollectionError("missing collection header")
    header = dict(
        part.split("=", 1) for part in lines[0][len(_HEADER_PREFIX):].split() if "=" in part
    )
    try:
        n = int(header["n"])
        fingerprint = header["fingerprint"]
        complete = bool(int(header.get("complete", "1")))
    except (KeyError, ValueError) as exc:
        raise CorruptCollectionError(f"bad header: {lines[0]!r}") from exc
    if grid is not None and grid_fingerprint(grid) != fingerprint:
        raise FingerprintMismatchError(
            "collection was generated from a different grid"
        )
    collection = UnavoidableCollection(fingerprint, n, complete)
    for lineno, line in enumerate(lines[1:], start=2):
        body, _, comment = line.partition("#")
        head, _, cell_text = body.partition(":")
        if not head.strip().startswith("m="):
            raise CorruptCollectionError(f"line {lineno}: expected 'm=<size>:'")
        try:
            declared = int(head.strip()[2:])
            cells = [
                Cell(int(r), int(c))
                for r, c in (tok.split(",") for tok in cell_text.split())
            ]
        except (ValueError, GridError) as exc:
            raise CorruptCollectionError(f"line {lineno}: {exc}") from exc
        meta = dict(
            part.split("=", 1) for part in comment.split() if "=" in part
        )
        if len(cells) != declared or len(set(cells)) != declared:
            raise CorruptCollectionError(
                f"line {lineno}: declared size {declared} does not match cells"
            )
        for cell in cells:
            if cell.row > n or cell.col > n:
                raise CorruptCollectionError(f"line {lineno}: cell {cell} out of bounds")
        try:
            record = SetRecord(
                UnavoidableSet(cells),
                index=int(meta.get("index", len(collection))),
                discovered_size=int(meta.get("found_at_m", declared)),
                seconds=float(meta.get("seconds", 0.0)),
            )
        except ValueError as exc:
            raise CorruptCollectionError(f"line {lineno}: bad metadata") from exc
        collection.add(record)
    return collection
