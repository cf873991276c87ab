"""Exact minimum-clue solving via an implicit hitting-set loop.

The loop alternates two exact procedures: a minimum hitting set over the
cut family collected so far (its value is a true lower bound, since every
valid clue pattern must hit every unavoidable set), and an adversarial
search for an alternate solution under the candidate clue set. Either the
adversary fails, which proves the candidate is a valid puzzle of minimum
size, or its answer yields a new minimal cut and the loop repeats. The same
loop solves any fewest-clue problem given an alternate-certificate oracle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from time import perf_counter
from typing import Callable, Optional, Sequence

from .engine import (
    DeviationConstraint,
    SearchBudget,
    SearchInterrupted,
    SearchStats,
    count_solutions,
    find_alternate,
    find_deviating_grid,
)
from .grid import Cell, CluePattern, Grid, apply_pattern
from .hitting import HittingInstance, min_hitting_set
from .unavoidable import (
    FingerprintMismatchError,
    GenerationLimits,
    SetRecord,
    UnavoidableCollection,
    UnavoidableSet,
    generate_all,
    grid_fingerprint,
)

__all__ = [
    "MscpStatus",
    "MscpConfig",
    "TraceEntry",
    "MscpResult",
    "MscpInternalError",
    "verify_validity",
    "solve_mscp",
    "FcpInstance",
    "FcpResult",
    "fcp_solve",
    "sudoku_fcp_instance",
    "latin_square_fcp_instance",
]

log = logging.getLogger("minclue.solver")

# Re-shrink every cut added mid-loop and fail loudly if it was not already
# minimal; meant for test runs.
VERIFY_CUT_MINIMALITY = False


class MscpStatus(Enum):
    OPTIMAL = "optimal"
    BOUNDS_ONLY = "bounds_only"
    INTERRUPTED = "interrupted"


class MscpInternalError(RuntimeError):
    """The loop produced a cut already implied by the certificate."""


@dataclass(frozen=True)
class MscpConfig:
    initial_cuts: int = 1000
    generation_limits: GenerationLimits = field(default_factory=GenerationLimits)
    solve_budget: SearchBudget = field(default_factory=SearchBudget)
    # pre-generated cuts to seed from instead of running the generator;
    # the first `initial_cuts` members are used
    seed_collection: Optional[UnavoidableCollection] = None


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    lower: int
    upper: int
    certificate_size: int
    elapsed: float


@dataclass
class MscpResult:
    status: MscpStatus
    best_pattern: CluePattern
    upper_bound: int
    lower_bound: int
    certificate: UnavoidableCollection
    iterations: int
    trace: list[TraceEntry]
    nodes: int = 0

    @property
    def optimum(self) -> Optional[int]:
        return self.upper_bound if self.status is MscpStatus.OPTIMAL else None


def verify_validity(
    g: Grid, pattern: CluePattern, budget: Optional[SearchBudget] = None
) -> bool:
    """True iff the pattern's puzzle has exactly one completion (= g)."""
    return count_solutions(apply_pattern(g, pattern), 2, budget) == 1


class _Expired(Exception):
    pass


class _LoopBudget:
    """Wall clock and cumulative node budget shared across loop phases."""

    def __init__(self, budget: SearchBudget):
        self.deadline = (
            perf_counter() + budget.max_time if budget.max_time is not None else None
        )
        self.max_nodes = budget.max_nodes
        self.used_nodes = 0

    def check(self) -> None:
        if self.deadline is not None and perf_counter() > self.deadline:
            raise _Expired
        if self.max_nodes is not None and self.used_nodes >= self.max_nodes:
            raise _Expired

    def call_budget(self) -> SearchBudget:
        self.check()
        remaining_time = (
            self.deadline - perf_counter() if self.deadline is not None else None
        )
        remaining_nodes = (
            self.max_nodes - self.used_nodes if self.max_nodes is not None else None
        )
        return SearchBudget(max_nodes=remaining_nodes, max_time=remaining_time)

    def charge(self, stats: SearchStats) -> None:
        self.used_nodes += stats.nodes


@dataclass
class _LoopOutcome:
    status: MscpStatus
    best: frozenset
    lower: int
    upper: int
    cuts: list[frozenset]
    iterations: int
    trace: list[TraceEntry]
    nodes: int


def _shrink(diff: frozenset, still_unavoidable: Callable[[frozenset], bool]) -> frozenset:
    """Deletion-based minimization, dropping canonically later keys first."""
    keep = set(diff)
    for key in sorted(keep, reverse=True):
        trial = keep - {key}
        if trial and still_unavoidable(frozenset(trial)):
            keep = trial
    return frozenset(keep)


def _ihs_loop(
    universe: Sequence,
    find_diff: Callable[[frozenset, _LoopBudget], Optional[frozenset]],
    seeds: list[frozenset],
    budget: _LoopBudget,
) -> _LoopOutcome:
    """Implicit hitting-set loop shared by the Sudoku and generic paths.

    `find_diff(revealed, budget)` returns the index/cell set on which some
    alternate solution differs, or None when the revealed set pins the
    target uniquely.
    """
    started = perf_counter()
    universe = tuple(sorted(universe))
    universe_set = frozenset(universe)
    cuts: list[frozenset] = list(seeds)
    incumbent = universe_set
    upper = len(incumbent)
    lower = 0
    solved_once = False
    trace: list[TraceEntry] = []
    iteration = 0
    last_repair_lower = -1

    def note(it: int) -> None:
        trace.append(
            TraceEntry(it, lower, upper, len(cuts), perf_counter() - started)
        )

    def repair(start: frozenset, first_diff: frozenset) -> Optional[frozenset]:
        cells = set(start)
        diff = first_diff
        while len(cells) < len(universe):
            cells.add(min(diff))
            nxt = find_diff(frozenset(cells), budget)
            if nxt is None:
                return frozenset(cells)
            diff = nxt
        return frozenset(universe)

    status = MscpStatus.BOUNDS_ONLY
    try:
        while True:
            iteration += 1
            stats = SearchStats()
            solution = min_hitting_set(
                HittingInstance.build(universe, cuts),
                upper_hint=upper,
                budget=budget.call_budget(),
                stats=stats,
            )
            budget.charge(stats)
            if not solution.proven_optimal:
                lower = max(lower, solution.lower_bound)
                status = (
                    MscpStatus.BOUNDS_ONLY if solved_once else MscpStatus.INTERRUPTED
                )
                note(iteration)
                break
            solved_once = True
            if solution.value < lower:
                raise MscpInternalError(
                    "hitting-set optimum decreased as the family grew"
                )
            lower = solution.value
            log.debug(
                "iteration %d: lower=%d upper=%d cuts=%d",
                iteration,
                lower,
                upper,
                len(cuts),
            )
            if lower >= upper:
                status = MscpStatus.OPTIMAL
                note(iteration)
                break
            candidate = frozenset(solution.cells)
            diff = find_diff(candidate, budget)
            if diff is None:
                incumbent = candidate
                upper = lower
                status = MscpStatus.OPTIMAL
                note(iteration)
                break
            cut = _shrink(
                diff, lambda trial: find_diff(universe_set - trial, budget) is not None
            )
            if not cut or cut & candidate:
                raise MscpInternalError("cut does not separate the hitting set")
            for existing in cuts:
                if existing <= cut or cut <= existing:
                    raise MscpInternalError("cut already implied by the certificate")
            cuts.append(cut)
            if lower + 1 < upper and lower > last_repair_lower:
                last_repair_lower = lower
                repaired = repair(candidate, diff)
                if repaired is not None and len(repaired) < upper:
                    incumbent = repaired
                    upper = len(repaired)
            note(iteration)
    except _Expired:
        status = MscpStatus.BOUNDS_ONLY if solved_once else MscpStatus.INTERRUPTED
        note(iteration)

    return _LoopOutcome(
        status, incumbent, lower, upper, cuts, iteration, trace, budget.used_nodes
    )


def solve_mscp(g: Grid, config: Optional[MscpConfig] = None) -> MscpResult:
    """Minimum number of clues (with witness pattern) pinning g uniquely.

    Seeds the cut family from the unavoidable-set generator, then runs the
    hitting-set loop to optimality or budget exhaustion. The result's
    certificate collection contains every cut used, each a minimal
    unavoidable set of g.
    """
    cfg = config or MscpConfig()
    budget = _LoopBudget(cfg.solve_budget)
    started = perf_counter()

    seeds: list[frozenset] = []
    seed_records: list[SetRecord] = []
    if cfg.seed_collection is not None and cfg.initial_cuts > 0:
        if cfg.seed_collection.fingerprint != grid_fingerprint(g):
            raise FingerprintMismatchError(
                "seed collection was generated from a different grid"
            )
        seed_records = list(cfg.seed_collection.records[: cfg.initial_cuts])
        seeds = [rec.cells.as_frozenset() for rec in seed_records]
    elif cfg.initial_cuts > 0:
        gen_limits = GenerationLimits(
            max_sets=min(cfg.initial_cuts, cfg.generation_limits.max_sets),
            max_size=cfg.generation_limits.max_size,
            max_time=_min_opt(
                cfg.generation_limits.max_time,
                cfg.solve_budget.max_time,
            ),
        )
        gen_stats = SearchStats()
        seeded = generate_all(g, gen_limits, stats=gen_stats)
        budget.charge(gen_stats)
        seed_records = list(seeded.records)
        seeds = seeded.family()
        log.debug("seeded %d cuts in %.2fs", len(seeds), gen_stats.elapsed)

    def find_diff(revealed: frozenset, loop_budget: _LoopBudget) -> Optional[frozenset]:
        stats = SearchStats()
        pattern = CluePattern.from_cells(g.size, revealed)
        try:
            alt = find_alternate(g, pattern, loop_budget.call_budget(), stats)
        except SearchInterrupted:
            loop_budget.charge(stats)
            raise _Expired from None
        loop_budget.charge(stats)
        if alt is None:
            return None
        n = g.size.n
        return frozenset(
            Cell(i // n + 1, i % n + 1)
            for i, (a, b) in enumerate(zip(alt.entries, g.entries))
            if a != b
        )

    outcome = _ihs_loop(g.size.all_cells(), find_diff, seeds, budget)

    certificate = UnavoidableCollection(grid_fingerprint(g), g.size.n)
    for rec in seed_records:
        certificate.add(rec)
    for k, cut in enumerate(outcome.cuts[len(seeds):]):
        cells = UnavoidableSet(cut)
        if VERIFY_CUT_MINIMALITY:
            from .unavoidable import minimalize

            if minimalize(g, cells.cells) != cells:
                raise MscpInternalError(f"loop produced a non-minimal cut {cells}")
        certificate.add(
            SetRecord(
                cells,
                index=len(seed_records) + k,
                discovered_size=cells.size,
                seconds=perf_counter() - started,
            )
        )

    return MscpResult(
        status=outcome.status,
        best_pattern=CluePattern.from_cells(g.size, outcome.best),
        upper_bound=outcome.upper,
        lower_bound=outcome.lower,
        certificate=certificate,
        iterations=outcome.iterations,
        trace=outcome.trace,
        nodes=outcome.nodes,
    )


def _min_opt(a: Optional[float], b: Optional[float]) -> Optional[float]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


@dataclass(frozen=True)
class FcpInstance:
    """A fewest-clue problem over an arbitrary certificate.

    `target` is the certificate to pin down, one symbol per index.
    `alternate_finder(revealed)` must return a different certificate that
    agrees with the target on every revealed index, or None when none
    exists. `deviation_finder(m, nogoods)`, when provided, returns a
    certificate differing from the target in exactly m indices while
    agreeing with it on at least one index of every nogood set; it powers
    cut seeding exactly like the Sudoku generator.
    """

    target: tuple
    alternate_finder: Callable[[frozenset], Optional[Sequence]]
    deviation_finder: Optional[
        Callable[[int, tuple[frozenset, ...]], Optional[Sequence]]
    ] = None
    name: str = "fcp"

    @property
    def length(self) -> int:
        return len(self.target)


@dataclass
class FcpResult:
    status: MscpStatus
    best_clue: frozenset
    upper_bound: int
    lower_bound: int
    certificate: tuple[frozenset, ...]
    iterations: int
    trace: list[TraceEntry]
    nodes: int = 0


def fcp_solve(instance: FcpInstance, config: Optional[MscpConfig] = None) -> FcpResult:
    """Fewest revealed indices whose unique consistent certificate is the
    instance target; same loop as solve_mscp over certificate indices."""
    cfg = config or MscpConfig()
    target = tuple(instance.target)
    l = len(target)
    if instance.alternate_finder(frozenset(range(l))) is not None:
        raise ValueError("target certificate is not uniquely pinned by a full reveal")
    budget = _LoopBudget(cfg.solve_budget)

    def diff_of(candidate: Sequence) -> frozenset:
        cand = tuple(candidate)
        if len(cand) != l:
            raise ValueError("alternate certificate has wrong length")
        out = frozenset(i for i in range(l) if cand[i] != target[i])
        if not out:
            raise ValueError("alternate certificate equals the target")
        return out

    def find_diff(revealed: frozenset, loop_budget: _LoopBudget) -> Optional[frozenset]:
        loop_budget.check()
        alt = instance.alternate_finder(frozenset(revealed))
        if alt is None:
            return None
        diff = diff_of(alt)
        if diff & revealed:
            raise ValueError("alternate certificate violates the revealed clue")
        return diff

    seeds: list[frozenset] = []
    if instance.deviation_finder is not None and cfg.initial_cuts > 0:
        max_size = cfg.generation_limits.max_size or l
        m = 1
        while m <= min(max_size, l) and len(seeds) < min(
            cfg.initial_cuts, cfg.generation_limits.max_sets
        ):
            budget.check()
            found = instance.deviation_finder(m, tuple(seeds))
            if found is None:
                m += 1
                continue
            seeds.append(diff_of(found))

    outcome = _ihs_loop(range(l), find_diff, seeds, budget)
    return FcpResult(
        status=outcome.status,
        best_clue=outcome.best,
        upper_bound=outcome.upper,
        lower_bound=outcome.lower,
        certificate=tuple(outcome.cuts),
        iterations=outcome.iterations,
        trace=outcome.trace,
        nodes=outcome.nodes,
    )


def sudoku_fcp_instance(grid: Grid) -> FcpInstance:
    """Wrap a Sudoku grid as a fewest-clue instance, one index per cell."""
    n = grid.size.n

    def cells_of(indices: frozenset) -> list[Cell]:
        return [Cell(i // n + 1, i % n + 1) for i in sorted(indices)]

    def alternate(revealed: frozenset) -> Optional[tuple]:
        pattern = CluePattern.from_cells(grid.size, cells_of(revealed))
        alt = find_alternate(grid, pattern)
        return None if alt is None else alt.entries

    def deviate(m: int, nogoods: tuple[frozenset, ...]) -> Optional[tuple]:
        constraint = DeviationConstraint(
            grid,
            m,
            tuple(frozenset(cells_of(group)) for group in nogoods),
        )
        found = find_deviating_grid(constraint)
        return None if found is None else found.entries

    return FcpInstance(grid.entries, alternate, deviate, name=f"sudoku{n}")


def latin_square_fcp_instance(square: Sequence[int]) -> FcpInstance:
    """Fewest-clue instance for an order-n Latin square (no box constraint)."""
    target = tuple(int(v) for v in square)
    l = len(target)
    n = 1
    while n * n < l:
        n += 1
    if n * n != l:
        raise ValueError("square length is not a perfect square")
    for i in range(n):
        row = target[i * n : (i + 1) * n]
        col = target[i::n]
        if sorted(row) != list(range(1, n + 1)) or sorted(col) != list(range(1, n + 1)):
            raise ValueError("target is not a Latin square over 1..n")
    full = (1 << n) - 1

    def alternate(revealed: frozenset) -> Optional[tuple]:
        values = [target[i] if i in revealed else 0 for i in range(l)]
        rows = [0] * n
        cols = [0] * n
        for i, v in enumerate(values):
            if v:
                bit = 1 << (v - 1)
                if rows[i // n] & bit or cols[i % n] & bit:
                    return None
                rows[i // n] |= bit
                cols[i % n] |= bit
        empties = [i for i in range(l) if not values[i]]

        def rec(k: int) -> Optional[tuple]:
            if k == len(empties):
                done = tuple(values)
                return None if done == target else done
            i = empties[k]
            r, c = i // n, i % n
            cand = ~(rows[r] | cols[c]) & full
            while cand:
                bit = cand & -cand
                cand ^= bit
                values[i] = bit.bit_length()
                rows[r] |= bit
                cols[c] |= bit
                found = rec(k + 1)
                values[i] = 0
                rows[r] ^= bit
                cols[c] ^= bit
                if found is not None:
                    return found
            return None

        return rec(0)

    return FcpInstance(target, alternate, name=f"latin{n}")
