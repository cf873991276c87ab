"""Exact minimum-cardinality hitting set by depth-first branch and bound.

Branching follows the lowest-index set not yet hit, trying its cells in
canonical order; earlier siblings are banned in later branches so the tree
partitions the solution space. The bound is a greedy packing of pairwise
disjoint unhit sets. Deterministic: value ties resolve to the set whose
sorted cell tuple is lexicographically smallest (after the root dominance
reduction). Elements may be Cells or any other orderable hashables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from time import perf_counter
from typing import Iterable, Optional, Sequence

from .engine import SearchBudget, SearchInterrupted, SearchStats, _Ticker

__all__ = [
    "HittingInstance",
    "HittingSolution",
    "InfeasibleInstanceError",
    "min_hitting_set",
    "disjoint_packing_bound",
]


class InfeasibleInstanceError(ValueError):
    """A family member lies entirely inside forced_out."""


@dataclass(frozen=True)
class HittingInstance:
    universe: tuple
    family: tuple[frozenset, ...]
    forced_in: frozenset = field(default_factory=frozenset)
    forced_out: frozenset = field(default_factory=frozenset)

    @classmethod
    def build(
        cls,
        universe: Iterable,
        family: Iterable[Iterable],
        forced_in: Iterable = (),
        forced_out: Iterable = (),
    ) -> "HittingInstance":
        return cls(
            tuple(sorted(set(universe))),
            tuple(frozenset(member) for member in family),
            frozenset(forced_in),
            frozenset(forced_out),
        )


@dataclass(frozen=True)
class HittingSolution:
    cells: frozenset
    value: int
    proven_optimal: bool
    lower_bound: int


def _preprocess(instance: HittingInstance):
    """Apply forced cells; returns the residual family in original order."""
    residual: list[frozenset] = []
    for member in instance.family:
        if member & instance.forced_in:
            continue
        live = member - instance.forced_out
        if not live:
            raise InfeasibleInstanceError(
                f"family member {sorted(member)} is fully forced out"
            )
        residual.append(live)
    return residual


def disjoint_packing_bound(instance: HittingInstance) -> int:
    """Greedy count of pairwise-disjoint family members: a lower bound."""
    residual = _preprocess(instance)
    taken: set = set()
    count = 0
    for member in residual:
        if not member & taken:
            taken |= member
            count += 1
    return count + len(instance.forced_in)


def _pack(masks: Sequence[int], chosen: int) -> int:
    """Greedy disjoint packing of the unhit masks; small sets pack first."""
    packed = 0
    count = 0
    for mask in masks:
        if not mask & chosen and not mask & packed:
            packed |= mask
            count += 1
    return count


def min_hitting_set(
    instance: HittingInstance,
    upper_hint: Optional[int] = None,
    budget: Optional[SearchBudget] = None,
    stats: Optional[SearchStats] = None,
) -> HittingSolution:
    """Minimum-cardinality set meeting every family member.

    `upper_hint`, when given, must be a correct upper bound on the optimum;
    branches that cannot beat it are cut while equal-value solutions remain
    reachable. A budget interrupt returns the best incumbent (not flagged
    optimal) together with a still-sound lower bound over the open nodes.
    """
    t0 = perf_counter()
    residual = _preprocess(instance)
    base = frozenset(instance.forced_in)
    if not residual:
        sol = HittingSolution(base, len(base), True, len(base))
        if stats is not None:
            stats.elapsed = perf_counter() - t0
        return sol

    elements = sorted(set().union(*residual))
    # root-only dominance: drop a cell whose set-membership list is within
    # another cell's (the canonically smaller cell survives exact ties)
    membership: dict = {e: 0 for e in elements}
    for k, member in enumerate(residual):
        bit = 1 << k
        for e in member:
            membership[e] |= bit
    kept = []
    for e in elements:
        me = membership[e]
        dominated = False
        for f in elements:
            if f is e:
                continue
            mf = membership[f]
            if me & ~mf:
                continue
            if me != mf or f < e:
                dominated = True
                break
        if not dominated:
            kept.append(e)

    pos = {e: i for i, e in enumerate(kept)}
    masks = [
        sum(1 << pos[e] for e in member if e in pos) for member in residual
    ]
    pack_order = sorted(masks, key=lambda m: m.bit_count())

    ticker = _Ticker(budget)
    best_mask: Optional[int] = None
    best_value = len(kept) + 1 if upper_hint is None else upper_hint
    offset = len(base)

    # frame: (chosen_mask, chosen_count, banned_mask)
    stack: list[tuple[int, int, int]] = [(0, 0, 0)]
    interrupted = False
    while stack:
        frame = stack.pop()
        try:
            ticker.tick()
        except SearchInterrupted:
            stack.append(frame)  # keep its bound in the interrupt accounting
            interrupted = True
            break
        chosen, count, banned = frame
        target = -1
        for k, mask in enumerate(masks):
            if not mask & chosen:
                target = k
                break
        if target == -1:
            if count < best_value or (count == best_value and best_mask is None):
                best_mask, best_value = chosen, count
            elif count == best_value and chosen != best_mask:
                low = (chosen ^ best_mask) & -(chosen ^ best_mask)
                if chosen & low:
                    best_mask = chosen
            continue
        bound = count + _pack(pack_order, chosen)
        if bound > best_value:
            continue
        live = masks[target] & ~banned
        if not live:
            continue
        children = []
        taken_before = 0
        while live:
            bit = live & -live
            live ^= bit
            children.append((chosen | bit, count + 1, banned | taken_before))
            taken_before |= bit
        stack.extend(reversed(children))

    if stats is not None:
        stats.nodes = ticker.nodes
        stats.elapsed = perf_counter() - t0

    if interrupted:
        open_bounds = []
        for chosen, count, _banned in stack:
            open_bounds.append(count + _pack(pack_order, chosen))
        candidates = open_bounds + ([best_value] if best_mask is not None else [])
        lower = min(candidates) if candidates else 0
        if best_mask is None:
            # greedy fallback keeps the returned cells a genuine hitting set
            best_mask = 0
            for mask in masks:
                if not mask & best_mask:
                    best_mask |= mask & -mask
        cells = base | {kept[i] for i in range(len(kept)) if best_mask >> i & 1}
        return HittingSolution(cells, len(cells), False, min(lower + offset, len(cells)))

    if best_mask is None:
        raise ValueError("upper_hint was below the true optimum")
    cells = base | {kept[i] for i in range(len(kept)) if best_mask >> i & 1}
    return HittingSolution(cells, len(cells), True, len(cells))
