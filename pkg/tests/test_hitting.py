import random

import pytest

import oracle
from conftest import BLUE, GREEN, RED
from minclue import (
    Cell,
    GridSize,
    HittingInstance,
    InfeasibleInstanceError,
    SearchBudget,
    disjoint_packing_bound,
    min_hitting_set,
)


def brute_value(universe, family):
    masks = []
    pos = {e: i for i, e in enumerate(universe)}
    for member in family:
        masks.append(sum(1 << pos[e] for e in member))
    k, _ = oracle.min_hitting_brute(masks, list(range(len(universe))))
    return k


class TestExamples:
    def test_empty_family(self, size9):
        sol = min_hitting_set(HittingInstance.build(size9.all_cells(), []))
        assert sol.value == 0 and sol.cells == frozenset() and sol.proven_optimal

    def test_single_green_set(self, size9):
        sol = min_hitting_set(HittingInstance.build(size9.all_cells(), [GREEN]))
        assert sol.value == 1
        assert sol.cells == {Cell(1, 3)}  # canonically smallest member

    def test_three_disjoint_sets(self, size9):
        inst = HittingInstance.build(size9.all_cells(), [GREEN, BLUE, RED])
        sol = min_hitting_set(inst)
        assert sol.value == 3
        assert all(sol.cells & frozenset(s) for s in (GREEN, BLUE, RED))


class TestPackingBound:
    def test_disjoint_triple(self, size9):
        inst = HittingInstance.build(size9.all_cells(), [GREEN, BLUE, RED])
        assert disjoint_packing_bound(inst) == 3

    def test_empty(self, size9):
        assert disjoint_packing_bound(HittingInstance.build(size9.all_cells(), [])) == 0

    def test_shared_cell(self):
        fam = [frozenset({1, 2}), frozenset({1, 3}), frozenset({1, 4, 5})]
        assert disjoint_packing_bound(HittingInstance.build(range(1, 6), fam)) == 1

    def test_always_below_optimum(self):
        rng = random.Random(31)
        for _ in range(200):
            uni = list(range(rng.randint(4, 12)))
            fam = [
                frozenset(rng.sample(uni, rng.randint(1, min(4, len(uni)))))
                for _ in range(rng.randint(1, 10))
            ]
            inst = HittingInstance.build(uni, fam)
            assert disjoint_packing_bound(inst) <= min_hitting_set(inst).value


class TestExactness:
    def test_random_instances_match_brute_force(self):
        rng = random.Random(4096)
        for _ in range(250):
            uni = sorted(rng.sample(range(16), rng.randint(3, 16)))
            fam = [
                frozenset(rng.sample(uni, rng.randint(1, min(5, len(uni)))))
                for _ in range(rng.randint(1, 20))
            ]
            inst = HittingInstance.build(uni, fam)
            sol = min_hitting_set(inst)
            assert sol.proven_optimal and sol.lower_bound == sol.value
            assert sol.value == brute_value(uni, fam)
            assert all(sol.cells & member for member in fam)

    def test_monotone_under_growing_family(self):
        rng = random.Random(5)
        uni = list(range(12))
        fam = []
        prev = 0
        for _ in range(15):
            fam.append(frozenset(rng.sample(uni, rng.randint(1, 4))))
            value = min_hitting_set(HittingInstance.build(uni, fam)).value
            assert value >= prev
            prev = value


class TestForcedCells:
    def test_forced_in_counts_and_hits(self):
        fam = [frozenset({1, 2}), frozenset({3, 4})]
        inst = HittingInstance.build(range(1, 5), fam, forced_in={2})
        sol = min_hitting_set(inst)
        assert 2 in sol.cells and sol.value == 2

    def test_forced_out_infeasible(self):
        fam = [frozenset({1, 2})]
        inst = HittingInstance.build(range(1, 5), fam, forced_out={1, 2})
        with pytest.raises(InfeasibleInstanceError):
            min_hitting_set(inst)
        with pytest.raises(InfeasibleInstanceError):
            disjoint_packing_bound(inst)

    def test_forced_out_avoided(self):
        fam = [frozenset({1, 2}), frozenset({2, 3})]
        sol = min_hitting_set(HittingInstance.build(range(1, 4), fam, forced_out={2}))
        assert sol.cells == {1, 3}


class TestUpperHint:
    def test_hint_equal_to_optimum_still_returns_witness(self):
        fam = [frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})]
        sol = min_hitting_set(HittingInstance.build(range(6), fam), upper_hint=3)
        assert sol.value == 3 and sol.proven_optimal

    def test_bad_hint_detected(self):
        fam = [frozenset({0}), frozenset({1})]
        with pytest.raises(ValueError):
            min_hitting_set(HittingInstance.build(range(2), fam), upper_hint=1)


class TestInterrupt:
    def test_interrupted_is_sound(self):
        rng = random.Random(9)
        uni = list(range(24))
        fam = [frozenset(rng.sample(uni, 4)) for _ in range(40)]
        inst = HittingInstance.build(uni, fam)
        full = min_hitting_set(inst)
        cut = min_hitting_set(inst, budget=SearchBudget(max_nodes=20))
        assert not cut.proven_optimal
        assert cut.lower_bound <= full.value <= cut.value
        assert all(cut.cells & member for member in fam)
