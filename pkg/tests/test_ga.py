import itertools
from collections import Counter

import numpy as np
import pytest

from afslab.coverage import evaluate_plan
from afslab.datasets import sioux_falls_instance
from afslab.exact import brute_force
from afslab.ga import (
    FitnessCache,
    GAConfig,
    Individual,
    fusion_crossover,
    mutate_worst,
    repair_budget,
    replace,
    run_ga,
    tournament_select,
)

from test_exact import random_instance


def ind(bits, fitness):
    return Individual(np.array(bits, dtype=bool), float(fitness))


def test_tournament_picks_pool_winner():
    rng = np.random.default_rng(0)
    pop = [ind([1, 0], 1), ind([0, 1], 5), ind([1, 1], 2), ind([0, 0], 3)]
    for _ in range(200):
        a, b = tournament_select(pop, rng)
        assert 5.0 in (a.fitness, b.fitness)
        assert 1.0 not in (a.fitness, b.fitness)


def _exact_first_parent_distribution(fitness):
    counts = Counter()
    perms = list(itertools.permutations(range(len(fitness)), 4))
    for a, b, c, d in perms:
        counts[a if fitness[a] >= fitness[b] else b] += 1
    return {k: v / len(perms) for k, v in counts.items()}


def test_tournament_frequencies_match_enumeration():
    fitness = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    pop = [ind([i & 1, i & 2, i & 4], f) for i, f in enumerate(fitness)]
    expected = _exact_first_parent_distribution(fitness)
    rng = np.random.default_rng(1)
    draws = 10_000
    seen = Counter()
    for _ in range(draws):
        p1, _ = tournament_select(pop, rng)
        seen[fitness.index(p1.fitness)] += 1
    for k in range(6):
        p = expected.get(k, 0.0)
        sigma = np.sqrt(p * (1 - p) / draws)
        assert abs(seen[k] / draws - p) <= 4 * sigma + 1e-12


def test_tournament_uniform_when_tied():
    pop = [ind([i & 1, i & 2, i & 4], 1.0) for i in range(6)]
    rng = np.random.default_rng(2)
    seen = Counter()
    for _ in range(12_000):
        p1, p2 = tournament_select(pop, rng)
        seen[id(p1)] += 1
        seen[id(p2)] += 1
    freqs = np.array([seen[id(p)] for p in pop]) / 24_000
    assert np.allclose(freqs, 1 / 6, atol=0.015)


def test_crossover_identical_parents():
    p = ind([1, 0, 1, 1], 2.0)
    q = ind([1, 0, 1, 1], 7.0)
    assert np.array_equal(fusion_crossover(p, q, np.random.default_rng(0)), p.bits)


def test_crossover_weighting():
    rng = np.random.default_rng(3)
    p1, p2 = ind([1, 0, 0], 3.0), ind([0, 0, 0], 1.0)
    hits = sum(fusion_crossover(p1, p2, rng)[0] for _ in range(100_000))
    assert abs(hits / 100_000 - 0.25) <= 0.01


def test_crossover_equal_fitness_fair():
    rng = np.random.default_rng(4)
    p1, p2 = ind([1] * 20, 2.0), ind([0] * 20, 2.0)
    share = np.mean([fusion_crossover(p1, p2, rng).mean() for _ in range(5_000)])
    assert abs(share - 0.5) <= 0.01
    z1, z2 = ind([1, 0], 0.0), ind([0, 1], 0.0)
    share = np.mean([fusion_crossover(z1, z2, rng)[0] for _ in range(20_000)])
    assert abs(share - 0.5) <= 0.02


def test_crossover_agreeing_bits_kept():
    rng = np.random.default_rng(5)
    p1, p2 = ind([1, 1, 0, 0], 1.0), ind([1, 0, 1, 0], 9.0)
    for _ in range(100):
        c = fusion_crossover(p1, p2, rng)
        assert c[0] and not c[3]


def test_whole_solution_crossover():
    rng = np.random.default_rng(6)
    p1, p2 = ind([1, 0], 3.0), ind([0, 1], 1.0)
    kids = [fusion_crossover(p1, p2, rng, per_gene=False) for _ in range(4000)]
    assert all(np.array_equal(k, p1.bits) or np.array_equal(k, p2.bits) for k in kids)
    share = np.mean([np.array_equal(k, p1.bits) for k in kids])
    assert abs(share - 0.25) <= 0.03


def test_mutation_extremes():
    rng = np.random.default_rng(7)
    pop = [ind([1, 0, 1], 5.0), ind([0, 1, 1], 2.0), ind([1, 1, 1], 3.0), ind([0, 0, 0], 4.0)]
    assert np.array_equal(mutate_worst(pop, 0.0, rng), [0, 1, 1])
    assert np.array_equal(mutate_worst(pop, 1.0, rng), [1, 0, 0])


def test_mutation_flip_count():
    rng = np.random.default_rng(8)
    pop = [ind([0] * 24, 1.0), ind([1] * 24, 2.0), ind([1] * 24, 3.0), ind([1] * 24, 4.0)]
    flips = [mutate_worst(pop, 0.05, rng).sum() for _ in range(100_000)]
    assert abs(np.mean(flips) - 1.2) <= 0.05


def test_repair():
    inst = sioux_falls_instance(3)
    rng = np.random.default_rng(9)
    ok = np.zeros(24, dtype=bool)
    ok[[2, 5, 15]] = True
    assert repair_budget(ok, inst, rng).stations == frozenset({3, 6, 16})
    assert len(repair_budget(np.ones(24, dtype=bool), inst, rng)) == 3


def test_repair_never_exceeds_budget():
    inst = random_instance(21, n=8, costs=True).replace(budget=3)
    rng = np.random.default_rng(10)
    n = len(inst.candidates)
    for _ in range(10_000):
        plan = repair_budget(rng.random(n) < 0.6, inst, rng)
        assert plan.cost <= 3


def test_replace_duplicate_and_worst():
    pop = [ind([1, 0], 2.0), ind([0, 1], 1.0), ind([1, 1], 3.0), ind([0, 0], 0.5)]
    assert replace(pop, [ind([1, 1], 3.0)]) == pop
    out = replace(pop, [ind([1, 1], 3.0), ind([0, 0], 0.5)])
    assert out == pop
    newer = replace(pop, [Individual(np.array([True, True, True]), 2.5)])
    assert len(newer) == 4
    assert min(i.fitness for i in newer) == 1.0
    assert any(i.fitness == 2.5 for i in newer)


def test_config_validation():
    with pytest.raises(ValueError):
        GAConfig(population=3)
    with pytest.raises(ValueError):
        GAConfig(mutation_rate=1.5)
    with pytest.raises(ValueError):
        GAConfig(crossover="uniform")
    assert GAConfig().rate(24) == pytest.approx(2 / 24)


def test_elitism_over_seeds():
    inst = sioux_falls_instance(6)
    cache = FitnessCache(inst)
    for seed in range(50):
        res = run_ga(inst, GAConfig(seed=seed, generations=25), cache)
        best = [h[1] for h in res.history]
        assert all(a <= b + 1e-12 for a, b in zip(best, best[1:]))
        assert res.objective == pytest.approx(best[-1])


def test_seed_determinism():
    inst = sioux_falls_instance(5)
    a = run_ga(inst, GAConfig(seed=3, generations=30))
    b = run_ga(inst, GAConfig(seed=3, generations=30))
    assert a.plan == b.plan and a.objective == b.objective and a.history == b.history


def test_full_budget_opens_everything():
    inst = sioux_falls_instance(24)
    res = run_ga(inst, GAConfig(seed=0, generations=5))
    assert res.objective == pytest.approx(evaluate_plan(inst, inst.candidates).objective)


def test_result_is_feasible_and_consistent():
    inst = sioux_falls_instance(4)
    res = run_ga(inst, GAConfig(seed=1, generations=20))
    assert len(res.plan) <= 4
    assert res.objective == pytest.approx(evaluate_plan(inst, res.plan).objective, abs=1e-12)


def test_ga_never_beats_brute_force():
    cfg_runs = 0
    equal = 0
    for seed in range(200):
        inst = random_instance(1000 + seed, n=8)
        best = brute_force(inst).objective
        got = run_ga(inst, GAConfig(seed=seed, population=20, children=5, generations=40)).objective
        assert got <= best + 1e-9
        cfg_runs += 1
        equal += abs(got - best) <= 1e-9
    assert equal / cfg_runs >= 0.9
