"""Steady-state genetic algorithm over station bitstrings.

Each generation breeds ``children`` crossover children (binary tournament
parents, fitness-weighted fusion) and as many mutants of the current worst
member; the best distinct children then replace the worst members.  Children
over budget are repaired by closing their least valuable stations, and the
fitness of a child is the exact objective of its repaired plan.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .coverage import Instance
from .exact import SolveResult, greedy_plan, singleton_gains
from .refuel import EPS, StationPlan


@dataclass(frozen=True)
class GAConfig:
    population: int = 100
    generations: int = 200
    children: int = 10
    mutation_rate: float | None = None  # None -> 2 / number of candidates
    seed: int = 0
    crossover: str = "gene"  # "gene" (per-bit fusion) or "whole" (child copies one parent)

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must hold at least 4 individuals")
        if self.children < 1 or self.children >= self.population:
            raise ValueError("children per generation must be in [1, population)")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation rate must lie in [0, 1]")
        if self.crossover not in ("gene", "whole"):
            raise ValueError("crossover must be 'gene' or 'whole'")

    def rate(self, n: int) -> float:
        return self.mutation_rate if self.mutation_rate is not None else min(1.0, 2.0 / n)


@dataclass
class Individual:
    bits: np.ndarray
    fitness: float

    @property
    def key(self) -> bytes:
        return self.bits.tobytes()


@dataclass
class FitnessCache:
    """Objective values by repaired plan; shareable across runs on one instance."""

    inst: Instance
    values: dict = field(default_factory=dict)
    evaluations: int = 0

    def __call__(self, masks: list[np.ndarray]) -> list[float]:
        todo = [m for m in {m.tobytes(): m for m in masks}.values() if m.tobytes() not in self.values]
        if todo:
            vals = self.inst.model.objectives(np.array(todo))
            self.evaluations += len(todo)
            for m, v in zip(todo, vals):
                self.values[m.tobytes()] = float(v)
        return [self.values[m.tobytes()] for m in masks]


def _repair(bits: np.ndarray, cost: np.ndarray, budget: float, gains: np.ndarray, rng) -> np.ndarray:
    bits = bits.copy()
    spent = float(cost[bits].sum())
    while spent > budget + EPS:
        open_idx = np.flatnonzero(bits)
        g = gains[open_idx]
        ties = open_idx[g <= g.min() + 1e-12]
        drop = ties[0] if len(ties) == 1 else rng.choice(ties)
        bits[drop] = False
        spent -= cost[drop]
    return bits


def repair_budget(bitstring, inst: Instance, rng, gains: np.ndarray | None = None) -> StationPlan:
    """Close the lowest singleton-gain stations until the plan is affordable."""
    model = inst.model
    if gains is None:
        gains = singleton_gains(model)
    bits = _repair(np.asarray(bitstring, dtype=bool), model.cost, inst.budget, gains, rng)
    return inst.plan(model.stations(bits))


def tournament_select(population: list[Individual], rng) -> tuple[Individual, Individual]:
    a, b, c, d = rng.choice(len(population), size=4, replace=False)
    pa, pb, pc, pd = (population[i] for i in (a, b, c, d))
    first = pa if pa.fitness >= pb.fitness else pb
    second = pc if pc.fitness >= pd.fitness else pd
    return first, second


def fusion_crossover(p1: Individual, p2: Individual, rng, per_gene: bool = True) -> np.ndarray:
    """Child takes P1's value with probability f2 / (f1 + f2) wherever the parents differ."""
    if np.array_equal(p1.bits, p2.bits):
        return p1.bits.copy()
    total = p1.fitness + p2.fitness
    take_p1 = p2.fitness / total if total > 0 else 0.5
    if not per_gene:
        return (p1 if rng.random() < take_p1 else p2).bits.copy()
    pick = rng.random(p1.bits.size) < take_p1
    return np.where(pick, p1.bits, p2.bits)


def mutate_worst(population: list[Individual], p_mut: float, rng) -> np.ndarray:
    worst = min(population, key=lambda ind: ind.fitness)
    flips = rng.random(worst.bits.size) < p_mut
    return worst.bits ^ flips


def replace(population: list[Individual], children: list[Individual], limit: int | None = None) -> list[Individual]:
    """Drop duplicate children, then let the best survivors evict the worst members.

    Replacement is unconditional, one-for-one, at most ``limit`` children.
    """
    seen = {ind.key for ind in population}
    fresh = []
    for child in children:
        if child.key not in seen:
            seen.add(child.key)
            fresh.append(child)
    fresh.sort(key=lambda ind: -ind.fitness)
    if limit is not None:
        fresh = fresh[:limit]
    if not fresh:
        return list(population)
    order = sorted(range(len(population)), key=lambda i: population[i].fitness)
    out = list(population)
    for slot, child in zip(order, fresh):
        out[slot] = child
    return out


def _random_saturated(cost: np.ndarray, budget: float, rng) -> np.ndarray:
    bits = np.zeros(cost.size, dtype=bool)
    spent = 0.0
    for i in rng.permutation(cost.size):
        if spent + cost[i] <= budget + EPS:
            bits[i] = True
            spent += cost[i]
    return bits


def run_ga(inst: Instance, cfg: GAConfig = GAConfig(), cache: FitnessCache | None = None) -> SolveResult:
    t0 = time.perf_counter()
    model = inst.model
    n = len(model.candidates)
    rng = np.random.default_rng(cfg.seed)
    cache = cache if cache is not None else FitnessCache(inst)
    start_evals = cache.evaluations
    gains = singleton_gains(model)
    p_mut = cfg.rate(n)

    def individuals(raw: list[np.ndarray]) -> list[Individual]:
        fixed = [_repair(b, model.cost, inst.budget, gains, rng) for b in raw]
        return [Individual(b, f) for b, f in zip(fixed, cache(fixed))]

    seeds = [greedy_plan(model, inst.budget)]
    seeds += [_random_saturated(model.cost, inst.budget, rng) for _ in range(cfg.population - 1)]
    population = individuals(seeds)
    history = []

    def log(gen: int):
        fit = np.array([ind.fitness for ind in population])
        history.append((gen, float(fit.max()), float(fit.mean()), float(fit.min())))

    log(0)
    for gen in range(1, cfg.generations + 1):
        raw = []
        for _ in range(cfg.children):
            p1, p2 = tournament_select(population, rng)
            raw.append(fusion_crossover(p1, p2, rng, per_gene=cfg.crossover == "gene"))
            raw.append(mutate_worst(population, p_mut, rng))
        population = replace(population, individuals(raw), limit=cfg.children)
        log(gen)

    best = max(population, key=lambda ind: (ind.fitness, [-i for i in np.flatnonzero(ind.bits)]))
    return SolveResult(model.stations(best.bits), best.fitness, False, cache.evaluations - start_evals,
                       time.perf_counter() - t0, solver="ga", history=history)


def history_csv(history) -> str:
    lines = ["generation,best,mean,worst"]
    lines += [f"{g},{b:.6f},{m:.6f},{w:.6f}" for g, b, m, w in history]
    return "\n".join(lines) + "\n"
