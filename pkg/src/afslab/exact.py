"""Exact station-plan optimisation by depth-first branch-and-bound."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .coverage import CoverageModel, Instance, evaluate_plan
from .refuel import EPS

PRUNE_TOL = 1e-9
BRUTE_FORCE_LIMIT = 16


class GuardError(RuntimeError):
    """A solver refused an instance that would blow up its search."""


@dataclass
class SolveResult:
    plan: tuple[int, ...]
    objective: float
    optimal: bool
    nodes: int
    seconds: float
    solver: str = "exact"
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"plan": list(self.plan), "objective": self.objective, "optimal": self.optimal,
                "nodes": self.nodes, "seconds": self.seconds, "solver": self.solver}


def singleton_gains(model: CoverageModel) -> np.ndarray:
    n = len(model.candidates)
    empty = model.objective(np.zeros(n, dtype=bool))
    return model.objectives(np.eye(n, dtype=bool)) - empty


def greedy_plan(model: CoverageModel, budget: float) -> np.ndarray:
    """Add the best affordable marginal-gain candidate until nothing fits."""
    n = len(model.candidates)
    mask = np.zeros(n, dtype=bool)
    spent = 0.0
    while True:
        options = [i for i in range(n) if not mask[i] and spent + model.cost[i] <= budget + EPS]
        if not options:
            return mask
        trial = np.repeat(mask[None, :], len(options), axis=0)
        trial[np.arange(len(options)), options] = True
        values = model.objectives(trial)
        pick = options[int(np.argmax(values))]
        mask[pick] = True
        spent += model.cost[pick]


class _Bounder:
    """Optimistic subtree values for a search node.

    The plain bound opens every remaining affordable candidate.  On top of
    that a trip whose unhit windows include ``t`` pairwise disjoint ones needs
    ``t`` more stations, which must fit in the remaining budget.
    """

    def __init__(self, model: CoverageModel):
        self.m = model
        self.families = self._disjoint_families(model)

    @staticmethod
    def _disjoint_families(model: CoverageModel) -> list[np.ndarray]:
        orders = [
            lambda ws: sorted(range(len(ws)), key=lambda k: (len(ws[k]), k)),
            lambda ws: list(range(len(ws))),
            lambda ws: list(reversed(range(len(ws)))),
        ]
        families = []
        for order in orders:
            picked = []
            start = 0
            for ws in model.path_windows:
                taken: set = set()
                for k in order(ws):
                    if not (ws[k] & taken):
                        taken |= ws[k]
                        picked.append(start + k)
                start += len(ws)
            families.append(np.array(picked, dtype=np.intp))
        return families

    def bound(self, chosen: np.ndarray, allowed: np.ndarray, remaining: float) -> float:
        m = self.m
        hit_c = m.W @ chosen.astype(np.float32) > 0
        hit_a = m.W @ (chosen | allowed).astype(np.float32) > 0
        bad = np.zeros(m.n_paths, dtype=bool)
        bad[m.path_of_win[~hit_a]] = True
        if allowed.any():
            cheapest = float(m.cost[allowed].min())
            need = np.zeros(m.n_paths)
            for fam in self.families:
                open_w = fam[~hit_c[fam]]
                need = np.maximum(need, np.bincount(m.path_of_win[open_w], minlength=m.n_paths))
            bad |= need * cheapest > remaining + EPS
        cov = m.base.copy()
        cov[m.od_of_path[~bad]] = True
        return float(m.weights @ cov)


def subtree_bound(model: CoverageModel, chosen, allowed, remaining: float) -> float:
    return _Bounder(model).bound(np.asarray(chosen, bool), np.asarray(allowed, bool), remaining)


def solve_exact(inst: Instance, lexicographic: bool = True, node_limit: int | None = None) -> SolveResult:
    """Maximise expected coverage over all budget-feasible plans.

    Candidates are branched in order of descending singleton gain, include
    branch first; subtrees whose bound does not beat the incumbent are cut.
    With ``lexicographic`` the lexicographically smallest optimal plan is
    then located by a second, order-sensitive search.

    Raises
    ------
    GuardError
        If the main search visits more than ``node_limit`` nodes.
    """
    t0 = time.perf_counter()
    model = inst.model
    n = len(model.candidates)
    budget = inst.budget
    cost = model.cost
    gains = singleton_gains(model)
    order = sorted(range(n), key=lambda i: (-gains[i], model.candidates[i]))
    bounder = _Bounder(model)

    best = greedy_plan(model, budget)
    best_val = model.objective(best)
    explored = 0

    def dfs(depth: int, chosen: np.ndarray, spent: float, fresh: bool):
        nonlocal best, best_val, explored
        explored += 1
        if node_limit is not None and explored > node_limit:
            raise GuardError(f"branch-and-bound exceeded {node_limit} nodes")
        if fresh:
            val = model.objective(chosen)
            if val > best_val + 1e-12:
                best, best_val = chosen.copy(), val
        if depth == n:
            return
        rest = budget - spent
        allowed = np.zeros(n, dtype=bool)
        for i in order[depth:]:
            if cost[i] <= rest + EPS:
                allowed[i] = True
        if not allowed.any():
            return
        if bounder.bound(chosen, allowed, rest) <= best_val + PRUNE_TOL:
            return
        i = order[depth]
        if allowed[i]:
            chosen[i] = True
            dfs(depth + 1, chosen, spent + cost[i], True)
            chosen[i] = False
        dfs(depth + 1, chosen, spent, False)

    dfs(0, np.zeros(n, dtype=bool), 0.0, True)
    plan = model.stations(best)
    if lexicographic:
        plan, extra = _lexicographic_optimum(model, bounder, budget, best_val)
        explored += extra
    value = evaluate_plan(inst, plan).objective
    return SolveResult(plan, value, True, explored, time.perf_counter() - t0)


def _lexicographic_optimum(model: CoverageModel, bounder: _Bounder, budget: float, target: float):
    """Smallest sorted plan (as a tuple of node ids) reaching ``target``."""
    n = len(model.candidates)
    ids = sorted(range(n), key=lambda i: model.candidates[i])
    cost = model.cost
    explored = 0

    def search(start: int, chosen: np.ndarray, spent: float):
        nonlocal explored
        explored += 1
        if model.objective(chosen) >= target - PRUNE_TOL:
            return chosen.copy()
        for j in range(start, n):
            i = ids[j]
            if spent + cost[i] > budget + EPS:
                continue
            chosen[i] = True
            rest = budget - spent - cost[i]
            allowed = np.zeros(n, dtype=bool)
            for k in ids[j + 1:]:
                if cost[k] <= rest + EPS:
                    allowed[k] = True
            if bounder.bound(chosen, allowed, rest) >= target - PRUNE_TOL:
                found = search(j + 1, chosen, spent + cost[i])
                if found is not None:
                    return found
            chosen[i] = False
        return None

    found = search(0, np.zeros(n, dtype=bool), 0.0)
    return model.stations(found), explored


def brute_force(inst: Instance) -> SolveResult:
    """Enumerate every affordable plan with the reference evaluator."""
    t0 = time.perf_counter()
    cands = inst.candidates
    if len(cands) > BRUTE_FORCE_LIMIT:
        raise GuardError(f"brute force limited to {BRUTE_FORCE_LIMIT} candidates, got {len(cands)}")
    best_plan, best_val, count = (), -1.0, 0
    for size in range(len(cands) + 1):
        for combo in itertools.combinations(cands, size):
            if sum(inst.costs[c] for c in combo) > inst.budget + EPS:
                continue
            count += 1
            val = evaluate_plan(inst, combo).objective
            if val > best_val + PRUNE_TOL or (abs(val - best_val) <= PRUNE_TOL and combo < best_plan):
                best_plan, best_val = combo, val
    return SolveResult(best_plan, best_val, True, count, time.perf_counter() - t0, solver="brute_force")
