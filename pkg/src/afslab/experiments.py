"""Experiment drivers behind the ``afslab`` subcommands.

Each ``cmd_*`` function takes a :class:`Lab` plus its parameters and returns an
:class:`Outcome`: a set of named text files (CSV/JSON) and a small summary.
Solver results are memoised on the lab, so sweeps that share cells reuse them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .coverage import Instance, evaluate_plan, objective_under_sof, realized_schedules
from .datasets import (
    REFERENCE_BUDGET3_COVERAGE,
    REFERENCE_BUDGET3_PLAN,
    REFERENCE_EXACT,
    REFERENCE_HEURISTIC,
    load_probabilities,
    sioux_falls_probabilities_text,
    sioux_falls_text,
)
from .exact import SolveResult, solve_exact
from .ga import FitnessCache, GAConfig, run_ga
from .milp import build_milp, write_lp
from .netgraph import PathCatalog, build_catalog, load_network
from .refuel import VehicleSpec

CONSISTENCY_TOL = 1e-9
HIGH_P, LOW_P = 0.8, 0.2


class ConsistencyError(RuntimeError):
    """A reported objective disagrees with a fresh evaluation of its plan."""


@dataclass(frozen=True)
class Setup:
    """Everything that identifies a family of instances apart from the budget."""

    network_text: str | None = None
    probs_text: str | None = None
    range: float = 100.0
    sof: float = 1.0
    k: int = 3
    denominator: str = "nodes"

    @property
    def embedded(self) -> bool:
        return self.network_text is None


@dataclass(frozen=True)
class GAParams:
    seeds: int = 50
    seed: int = 0
    population: int = 100
    generations: int = 200
    children: int = 10
    mutation_rate: float | None = None
    crossover: str = "gene"

    def config(self, offset: int) -> GAConfig:
        return GAConfig(self.population, self.generations, self.children, self.mutation_rate,
                        self.seed + offset, self.crossover)


@dataclass
class Outcome:
    files: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


class Lab:
    """Instances and memoised solver runs for one :class:`Setup`."""

    def __init__(self, setup: Setup, node_limit: int | None = None):
        self.setup = setup
        self.node_limit = node_limit
        if setup.embedded:
            self.network = load_network(sioux_falls_text())
            probs_text = setup.probs_text or sioux_falls_probabilities_text()
        else:
            self.network = load_network(setup.network_text)
            if setup.probs_text is None:
                raise ValueError("a custom network needs a probabilities file")
            probs_text = setup.probs_text
        self.probabilities = load_probabilities(probs_text)
        self._catalogs: dict[int, PathCatalog] = {}
        self.catalog_seconds: dict[int, float] = {}
        self._exact: dict[tuple, SolveResult] = {}
        self._ga: dict[tuple, list[SolveResult]] = {}
        self._caches: dict[tuple, FitnessCache] = {}
        self.instance(0)  # validate early

    def catalog(self, k: int) -> PathCatalog:
        if k not in self._catalogs:
            t0 = time.perf_counter()
            self._catalogs[k] = build_catalog(self.network, k)
            self.catalog_seconds[k] = time.perf_counter() - t0
        return self._catalogs[k]

    def _key(self, budget, range, sof, k, uniform) -> tuple:
        s = self.setup
        return (float(budget), float(s.range if range is None else range), float(s.sof if sof is None else sof),
                int(s.k if k is None else k), bool(uniform))

    def instance(self, budget: float, range: float | None = None, sof: float | None = None,
                 k: int | None = None, uniform: bool = False) -> Instance:
        budget, range, sof, k, uniform = self._key(budget, range, sof, k, uniform)
        probs = {n: 1.0 for n in self.probabilities} if uniform else self.probabilities
        return Instance.build(self.network, self.catalog(k), probs, VehicleSpec.fraction(range, sof), budget,
                              denominator=self.setup.denominator)

    def exact(self, budget: float, **kw) -> SolveResult:
        key = self._key(budget, kw.get("range"), kw.get("sof"), kw.get("k"), kw.get("uniform", False))
        if key not in self._exact:
            self._exact[key] = solve_exact(self.instance(budget, **kw), node_limit=self.node_limit)
        return self._exact[key]

    def ga(self, budget: float, params: GAParams, **kw) -> list[SolveResult]:
        key = self._key(budget, kw.get("range"), kw.get("sof"), kw.get("k"), kw.get("uniform", False))
        if (key, params) not in self._ga:
            inst = self.instance(budget, **kw)
            cache = self._caches.setdefault(key, FitnessCache(inst))
            self._ga[(key, params)] = [run_ga(inst, params.config(i), cache) for i in range(params.seeds)]
        return self._ga[(key, params)]

    def best(self, budget: float, solver: str, params: GAParams, **kw) -> SolveResult:
        """Plan used downstream: exact when available, else the best GA run."""
        if solver in ("exact", "both"):
            return self.exact(budget, **kw)
        runs = self.ga(budget, params, **kw)
        return max(runs, key=lambda r: (r.objective, [-i for i in r.plan]))


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _f(x: float | None, digits: int = 6) -> str:
    return "" if x is None else f"{x:.{digits}f}"


def _plan_str(plan) -> str:
    return " ".join(str(i) for i in plan)


def check_consistency(inst: Instance, plan, objective: float) -> None:
    fresh = evaluate_plan(inst, plan).objective
    if abs(fresh - objective) > CONSISTENCY_TOL:
        raise ConsistencyError(f"plan {tuple(plan)}: reported {objective}, evaluated {fresh}")


def _is_reference_setup(lab: Lab) -> bool:
    s = lab.setup
    return s.embedded and s.probs_text is None and s.range == 100 and s.sof == 1 and s.k == 3 \
        and s.denominator == "nodes"


def cmd_paths(lab: Lab) -> Outcome:
    catalog = lab.catalog(lab.setup.k)
    return Outcome({"catalog.json": catalog.to_json()},
                   {"pairs": len(catalog.pairs()), "paths": catalog.num_paths,
                    "k": lab.setup.k, "seconds": lab.catalog_seconds.get(lab.setup.k, 0.0)})


def cmd_solve(lab: Lab, budgets: list[float], solver: str = "both", params: GAParams = GAParams(),
              breakdown_budget: float | None = None, plan_budget: float | None = None) -> Outcome:
    """Budget table, per-node breakdown, realized routes, and GA logs."""
    rows, ga_log, results = [], [], {}
    for b in budgets:
        inst = lab.instance(b)
        ex = lab.exact(b) if solver in ("exact", "both") else None
        runs = lab.ga(b, params) if solver in ("ga", "both") else []
        if ex is not None:
            check_consistency(inst, ex.plan, ex.objective)
        for r in runs:
            check_consistency(inst, r.plan, r.objective)
        mean = math.fsum(r.objective for r in runs) / len(runs) if runs else None
        best = max((r.objective for r in runs), default=None)
        gap = 100 * (ex.objective - mean) / ex.objective if ex is not None and runs and ex.objective > 0 else None
        rows.append([f"{b:g}", _f(mean), _f(best), _f(ex.objective if ex else None),
                     _f(gap, 2), _plan_str(ex.plan) if ex else "",
                     _f(ex.seconds, 3) if ex else "", _f(np.mean([r.seconds for r in runs]), 3) if runs else ""])
        if runs:
            for g, hb, hm, hw in runs[0].history:
                ga_log.append([f"{b:g}", g, _f(hb), _f(hm), _f(hw)])
        results[b] = ex if ex is not None else lab.best(b, solver, params)

    files = {"budget_table.csv": _csv(
        ["budget", "heuristic_mean", "heuristic_best", "exact", "pct_difference", "exact_plan",
         "exact_seconds", "heuristic_seconds"], rows)}
    if ga_log:
        files["ga_history.csv"] = _csv(["budget", "generation", "best", "mean", "worst"], ga_log)

    bb = breakdown_budget if breakdown_budget in results else (3 if 3 in results else budgets[0])
    report = evaluate_plan(lab.instance(bb), results[bb].plan)
    files[f"breakdown_b{bb:g}.csv"] = report.to_csv()

    pb = plan_budget if plan_budget in results else (7 if 7 in results else budgets[-1])
    res = results[pb]
    inst = lab.instance(pb)
    files[f"plan_b{pb:g}.json"] = json.dumps({
        "budget": pb, "solver": res.solver, "plan": list(res.plan), "objective": res.objective,
        "range": inst.vehicle.range, "initial_sof": inst.vehicle.initial_sof, "k": lab.setup.k,
        "routes": realized_schedules(inst, res.plan),
    }, indent=2) + "\n"

    if _is_reference_setup(lab):
        files["reference_comparison.csv"] = _reference_report(lab, budgets, solver, params)

    summary = {"budgets": list(budgets), "solver": solver,
               "objectives": {f"{b:g}": results[b].objective for b in budgets},
               "plans": {f"{b:g}": list(results[b].plan) for b in budgets}}
    return Outcome(files, summary)


def _reference_report(lab: Lab, budgets, solver, params) -> str:
    rows = []
    for b in budgets:
        if b not in REFERENCE_EXACT:
            continue
        ex = lab.exact(b) if solver in ("exact", "both") else None
        runs = lab.ga(b, params) if solver in ("ga", "both") else []
        mean = math.fsum(r.objective for r in runs) / len(runs) if runs else None
        rows.append([f"budget_{b:g}", "exact", _f(ex.objective if ex else None, 4), _f(REFERENCE_EXACT[b], 2),
                     _f(ex.objective - REFERENCE_EXACT[b], 4) if ex else ""])
        rows.append([f"budget_{b:g}", "heuristic_mean", _f(mean, 4), _f(REFERENCE_HEURISTIC[b], 2),
                     _f(mean - REFERENCE_HEURISTIC[b], 4) if mean is not None else ""])
    if 3 in budgets:
        inst = lab.instance(3)
        ref_plan = evaluate_plan(inst, REFERENCE_BUDGET3_PLAN)
        plan3 = lab.best(3, solver, params).plan
        rows.append(["budget_3", "plan", _plan_str(plan3), _plan_str(REFERENCE_BUDGET3_PLAN),
                     "same" if tuple(plan3) == REFERENCE_BUDGET3_PLAN else "differs"])
        for node, z in sorted(REFERENCE_BUDGET3_COVERAGE.items()):
            got = ref_plan.coverage[node]
            rows.append([f"node_{node}", "coverage", _f(got, 4), _f(z, 2), _f(got - z, 4)])
    return _csv(["item", "quantity", "value", "reference", "delta"], rows)


def critical_count(lab: Lab, budgets, values: dict, **kw) -> float | None:
    """Smallest budget whose objective reaches the all-stations-open maximum."""
    inst = lab.instance(max(budgets), **kw)
    top = evaluate_plan(inst, inst.candidates).objective
    for b in sorted(budgets):
        if values[b] >= top - CONSISTENCY_TOL:
            return b
    return None


def cmd_sweep_range(lab: Lab, budgets, ranges=(100.0, 150.0, 200.0), solver: str = "exact",
                    params: GAParams = GAParams()) -> Outcome:
    table = {vr: {} for vr in ranges}
    for vr in ranges:
        for b in budgets:
            res = lab.best(b, solver, params, range=vr)
            check_consistency(lab.instance(b, range=vr), res.plan, res.objective)
            table[vr][b] = res.objective
    rows = [[f"{b:g}"] + [_f(table[vr][b]) for vr in ranges] for b in budgets]
    crit = {vr: critical_count(lab, budgets, table[vr], range=vr) for vr in ranges}
    crit_rows = [[f"{vr:g}", "" if crit[vr] is None else f"{crit[vr]:g}", _f(max(table[vr].values()))]
                 for vr in ranges]
    return Outcome({"sweep_range.csv": _csv(["budget"] + [f"vr_{vr:g}" for vr in ranges], rows),
                    "critical_counts.csv": _csv(["range", "critical_count", "max_objective"], crit_rows)},
                   {"critical_counts": {f"{vr:g}": crit[vr] for vr in ranges},
                    "objectives": {f"{vr:g}": {f"{b:g}": v for b, v in table[vr].items()} for vr in ranges}})


def cmd_sweep_sof(lab: Lab, budgets, sofs=(1.0, 0.5), solver: str = "exact", params: GAParams = GAParams()) -> Outcome:
    table = {s: {} for s in sofs}
    for s in sofs:
        for b in budgets:
            res = lab.best(b, solver, params, sof=s)
            check_consistency(lab.instance(b, sof=s), res.plan, res.objective)
            table[s][b] = res.objective
    cols = [f"sof_{round(100 * s):d}" for s in sofs]
    rows = [[f"{b:g}"] + [_f(table[s][b]) for s in sofs] for b in budgets]
    return Outcome({"sweep_sof.csv": _csv(["budget"] + cols, rows)},
                   {"objectives": {c: {f"{b:g}": table[s][b] for b in budgets} for c, s in zip(cols, sofs)}})


def cmd_monte_carlo_sof(lab: Lab, budgets, samples: int = 100, seed: int = 0, solver: str = "exact",
                        params: GAParams = GAParams(), cdf_budget: float = 7, per_node: bool = False,
                        design_sofs=(1.0, 0.5)) -> Outcome:
    """Evaluate the full- and half-SOF design plans under random initial fuel.

    Every budget gets its own ``samples`` draws from U(0, range), shared by
    both plans; with ``per_node`` each origin draws independently.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    vr = lab.setup.range
    children = np.random.SeedSequence(seed).spawn(len(budgets))
    rows, cdf, per_draw = [], None, {}
    for b, ss in zip(budgets, children):
        rng = np.random.default_rng(ss)
        shape = (samples, len(lab.network.nodes)) if per_node else (samples,)
        draws = vr * (1.0 - rng.random(shape))  # (0, range]
        inst = lab.instance(b)
        plans, means, vals = [], [], []
        for s in design_sofs:
            res = lab.best(b, solver, params, sof=s)
            check_consistency(lab.instance(b, sof=s), res.plan, res.objective)
            v = objective_under_sof(inst, res.plan, draws)
            plans.append(res.plan)
            vals.append(v)
            means.append(float(v.mean()))
        rows.append([f"{b:g}"] + [_f(m) for m in means] + [_plan_str(p) for p in plans])
        per_draw[b] = vals
        if b == cdf_budget:
            order = [np.sort(v) for v in vals]
            cdf = [[_f((i + 1) / samples, 4)] + [_f(o[i]) for o in order] for i in range(samples)]
    cols = [f"sof_{round(100 * s):d}_plan" for s in design_sofs]
    files = {"monte_carlo_sof.csv": _csv(["budget"] + [f"{c}_mean" for c in cols] + cols, rows)}
    if cdf is not None:
        files[f"cdf_b{cdf_budget:g}.csv"] = _csv(["cdf"] + cols, cdf)
    return Outcome(files, {"samples": samples, "seed": seed, "per_node": per_node,
                           "means": {r[0]: [float(x) for x in r[1:1 + len(design_sofs)]] for r in rows}})


def cmd_prob_ablation(lab: Lab, budget: float = 7, solver: str = "exact", params: GAParams = GAParams()) -> Outcome:
    aware = lab.best(budget, solver, params)
    blind = lab.best(budget, solver, params, uniform=True)
    inst = lab.instance(budget)
    check_consistency(inst, aware.plan, aware.objective)
    check_consistency(lab.instance(budget, uniform=True), blind.plan, blind.objective)
    ra, rb = evaluate_plan(inst, aware.plan), evaluate_plan(inst, blind.plan)
    rows = []
    for group, keep in (("high", lambda p: p >= HIGH_P), ("low", lambda p: p <= LOW_P)):
        for n in sorted(lab.probabilities):
            p = lab.probabilities[n]
            if keep(p):
                rows.append([group, n, f"{p:.4f}", _f(ra.coverage[n]), _f(rb.coverage[n])])
    summary_rows = [["probability_aware", _plan_str(aware.plan), _f(ra.objective),
                     _f(evaluate_plan(lab.instance(budget, uniform=True), aware.plan).objective)],
                    ["probability_blind", _plan_str(blind.plan), _f(rb.objective), _f(blind.objective)]]
    return Outcome({"ablation_nodes.csv": _csv(["group", "node", "probability", "coverage_aware",
                                                "coverage_blind"], rows),
                    "ablation_plans.csv": _csv(["solution", "plan", "objective_true_p", "objective_unit_p"],
                                               summary_rows)},
                   {"budget": budget, "aware": list(aware.plan), "blind": list(blind.plan),
                    "aware_objective": ra.objective, "blind_objective": rb.objective,
                    "high_rows": sum(r[0] == "high" for r in rows), "low_rows": sum(r[0] == "low" for r in rows)})


def cmd_export(lab: Lab, budget: float) -> Outcome:
    model = build_milp(lab.instance(budget))
    return Outcome({"model.lp": write_lp(model)}, model.counts())
