"""HTTP front end over the experiment drivers.

Validation problems map to 422 and solver guard trips to 409; the CLI turns
those into exit codes 2 and 3.
"""

from __future__ import annotations

import time
from functools import lru_cache

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import experiments as ex
from ..coverage import PlanError, evaluate_plan
from ..exact import GuardError
from .schemas import (
    Command,
    EvaluateRequest,
    EvaluateResponse,
    ExperimentRequest,
    ExperimentResponse,
    InstanceFields,
    NodeCoverage,
)

FULL_SWEEP = [float(b) for b in range(1, 13)]
DEFAULT_BUDGETS = {"solve": FULL_SWEEP, "sweep-range": FULL_SWEEP, "sweep-sof": FULL_SWEEP,
                   "monte-carlo-sof": FULL_SWEEP, "prob-ablation": [7.0], "export-milp": [3.0], "paths": [0.0]}
DEFAULT_SOLVER = {"solve": "both"}

app = FastAPI(title="afslab", version="0.1.0")


@lru_cache(maxsize=8)
def get_lab(setup: ex.Setup, node_limit: int | None) -> ex.Lab:
    return ex.Lab(setup, node_limit)


def _setup(req: InstanceFields) -> ex.Setup:
    return ex.Setup(req.network, req.probs, req.range, req.sof, req.k, req.denominator)


@app.exception_handler(ValueError)
async def _invalid(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc), "kind": type(exc).__name__})


@app.exception_handler(GuardError)
async def _guard(request: Request, exc: GuardError):
    return JSONResponse(status_code=409, content={"detail": str(exc), "kind": "GuardError"})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": app.version}


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(req: EvaluateRequest) -> EvaluateResponse:
    lab = get_lab(_setup(req), None)
    budget = req.budget if req.budget is not None else float(len(set(req.plan)))
    inst = lab.instance(budget)
    if not inst.affordable(inst.plan(req.plan)):
        raise PlanError(f"plan costs more than the budget {budget:g}")
    report = evaluate_plan(inst, req.plan)
    return EvaluateResponse(
        plan=list(report.plan), objective=report.objective,
        covered_pairs=sum(k is not None for k in report.realized.values()),
        nodes=[NodeCoverage(**row) for row in report.to_dict()["nodes"]], csv=report.to_csv())


def run_command(command: str, req: ExperimentRequest) -> ex.Outcome:
    lab = get_lab(_setup(req), req.node_limit)
    budgets = req.budgets or DEFAULT_BUDGETS[command]
    solver = req.solver or DEFAULT_SOLVER.get(command, "exact")
    params = ex.GAParams(req.seeds, req.seed, req.population, req.generations, req.children,
                         req.mutation_rate, req.crossover)
    if command == "paths":
        return ex.cmd_paths(lab)
    if command == "solve":
        return ex.cmd_solve(lab, budgets, solver, params, req.breakdown_budget, req.plan_budget)
    if command == "sweep-range":
        return ex.cmd_sweep_range(lab, budgets, req.ranges, solver, params)
    if command == "sweep-sof":
        return ex.cmd_sweep_sof(lab, budgets, req.sofs, solver, params)
    if command == "monte-carlo-sof":
        return ex.cmd_monte_carlo_sof(lab, budgets, req.samples, req.seed, solver, params, req.cdf_budget,
                                      req.per_node, tuple(req.sofs))
    if command == "prob-ablation":
        return ex.cmd_prob_ablation(lab, budgets[0], solver, params)
    return ex.cmd_export(lab, budgets[0])


@app.post("/experiments/{command}", response_model=ExperimentResponse)
def experiment(command: Command, req: ExperimentRequest) -> ExperimentResponse:
    t0 = time.perf_counter()
    out = run_command(command, req)
    return ExperimentResponse(command=command, files=out.files, summary=out.summary,
                              seconds=time.perf_counter() - t0)
