"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

Command = Literal["paths", "solve", "sweep-range", "sweep-sof", "monte-carlo-sof", "prob-ablation", "export-milp"]


class InstanceFields(BaseModel):
    """Network, demand and vehicle settings shared by every request.

    ``network`` and ``probs`` carry file contents; leaving ``network`` unset
    selects the embedded Sioux Falls data.
    """

    network: str | None = None
    probs: str | None = None
    range: float = Field(100.0, gt=0)
    sof: float = Field(1.0, ge=0, le=1)
    k: int = Field(3, ge=1, le=50)
    denominator: Literal["nodes", "destinations"] = "nodes"


class ExperimentRequest(InstanceFields):
    budgets: list[float] | None = Field(None, min_length=1)
    solver: Literal["exact", "ga", "both"] | None = None
    seeds: int = Field(50, ge=1)
    seed: int = Field(0, ge=0)
    population: int = Field(100, ge=4)
    generations: int = Field(200, ge=0)
    children: int = Field(10, ge=1)
    mutation_rate: float | None = Field(None, ge=0, le=1)
    crossover: Literal["gene", "whole"] = "gene"
    ranges: list[float] = Field([100.0, 150.0, 200.0], min_length=1)
    sofs: list[float] = Field([1.0, 0.5], min_length=1)
    samples: int = Field(100, ge=1)
    per_node: bool = False
    cdf_budget: float = 7
    breakdown_budget: float | None = None
    plan_budget: float | None = None
    node_limit: int | None = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_lists(self):
        if self.budgets is not None and any(b < 0 for b in self.budgets):
            raise ValueError("budgets must be nonnegative")
        if any(r <= 0 for r in self.ranges):
            raise ValueError("ranges must be positive")
        if any(not 0 <= s <= 1 for s in self.sofs):
            raise ValueError("sofs are fractions of the range in [0, 1]")
        if self.children >= self.population:
            raise ValueError("children per generation must be fewer than the population")
        return self


class ExperimentResponse(BaseModel):
    command: Command
    files: dict[str, str]
    summary: dict
    seconds: float


class EvaluateRequest(InstanceFields):
    plan: list[int]
    budget: float | None = Field(None, ge=0)


class NodeCoverage(BaseModel):
    node: int
    probability: float
    coverage: float
    expected_coverage: float


class EvaluateResponse(BaseModel):
    plan: list[int]
    objective: float
    covered_pairs: int
    nodes: list[NodeCoverage]
    csv: str


class ErrorResponse(BaseModel):
    detail: str
    kind: str
