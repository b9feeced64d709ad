"""Expected node coverage of a station plan.

``evaluate_plan`` is the reference evaluation: each O-D pair is covered when
one of its catalog round trips can be driven (tested shortest first), and the
objective is the probability-weighted sum of node coverages.

``CoverageModel`` compiles the same rule into a vectorised form for the
solvers.  A round trip is drivable iff, at every position ``q`` that lies
farther than the initial fuel from the origin, some open station sits at an
earlier position within one full range of ``q``.  Each such position gives a
*window* of candidate nodes; a plan drives the trip iff it hits every window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .netgraph import Network, PathCatalog, RoundTripPath
from .refuel import EPS, StationPlan, VehicleSpec, simulate_path


class PlanError(ValueError):
    """Raised when a plan names nodes that are not candidate sites."""


@dataclass(frozen=True, eq=False)
class Instance:
    network: Network
    catalog: PathCatalog
    probabilities: Mapping[int, float]
    vehicle: VehicleSpec
    budget: float
    costs: Mapping[int, float]
    candidates: tuple[int, ...]
    denominators: Mapping[int, float]

    @classmethod
    def build(
        cls,
        network: Network,
        catalog: PathCatalog,
        probabilities: Mapping[int, float],
        vehicle: VehicleSpec,
        budget: float,
        costs: Mapping[int, float] | None = None,
        candidates: Iterable[int] | None = None,
        denominator: str | Mapping[int, float] = "nodes",
    ) -> "Instance":
        nodes = network.nodes
        missing = set(nodes) - set(probabilities)
        if missing:
            raise ValueError(f"no probability given for nodes {sorted(missing)}")
        probs = {n: float(probabilities[n]) for n in nodes}
        for n, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability of node {n} outside [0, 1]: {p}")
        cands = tuple(sorted(set(candidates))) if candidates is not None else tuple(sorted(nodes))
        if not cands:
            raise ValueError("candidate set is empty")
        if not set(cands) <= set(nodes):
            raise ValueError("candidates must be network nodes")
        costs = {i: float(costs[i]) if costs else 1.0 for i in cands}
        if any(c <= 0 for c in costs.values()):
            raise ValueError("station costs must be positive")
        if budget < 0:
            raise ValueError("budget must be nonnegative")
        if denominator == "nodes":
            denom = {n: float(len(nodes)) for n in nodes}
        elif denominator == "destinations":
            denom = {n: float(max(len(nodes) - 1, 1)) for n in nodes}
        else:
            denom = {n: float(denominator[n]) for n in nodes}
        if any(d < 1 for d in denom.values()):
            raise ValueError("coverage denominators must be at least 1")
        return cls(network, catalog, probs, vehicle, float(budget), costs, cands, denom)

    def replace(self, **changes) -> "Instance":
        return replace(self, **changes)

    def plan(self, stations: Iterable[int]) -> StationPlan:
        stations = frozenset(int(s) for s in stations)
        bad = stations - set(self.candidates)
        if bad:
            raise PlanError(f"non-candidate nodes in plan: {sorted(bad)}")
        return StationPlan(stations, sum(self.costs[s] for s in stations))

    def affordable(self, plan: StationPlan) -> bool:
        return plan.cost <= self.budget + EPS

    @cached_property
    def model(self) -> "CoverageModel":
        return CoverageModel(self)


@dataclass(frozen=True)
class CoverageReport:
    plan: tuple[int, ...]
    realized: dict[tuple[int, int], int | None]
    coverage: dict[int, float]
    probabilities: dict[int, float]
    objective: float

    def covered(self, r: int, s: int) -> bool:
        return self.realized[(r, s)] is not None

    def expected(self, r: int) -> float:
        return self.probabilities[r] * self.coverage[r]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "probability", "coverage", "expected_coverage"])
        for r in sorted(self.coverage):
            w.writerow([r, f"{self.probabilities[r]:.4f}", f"{self.coverage[r]:.6f}", f"{self.expected(r):.6f}"])
        w.writerow(["total", "", "", f"{self.objective:.6f}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "plan": list(self.plan),
            "objective": self.objective,
            "nodes": [
                {"node": r, "probability": self.probabilities[r], "coverage": self.coverage[r],
                 "expected_coverage": self.expected(r)}
                for r in sorted(self.coverage)
            ],
            "pairs": [
                {"origin": r, "destination": s, "covered": k is not None, "path_index": k}
                for (r, s), k in sorted(self.realized.items())
            ],
        }


def evaluate_plan(inst: Instance, plan: StationPlan | Iterable[int]) -> CoverageReport:
    if not isinstance(plan, StationPlan):
        plan = inst.plan(plan)
    else:
        inst.plan(plan.stations)
    realized = {}
    hits = {r: 0 for r in inst.network.nodes}
    for od in inst.catalog.pairs():
        realized[od] = None
        for k, path in enumerate(inst.catalog[od]):
            if simulate_path(path, plan.stations, inst.vehicle)[0]:
                realized[od] = k
                hits[od[0]] += 1
                break
    z = {r: hits[r] / inst.denominators[r] for r in hits}
    objective = math.fsum(inst.probabilities[r] * z[r] for r in z)
    return CoverageReport(tuple(plan.sorted()), realized, z, dict(inst.probabilities), objective)


def objective_ceiling(inst: Instance) -> float:
    n = len(inst.network.nodes)
    return math.fsum(inst.probabilities[r] * (n - 1) / inst.denominators[r] for r in inst.network.nodes)


def realized_schedules(inst: Instance, plan: StationPlan | Iterable[int]) -> list[dict]:
    """Per covered O-D pair: the realized round trip and its refuel schedule."""
    report = evaluate_plan(inst, plan)
    stations = frozenset(report.plan)
    out = []
    for (r, s), k in sorted(report.realized.items()):
        if k is None:
            continue
        path = inst.catalog[(r, s)][k]
        _, sched = simulate_path(path, stations, inst.vehicle)
        out.append({"origin": r, "destination": s, "path_index": k,
                    "nodes": list(path.nodes), "schedule": sched.to_rows()})
    return out


def path_windows(path: RoundTripPath, vehicle: VehicleSpec, candidates) -> list[frozenset[int]] | None:
    """Minimal station windows of one round trip, or ``None`` if it is never drivable.

    An empty list means the trip needs no station at all.
    """
    nodes, prefix = path.nodes, path.prefix
    windows = []
    lo = 0
    for q in range(1, len(nodes)):
        if prefix[q] <= vehicle.initial_sof + EPS:
            continue
        while prefix[q] - prefix[lo] > vehicle.range + EPS:
            lo += 1
        w = frozenset(nodes[p] for p in range(lo, q) if nodes[p] in candidates)
        if not w:
            return None
        windows.append(w)
    minimal = []
    for w in sorted(set(windows), key=lambda w: (len(w), sorted(w))):
        if not any(m <= w for m in minimal):
            minimal.append(w)
    return minimal


def sof_requirement(path: RoundTripPath, plan, vehicle: VehicleSpec) -> float:
    """Smallest initial fuel that makes the trip drivable under ``plan``."""
    nodes, prefix = path.nodes, path.prefix
    last = len(nodes) - 1
    open_pos = [q for q in range(last) if nodes[q] in plan]
    if not open_pos:
        return prefix[last]
    for a, b in zip(open_pos, open_pos[1:] + [last]):
        if prefix[b] - prefix[a] > vehicle.range + EPS:
            return math.inf
    return prefix[open_pos[0]]


def objective_under_sof(inst: Instance, plan, sofs) -> np.ndarray:
    """Objective of a fixed plan for each initial-fuel scenario in ``sofs``.

    ``sofs`` is 1-D (one value for every origin per scenario) or 2-D with one
    column per node in ``inst.network.nodes`` order.  Values above the range
    are not rejected here; callers draw them from ``[0, range]``.
    """
    stations = frozenset(plan.stations if isinstance(plan, StationPlan) else plan)
    pairs = inst.catalog.pairs()
    need = np.array([
        min((sof_requirement(p, stations, inst.vehicle) for p in inst.catalog[od]), default=math.inf)
        for od in pairs
    ])
    weights = np.array([inst.probabilities[r] / inst.denominators[r] for r, _ in pairs])
    sofs = np.asarray(sofs, dtype=float)
    if sofs.ndim == 1:
        ok = need[None, :] <= sofs[:, None] + EPS
    else:
        col = {n: i for i, n in enumerate(inst.network.nodes)}
        origin_col = np.array([col[r] for r, _ in pairs])
        ok = need[None, :] <= sofs[:, origin_col] + EPS
    return ok @ weights


class CoverageModel:
    """Window-matrix form of an instance, for fast repeated objective queries.

    Plans are boolean masks over ``inst.candidates``.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.candidates = inst.candidates
        self.index = {c: i for i, c in enumerate(self.candidates)}
        cand_set = set(self.candidates)
        pairs = inst.catalog.pairs()
        self.pairs = pairs
        self.weights = np.array([inst.probabilities[r] / inst.denominators[r] for r, _ in pairs])
        self.path_windows: list[list[frozenset[int]]] = []
        od_of_path, path_of_win, rows = [], [], []
        base = np.zeros(len(pairs), dtype=bool)
        for o, od in enumerate(pairs):
            for path in inst.catalog[od]:
                ws = path_windows(path, inst.vehicle, cand_set)
                if ws is None:
                    continue
                if not ws:
                    base[o] = True
                    break
                pid = len(od_of_path)
                od_of_path.append(o)
                self.path_windows.append(ws)
                for w in ws:
                    path_of_win.append(pid)
                    rows.append([self.index[c] for c in w])
        self.base = base
        self.od_of_path = np.array(od_of_path, dtype=np.intp)
        self.path_of_win = np.array(path_of_win, dtype=np.intp)
        W = np.zeros((len(rows), len(self.candidates)), dtype=np.float32)
        for k, cols in enumerate(rows):
            W[k, cols] = 1.0
        self.W = W
        self.n_paths = len(od_of_path)
        self.cost = np.array([inst.costs[c] for c in self.candidates])
        self.base_value = float(self.weights[base].sum())

    def mask(self, stations: Iterable[int]) -> np.ndarray:
        m = np.zeros(len(self.candidates), dtype=bool)
        for s in stations:
            m[self.index[s]] = True
        return m

    def stations(self, mask) -> tuple[int, ...]:
        return tuple(c for c, b in zip(self.candidates, mask) if b)

    def feasible_paths(self, mask) -> np.ndarray:
        hit = self.W @ np.asarray(mask, dtype=np.float32) > 0
        bad = np.zeros(self.n_paths, dtype=bool)
        bad[self.path_of_win[~hit]] = True
        return ~bad

    def covered(self, mask) -> np.ndarray:
        cov = self.base.copy()
        cov[self.od_of_path[self.feasible_paths(mask)]] = True
        return cov

    def objective(self, mask) -> float:
        return float(self.weights @ self.covered(mask))

    def objectives(self, masks) -> np.ndarray:
        """Objective of every row of a (plans x candidates) mask matrix."""
        X = np.atleast_2d(np.asarray(masks, dtype=np.float32))
        unhit = (self.W @ X.T) <= 0
        bad = np.zeros((self.n_paths, X.shape[0]), dtype=bool)
        rows, cols = np.nonzero(unhit)
        bad[self.path_of_win[rows], cols] = True
        cov = np.repeat(self.base[:, None], X.shape[0], axis=1)
        prow, pcol = np.nonzero(~bad)
        cov[self.od_of_path[prow], pcol] = True
        return self.weights @ cov
