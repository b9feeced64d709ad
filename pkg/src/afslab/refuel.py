"""Round-trip refueling feasibility for a fixed station plan.

Stations are uncapacitated and refueling is free, so filling to full at every
open station visited is an optimal policy; ``simulate_path`` uses it and
``gap_profile`` is the equivalent closed-form test.  ``feasibility_oracle_dp``
is kept independent of both and is only meant for verification.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable

from .netgraph import RoundTripPath

EPS = 1e-9


@dataclass(frozen=True)
class VehicleSpec:
    range: float
    initial_sof: float

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("vehicle range must be positive")
        if not 0 <= self.initial_sof <= self.range:
            raise ValueError("initial state of fuel must lie in [0, range]")

    @classmethod
    def full(cls, range: float) -> "VehicleSpec":
        return cls(range, range)

    @classmethod
    def fraction(cls, range: float, sof: float) -> "VehicleSpec":
        return cls(range, range * sof)


@dataclass(frozen=True)
class StationPlan:
    stations: frozenset[int]
    cost: float = 0.0

    @classmethod
    def of(cls, stations: Iterable[int], costs: dict[int, float] | None = None) -> "StationPlan":
        stations = frozenset(int(s) for s in stations)
        cost = sum(costs[s] for s in stations) if costs else float(len(stations))
        return cls(stations, cost)

    def __contains__(self, node) -> bool:
        return node in self.stations

    def __len__(self) -> int:
        return len(self.stations)

    def sorted(self) -> list[int]:
        return sorted(self.stations)


@dataclass(frozen=True)
class RefuelStop:
    position: int
    node: int
    arrival: float
    refueled: float

    @property
    def departure(self) -> float:
        return self.arrival + self.refueled


@dataclass(frozen=True)
class RefuelSchedule:
    stops: tuple[RefuelStop, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["position", "node", "arrival_fuel", "refueled", "departure_fuel"])
        for s in self.stops:
            w.writerow([s.position, s.node, f"{s.arrival:.6g}", f"{s.refueled:.6g}", f"{s.departure:.6g}"])
        return buf.getvalue()

    def to_rows(self) -> list[dict]:
        return [
            {"position": s.position, "node": s.node, "arrival_fuel": s.arrival,
             "refueled": s.refueled, "departure_fuel": s.departure}
            for s in self.stops
        ]


def simulate_path(
    path: RoundTripPath, plan, v: VehicleSpec
) -> tuple[bool, RefuelSchedule | None]:
    """Drive the round trip refilling to full at every open station.

    Returns ``(feasible, schedule)``; the schedule is ``None`` when fuel runs
    out.  No refueling is recorded at the final return to the origin.
    """
    nodes, prefix = path.nodes, path.prefix
    last = len(nodes) - 1
    fuel = v.initial_sof
    stops = []
    for q, node in enumerate(nodes):
        if q:
            fuel -= prefix[q] - prefix[q - 1]
            if fuel < -EPS:
                return False, None
            fuel = max(fuel, 0.0)
        top = v.range - fuel if node in plan and q < last else 0.0
        stops.append(RefuelStop(q, node, fuel, top))
        fuel += top
    return True, RefuelSchedule(tuple(stops))


def gap_profile(path: RoundTripPath, plan, v: VehicleSpec) -> bool:
    nodes, prefix = path.nodes, path.prefix
    last = len(nodes) - 1
    open_pos = [q for q in range(last) if nodes[q] in plan]
    if not open_pos:
        return prefix[last] <= v.initial_sof + EPS
    first = open_pos[0]
    if first > 0 and prefix[first] > v.initial_sof + EPS:
        return False
    for a, b in zip(open_pos, open_pos[1:]):
        if prefix[b] - prefix[a] > v.range + EPS:
            return False
    return prefix[last] - prefix[open_pos[-1]] <= v.range + EPS


def feasibility_oracle_dp(path: RoundTripPath, plan, v: VehicleSpec) -> bool:
    """Forward DP on the maximum fuel achievable at each position.

    Any refuel amount in ``[0, range - fuel]`` is allowed at an open station,
    so the best departure level there is ``range`` whatever arrived.
    """
    best = float(v.initial_sof)
    legs = path.legs
    for q, node in enumerate(path.nodes):
        if q:
            best -= legs[q - 1]
            if best < -EPS:
                return False
        if node in plan:
            best = max(best, v.range)
    return True
