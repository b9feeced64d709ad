"""Embedded Sioux Falls reconstruction and probability-file helpers.

The network uses the standard Sioux Falls link lengths scaled by ten and read
as miles.  Two adoption probabilities circulate in two versions: node 15 is
0.5431 in the primary listing and 0.5341 in the published per-node breakdown,
and node 24 is 0.0550 versus 0.0500.  The primary listing is shipped.
"""

from __future__ import annotations

import csv
import io
from functools import lru_cache
from importlib import resources

from .coverage import Instance
from .netgraph import Network, PathCatalog, build_catalog, load_network
from .refuel import VehicleSpec

# Reference values published for this dataset (range 100, K = 3, unit costs).
REFERENCE_EXACT = {1: 2.45, 2: 3.79, 3: 5.11, 4: 6.36, 5: 7.54, 6: 8.58,
                   7: 9.29, 8: 9.88, 9: 10.33, 10: 10.52, 11: 10.66, 12: 10.69}
REFERENCE_HEURISTIC = {1: 2.45, 2: 3.78, 3: 5.04, 4: 6.29, 5: 7.41, 6: 8.49,
                       7: 9.20, 8: 9.69, 9: 10.22, 10: 10.45, 11: 10.62, 12: 10.67}
REFERENCE_BUDGET3_PLAN = (3, 6, 16)
# Published per-node coverage for that plan, rounded to two decimals.
REFERENCE_BUDGET3_COVERAGE = {
    1: 0.42, 2: 0.54, 3: 0.46, 4: 0.54, 5: 0.58, 6: 0.50, 7: 0.50, 8: 0.50,
    9: 0.42, 10: 0.46, 11: 0.54, 12: 0.38, 13: 0.33, 14: 0.13, 15: 0.54, 16: 0.50,
    17: 0.50, 18: 0.54, 19: 0.54, 20: 0.46, 21: 0.17, 22: 0.50, 23: 0.17, 24: 0.17,
}
REFERENCE_CRITICAL_COUNTS = {100: 11, 150: 7, 200: 5}
REFERENCE_RANDOM_SOF = {
    1: (0.74, 0.74), 2: (1.49, 1.45), 3: (2.60, 2.60), 4: (3.62, 3.52), 5: (4.34, 4.75),
    6: (5.55, 5.62), 7: (6.48, 6.67), 8: (7.62, 7.62), 9: (8.01, 8.14), 10: (8.48, 8.68),
    11: (8.90, 8.94), 12: (8.98, 9.13),
}


def _read(name: str) -> str:
    return resources.files("afslab.data").joinpath(name).read_text()


def sioux_falls_text() -> str:
    return _read("sioux_falls.net")


def sioux_falls_probabilities_text() -> str:
    return _read("sioux_falls_probs.csv")


def load_probabilities(text: str) -> dict[int, float]:
    """Parse a ``node_id,probability`` CSV (header optional)."""
    out = {}
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        if row[0].strip() == "node_id":
            continue
        if len(row) != 2:
            raise ValueError(f"bad probability row {row!r}")
        node = int(row[0])
        if node in out:
            raise ValueError(f"duplicate probability for node {node}")
        out[node] = float(row[1])
    return out


@lru_cache(maxsize=None)
def sioux_falls() -> Network:
    return load_network(sioux_falls_text())


@lru_cache(maxsize=None)
def sioux_falls_probabilities() -> dict[int, float]:
    return load_probabilities(sioux_falls_probabilities_text())


@lru_cache(maxsize=16)
def sioux_falls_catalog(K: int = 3, tau: float | None = None) -> PathCatalog:
    return build_catalog(sioux_falls(), K, tau)


def sioux_falls_instance(budget: float = 3, range: float = 100.0, sof: float = 1.0, K: int = 3,
                         uniform_probability: bool = False) -> Instance:
    probs = sioux_falls_probabilities()
    if uniform_probability:
        probs = {n: 1.0 for n in probs}
    return Instance.build(sioux_falls(), sioux_falls_catalog(K), probs,
                          VehicleSpec.fraction(range, sof), budget)
