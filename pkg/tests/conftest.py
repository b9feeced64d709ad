import itertools
import random
import sys

import pytest

from afslab.netgraph import Network, OneWayPath, RoundTripPath


def all_simple_paths(net: Network, r: int, s: int) -> list[tuple[int, ...]]:
    """Exhaustive DFS enumeration, sorted by (length, node sequence)."""
    out = []

    def walk(path, seen):
        u = path[-1]
        if u == s:
            out.append(tuple(path))
            return
        for v in net.adjacency[u]:
            if v not in seen:
                seen.add(v)
                path.append(v)
                walk(path, seen)
                path.pop()
                seen.remove(v)

    walk([r], {r})
    return sorted(out, key=lambda p: (round(OneWayPath.along(net, p).length, 9), p))


def random_network(rng: random.Random, n: int, m: int, lo: int = 1, hi: int = 10) -> Network:
    """Random connected undirected network: a random spanning tree plus extra links."""
    nodes = list(range(1, n + 1))
    order = nodes[:]
    rng.shuffle(order)
    pairs = set()
    for k in range(1, n):
        pairs.add(frozenset((order[k], order[rng.randrange(k)])))
    others = [frozenset(p) for p in itertools.combinations(nodes, 2) if frozenset(p) not in pairs]
    rng.shuffle(others)
    pairs.update(others[: max(0, m - len(pairs))])
    links = [(*sorted(p), rng.randint(lo, hi)) for p in pairs]
    return Network.from_links(nodes, links, symmetric=True)


def random_round_trip(rng: random.Random, max_nodes: int = 12, max_leg: float = 80.0) -> RoundTripPath:
    """A one-way path of up to ``max_nodes`` distinct nodes with random legs."""
    k = rng.randint(2, max(2, (max_nodes + 1) // 2))
    nodes = tuple(rng.sample(range(1, 30), k))
    prefix = [0.0]
    for _ in range(k - 1):
        prefix.append(prefix[-1] + rng.choice([rng.uniform(1, max_leg), float(rng.randint(1, 8) * 10)]))
    return RoundTripPath(OneWayPath(nodes, tuple(prefix)))


@pytest.fixture
def line3() -> Network:
    return Network.from_links([1, 2, 3], [(1, 2, 5), (2, 3, 7)])


@pytest.fixture
def triangle() -> Network:
    return Network.from_links([1, 2, 3], [(1, 2, 4), (2, 3, 4), (1, 3, 9)])


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[number])
    if acceptance.REPORT:
        terminalreporter.section("reference comparison")
        for line in acceptance.REPORT:
            terminalreporter.write_line(line)
