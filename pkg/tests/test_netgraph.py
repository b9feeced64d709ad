import random

import pytest

from afslab.datasets import sioux_falls, sioux_falls_catalog
from afslab.netgraph import (
    DisconnectedNetworkError,
    DuplicateLinkError,
    Network,
    NetworkParseError,
    NonPositiveDistanceError,
    PathCatalog,
    UnknownNodeError,
    build_catalog,
    k_shortest_paths,
    load_network,
    shortest_path,
)

from conftest import all_simple_paths, random_network

# Floyd-Warshall distance from node 1 to node 20 on the shipped Sioux Falls
# file, computed once by an independent all-pairs pass and frozen here.
SIOUX_1_20 = 220.0


def test_load_minimal():
    net = load_network("nodes=3 links=2 symmetric=1\n1 2 5\n2 3 7\n")
    assert net.nodes == (1, 2, 3)
    assert net.num_links == 2
    assert net.is_connected()
    assert net.distance(3, 2) == 7


def test_load_comments_and_roundtrip():
    text = "# a comment\nnodes=3 links=2 symmetric=1  # trailing\n\n1 2 5\n2 3 7.5\n"
    net = load_network(text)
    assert load_network(net.to_text()).links == net.links


@pytest.mark.parametrize(
    "text, error",
    [
        ("nodes=3 links=1 symmetric=1\n1 2 5\n", DisconnectedNetworkError),
        ("nodes=2 links=2 symmetric=1\n1 2 5\n2 1 5\n", DuplicateLinkError),
        ("nodes=2 links=1 symmetric=1\n1 2 0\n", NonPositiveDistanceError),
        ("nodes=2 links=1 symmetric=1\n1 2 -3\n", NonPositiveDistanceError),
        ("nodes=2 links=1 symmetric=1\n1 4 3\n", UnknownNodeError),
        ("1 2 3\n", NetworkParseError),
        ("nodes=2 links=2 symmetric=1\n1 2 3\n", NetworkParseError),
    ],
)
def test_load_errors(text, error):
    with pytest.raises(error):
        load_network(text)


def test_sioux_falls_shape():
    net = sioux_falls()
    assert len(net.nodes) == 24
    assert net.num_links == 76


def test_shortest_line(line3):
    p = shortest_path(line3, 1, 3)
    assert p.nodes == (1, 2, 3)
    assert p.length == 12


def test_shortest_triangle(triangle):
    p = shortest_path(triangle, 1, 3)
    assert p.nodes == (1, 2, 3) and p.length == 8


def test_shortest_tie_is_lexicographic():
    net = Network.from_links([1, 2, 3, 4], [(1, 3, 1), (3, 4, 1), (1, 2, 1), (2, 4, 1)])
    assert shortest_path(net, 1, 4).nodes == (1, 2, 4)


def _floyd_warshall(net):
    nodes = net.nodes
    d = {(i, j): (0.0 if i == j else float("inf")) for i in nodes for j in nodes}
    for i, j, w in net.links:
        d[(i, j)] = min(d[(i, j)], w)
        if net.symmetric:
            d[(j, i)] = min(d[(j, i)], w)
    for k in nodes:
        for i in nodes:
            for j in nodes:
                if d[(i, k)] + d[(k, j)] < d[(i, j)]:
                    d[(i, j)] = d[(i, k)] + d[(k, j)]
    return d


def test_sioux_falls_shortest_matches_floyd_warshall():
    net = sioux_falls()
    fw = _floyd_warshall(net)
    assert fw[(1, 20)] == SIOUX_1_20
    assert shortest_path(net, 1, 20).length == SIOUX_1_20
    for r in net.nodes:
        for s in net.nodes:
            if r != s:
                assert shortest_path(net, r, s).length == pytest.approx(fw[(r, s)])


def test_ksp_triangle(triangle):
    paths = k_shortest_paths(triangle, 1, 3, 2)
    assert [p.nodes for p in paths] == [(1, 2, 3), (1, 3)]
    assert [p.length for p in paths] == [8, 9]
    assert len(k_shortest_paths(triangle, 1, 3, 5)) == 2


def test_ksp_grid_corner_to_corner():
    def nid(r, c):
        return 3 * r + c + 1

    links = []
    for r in range(3):
        for c in range(3):
            if c < 2:
                links.append((nid(r, c), nid(r, c + 1), 1))
            if r < 2:
                links.append((nid(r, c), nid(r + 1, c), 1))
    net = Network.from_links(range(1, 10), links)
    oracle = all_simple_paths(net, 1, 9)[:3]
    got = k_shortest_paths(net, 1, 9, 3)
    assert [p.nodes for p in got] == oracle
    assert [p.length for p in got] == [4, 4, 4]


def test_ksp_k1_is_shortest():
    net = sioux_falls()
    for r, s in [(1, 21), (7, 13), (24, 2)]:
        assert k_shortest_paths(net, r, s, 1)[0] == shortest_path(net, r, s)


def test_ksp_tau_filter(triangle):
    assert [p.nodes for p in k_shortest_paths(triangle, 1, 3, 2, tau=0.1)] == [(1, 2, 3)]
    assert len(k_shortest_paths(triangle, 1, 3, 2, tau=0.125)) == 2


@pytest.mark.parametrize("seed", range(40))
def test_ksp_matches_exhaustive_enumeration(seed):
    rng = random.Random(seed)
    n = rng.randint(3, 8)
    net = random_network(rng, n, rng.randint(n - 1, min(14, n * (n - 1) // 2)), hi=rng.choice([3, 10]))
    r, s = rng.sample(net.nodes, 2)
    oracle = all_simple_paths(net, r, s)
    got = k_shortest_paths(net, r, s, 10_000)
    assert [p.nodes for p in got] == oracle


def test_round_trip_mirror():
    net = sioux_falls()
    for p in k_shortest_paths(net, 1, 21, 3):
        rt = p.round_trip()
        mid = len(p.nodes) - 1
        assert rt.nodes == p.nodes + p.nodes[-2::-1]
        assert rt.prefix[-1] == 2 * rt.prefix[mid]
        assert rt.length == 2 * p.length
        assert rt.nodes.count(rt.destination) == 1
        for a, b, da, db in zip(rt.nodes, rt.nodes[1:], rt.prefix, rt.prefix[1:]):
            assert db - da == pytest.approx(net.distance(a, b), abs=1e-9)


def test_catalog_line(line3):
    cat = build_catalog(line3, 3)
    assert len(cat) == 6
    assert all(len(v) == 1 for v in cat.entries.values())


def test_sioux_falls_catalog():
    cat = sioux_falls_catalog(3)
    assert len(cat) == 552
    assert cat.num_paths <= 3 * 552
    for od, paths in cat.entries.items():
        assert 1 <= len(paths) <= 3
        lengths = [p.outbound.length for p in paths]
        assert lengths == sorted(lengths)
        assert paths[0].outbound == shortest_path(sioux_falls(), *od)


def test_catalog_serialization_roundtrip():
    cat = sioux_falls_catalog(3)
    text = cat.to_json()
    again = PathCatalog.from_json(text)
    assert again == cat
    assert again.to_json() == text


def test_catalog_deterministic():
    net = sioux_falls()
    assert build_catalog(net, 2).to_json() == build_catalog(net, 2).to_json()


def test_catalog_tau_bound():
    net = sioux_falls()
    cat = build_catalog(net, 3, tau=0.2)
    for paths in cat.entries.values():
        first = paths[0].outbound.length
        assert all(p.outbound.length <= 1.2 * first + 1e-9 for p in paths)
