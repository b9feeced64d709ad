"""Road network representation, link-list ingestion and deviation-path catalogs.

A network file is a plain-text link list::

    # comment
    nodes=3 links=2 symmetric=1
    1 2 5
    2 3 7

Node ids are ``1..nodes``.  With ``symmetric=1`` every row is an undirected
link; with ``symmetric=0`` rows are directed and each one must have a reverse
row of equal distance, because round trips return along the outbound path.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field
from typing import Iterable

CATALOG_SCHEMA = "afslab.catalog/1"
_TIE = 9  # decimals used when comparing path lengths


class NetworkError(ValueError):
    """Base class for network parse and validation failures."""


class NetworkParseError(NetworkError):
    pass


class DuplicateLinkError(NetworkError):
    pass


class NonPositiveDistanceError(NetworkError):
    pass


class DisconnectedNetworkError(NetworkError):
    pass


class UnknownNodeError(NetworkError):
    pass


class AsymmetricLinkError(NetworkError):
    pass


class UnreachableError(NetworkError):
    pass


@dataclass(frozen=True)
class Network:
    nodes: tuple[int, ...]
    links: tuple[tuple[int, int, float], ...]
    symmetric: bool
    adjacency: dict[int, dict[int, float]] = field(repr=False, compare=False)

    @classmethod
    def from_links(
        cls, nodes: Iterable[int], links: Iterable[tuple[int, int, float]], symmetric: bool = True
    ) -> "Network":
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise NetworkParseError("node ids must be unique")
        known = set(nodes)
        adjacency: dict[int, dict[int, float]] = {n: {} for n in nodes}
        seen: set = set()
        clean = []
        for i, j, d in links:
            i, j, d = int(i), int(j), float(d)
            if i not in known or j not in known:
                raise UnknownNodeError(f"link ({i}, {j}) references an undeclared node")
            if i == j:
                raise NetworkParseError(f"self-loop at node {i}")
            if not d > 0:
                raise NonPositiveDistanceError(f"link ({i}, {j}) has distance {d}")
            key = frozenset((i, j)) if symmetric else (i, j)
            if key in seen:
                raise DuplicateLinkError(f"duplicate link ({i}, {j})")
            seen.add(key)
            clean.append((i, j, d))
            adjacency[i][j] = d
            if symmetric:
                adjacency[j][i] = d
        if not symmetric:
            for i, j, d in clean:
                if adjacency[j].get(i) != d:
                    raise AsymmetricLinkError(f"link ({i}, {j}) has no reverse link of equal distance")
        net = cls(nodes, tuple(clean), symmetric, adjacency)
        if not net.is_connected():
            raise DisconnectedNetworkError("network is not connected")
        return net

    @property
    def num_links(self) -> int:
        return len(self.links)

    def distance(self, i: int, j: int) -> float:
        return self.adjacency[i][j]

    def is_connected(self) -> bool:
        if not self.nodes:
            return True
        start = self.nodes[0]
        stack, seen = [start], {start}
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.nodes)

    def to_text(self) -> str:
        lines = [f"nodes={len(self.nodes)} links={self.num_links} symmetric={int(self.symmetric)}"]
        lines += [f"{i} {j} {d:g}" for i, j, d in self.links]
        return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^nodes\s*=\s*(\d+)\s+links\s*=\s*(\d+)\s+symmetric\s*=\s*([01])$")


def load_network(source: str) -> Network:
    """Parse link-list text into a validated :class:`Network`."""
    header = None
    rows = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            m = _HEADER.match(line)
            if not m:
                raise NetworkParseError(f"line {lineno}: expected 'nodes=<n> links=<m> symmetric=<0|1>'")
            header = tuple(int(g) for g in m.groups())
            continue
        parts = line.split()
        if len(parts) != 3:
            raise NetworkParseError(f"line {lineno}: expected 'i j distance'")
        try:
            rows.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise NetworkParseError(f"line {lineno}: {exc}") from None
    if header is None:
        raise NetworkParseError("missing header line")
    n, m, sym = header
    if len(rows) != m:
        raise NetworkParseError(f"header declares {m} links, found {len(rows)}")
    return Network.from_links(range(1, n + 1), rows, symmetric=bool(sym))


@dataclass(frozen=True)
class OneWayPath:
    nodes: tuple[int, ...]
    prefix: tuple[float, ...]

    @classmethod
    def along(cls, net: Network, nodes: Iterable[int]) -> "OneWayPath":
        nodes = tuple(nodes)
        prefix = [0.0]
        for a, b in zip(nodes, nodes[1:]):
            prefix.append(prefix[-1] + net.distance(a, b))
        return cls(nodes, tuple(prefix))

    @property
    def length(self) -> float:
        return self.prefix[-1]

    def round_trip(self) -> "RoundTripPath":
        return RoundTripPath(self)


@dataclass(frozen=True)
class RoundTripPath:
    """Outbound path mirrored back to its origin (r, ..., s, ..., r)."""

    outbound: OneWayPath
    nodes: tuple[int, ...] = field(init=False)
    prefix: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        out = self.outbound
        half = out.length
        back = tuple(half + (half - p) for p in out.prefix[-2::-1])
        object.__setattr__(self, "nodes", out.nodes + out.nodes[-2::-1])
        object.__setattr__(self, "prefix", out.prefix + back)

    @property
    def origin(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.outbound.nodes[-1]

    @property
    def length(self) -> float:
        return self.prefix[-1]

    @property
    def legs(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.prefix, self.prefix[1:]))

    def visits(self, node: int) -> bool:
        return node in self.outbound.nodes

    def positions_of(self, nodes) -> tuple[int, ...]:
        """Positions along the full round trip whose node is in ``nodes``."""
        return tuple(p for p, v in enumerate(self.nodes) if v in nodes)


def _key(length: float, nodes: tuple[int, ...]):
    return (round(length, _TIE), nodes)


def _dijkstra(net: Network, r: int, s: int, banned_nodes=frozenset(), banned_edges=frozenset()):
    """Shortest r-s path, lexicographically smallest node sequence among ties."""
    heap = [(0.0, (r,))]
    done = set()
    while heap:
        dist, path = heapq.heappop(heap)
        u = path[-1]
        if u in done:
            continue
        done.add(u)
        if u == s:
            return dist, path
        for v, d in net.adjacency[u].items():
            if v in done or v in banned_nodes or (u, v) in banned_edges:
                continue
            heapq.heappush(heap, (round(dist + d, _TIE), path + (v,)))
    return None


def shortest_path(net: Network, r: int, s: int) -> OneWayPath:
    if r == s:
        raise ValueError("origin and destination must differ")
    for n in (r, s):
        if n not in net.adjacency:
            raise UnknownNodeError(f"node {n} not in network")
    found = _dijkstra(net, r, s)
    if found is None:
        raise UnreachableError(f"no path from {r} to {s}")
    return OneWayPath.along(net, found[1])


def k_shortest_paths(net: Network, r: int, s: int, K: int, tau: float | None = None) -> list[OneWayPath]:
    """Up to ``K`` loopless r-s paths in (length, node sequence) order.

    Yen's deviation scheme; candidates are ranked by rounded length and then
    lexicographically, so ties resolve identically on every run.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    first = shortest_path(net, r, s)
    found = [first.nodes]
    lengths = {first.nodes: first.length}
    candidates: list = []
    queued: set = set()
    while len(found) < K:
        last = found[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            banned_edges = {(p[i], p[i + 1]) for p in found if len(p) > i + 1 and p[: i + 1] == root}
            spur = _dijkstra(net, root[-1], s, banned_nodes=frozenset(root[:-1]), banned_edges=banned_edges)
            if spur is None:
                continue
            nodes = root[:-1] + spur[1]
            if nodes in queued or nodes in lengths:
                continue
            path = OneWayPath.along(net, nodes)
            queued.add(nodes)
            heapq.heappush(candidates, (_key(path.length, nodes), path))
        if not candidates:
            break
        _, path = heapq.heappop(candidates)
        queued.discard(path.nodes)
        found.append(path.nodes)
        lengths[path.nodes] = path.length
    paths = [OneWayPath.along(net, p) for p in found]
    if tau is not None:
        limit = (1.0 + tau) * first.length + 1e-9
        paths = [p for p in paths if p.length <= limit]
    return paths


@dataclass(frozen=True)
class PathCatalog:
    K: int
    tau: float | None
    entries: dict[tuple[int, int], tuple[RoundTripPath, ...]]

    def __getitem__(self, od: tuple[int, int]) -> tuple[RoundTripPath, ...]:
        return self.entries[od]

    def __len__(self) -> int:
        return len(self.entries)

    def pairs(self):
        return sorted(self.entries)

    @property
    def num_paths(self) -> int:
        return sum(len(v) for v in self.entries.values())

    def to_dict(self) -> dict:
        return {
            "schema": CATALOG_SCHEMA,
            "K": self.K,
            "tau": self.tau,
            "entries": [
                {
                    "origin": r,
                    "destination": s,
                    "paths": [
                        {"nodes": list(p.outbound.nodes), "prefix": list(p.outbound.prefix)}
                        for p in self.entries[(r, s)]
                    ],
                }
                for r, s in self.pairs()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "PathCatalog":
        if data.get("schema") != CATALOG_SCHEMA:
            raise ValueError(f"unsupported catalog schema {data.get('schema')!r}")
        entries = {}
        for e in data["entries"]:
            entries[(int(e["origin"]), int(e["destination"]))] = tuple(
                RoundTripPath(OneWayPath(tuple(p["nodes"]), tuple(float(x) for x in p["prefix"])))
                for p in e["paths"]
            )
        return cls(int(data["K"]), data["tau"], entries)

    @classmethod
    def from_json(cls, text: str) -> "PathCatalog":
        return cls.from_dict(json.loads(text))


def build_catalog(net: Network, K: int, tau: float | None = None) -> PathCatalog:
    entries = {}
    for r in net.nodes:
        for s in net.nodes:
            if r != s:
                entries[(r, s)] = tuple(p.round_trip() for p in k_shortest_paths(net, r, s, K, tau))
    return PathCatalog(K, tau, entries)
