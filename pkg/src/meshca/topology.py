"""Random wireless mesh network (RWMN) topologies.

Nodes live in a rectangular area (meters) and every node carries the same
number of radios. Links are undirected node pairs whose endpoints are within
transmission range. The generator picks a connected subset of the in-range
pairs whose density and clustering coefficient hit the requested targets.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np

DEFAULT_AREA = (1500.0, 1500.0)
DEFAULT_TX_RANGE = 250.0
DEFAULT_RADIOS = 3

MAX_PLACEMENTS = 50
MAX_STEPS = 10_000


class TopologyError(ValueError):
    pass


class UnreachableTargets(TopologyError):
    """Generation targets cannot be met (infeasible or budget exhausted)."""


@dataclass(frozen=True)
class Link:
    id: int
    a: int
    b: int

    @property
    def nodes(self) -> tuple[int, int]:
        return (self.a, self.b)

    def other(self, node: int) -> int:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class MeshTopology:
    positions: tuple[tuple[float, float], ...]
    links: tuple[Link, ...]
    radios_per_node: int = DEFAULT_RADIOS
    area: tuple[float, float] = DEFAULT_AREA
    tx_range: float = DEFAULT_TX_RANGE

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def nodes(self) -> range:
        return range(len(self.positions))

    def distance(self, u: int, v: int) -> float:
        (x1, y1), (x2, y2) = self.positions[u], self.positions[v]
        return math.hypot(x1 - x2, y1 - y2)

    def neighbors(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {u: set() for u in self.nodes}
        for link in self.links:
            adj[link.a].add(link.b)
            adj[link.b].add(link.a)
        return adj

    def incident_links(self) -> dict[int, list[Link]]:
        inc: dict[int, list[Link]] = {u: [] for u in self.nodes}
        for link in self.links:
            inc[link.a].append(link)
            inc[link.b].append(link)
        return inc

    def link_by_id(self) -> dict[int, Link]:
        return {link.id: link for link in self.links}

    def link_between(self) -> dict[frozenset, Link]:
        return {frozenset(link.nodes): link for link in self.links}

    def is_connected(self) -> bool:
        return _is_connected(self.n_nodes, self.neighbors())

    def check(self) -> None:
        """Raise TopologyError if any structural invariant is violated."""
        seen = set()
        for i, link in enumerate(self.links):
            if link.id != i:
                raise TopologyError(f"link ids must be dense: position {i} has id {link.id}")
            if link.a == link.b:
                raise TopologyError(f"self-link {link.id} on node {link.a}")
            if not (0 <= link.a < self.n_nodes and 0 <= link.b < self.n_nodes):
                raise TopologyError(f"link {link.id} references unknown node")
            key = frozenset(link.nodes)
            if key in seen:
                raise TopologyError(f"duplicate link {link.a}-{link.b}")
            seen.add(key)
            if self.distance(link.a, link.b) > self.tx_range + 1e-9:
                raise TopologyError(f"link {link.id} longer than tx_range")
        if self.radios_per_node < 1:
            raise TopologyError("radios_per_node must be >= 1")


def make_topology(positions, edges, radios_per_node=DEFAULT_RADIOS,
                  area=DEFAULT_AREA, tx_range=DEFAULT_TX_RANGE) -> MeshTopology:
    """Build a topology from positions and (u, v) pairs; link ids follow the sorted pair order."""
    pairs = sorted({(min(u, v), max(u, v)) for u, v in edges})
    links = tuple(Link(i, u, v) for i, (u, v) in enumerate(pairs))
    pos = tuple((float(x), float(y)) for x, y in positions)
    return MeshTopology(pos, links, radios_per_node, tuple(map(float, area)), float(tx_range))


def _is_connected(n: int, adj) -> bool:
    if n == 0:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n


# --------------------------------------------------------------------------
# global metrics


@dataclass(frozen=True)
class GlobalMetrics:
    density: float
    clustering_coefficient: float
    geo_diameter: float
    min_eccentricity: float
    hop_diameter: int
    n_nodes: int
    n_links: int

    def as_dict(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "n_links": self.n_links,
            "density": self.density,
            "clustering_coefficient": self.clustering_coefficient,
            "geo_diameter_m": self.geo_diameter,
            "min_eccentricity_m": self.min_eccentricity,
            "hop_diameter": self.hop_diameter,
        }


def density(n_nodes: int, n_links: int) -> float:
    return n_links / math.comb(n_nodes, 2)


def transitivity(adj) -> float:
    """Global clustering coefficient: 3 * triangles / connected triplets."""
    triangles = 0
    triplets = 0
    for u, nbrs in adj.items():
        d = len(nbrs)
        triplets += d * (d - 1) // 2
        for v in nbrs:
            if v > u:
                triangles += sum(1 for w in adj[v] & nbrs if w > v)
    return 3 * triangles / triplets if triplets else 0.0


def hop_distances(adj, source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def global_metrics(topo: MeshTopology) -> GlobalMetrics:
    adj = topo.neighbors()
    pos = np.asarray(topo.positions)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    ecc = dist.max(axis=1)
    hop_diam = 0
    for u in topo.nodes:
        hops = hop_distances(adj, u)
        if len(hops) < topo.n_nodes:
            hop_diam = -1  # disconnected
            break
        hop_diam = max(hop_diam, max(hops.values()))
    return GlobalMetrics(
        density=density(topo.n_nodes, len(topo.links)),
        clustering_coefficient=transitivity(adj),
        geo_diameter=float(ecc.max()),
        min_eccentricity=float(ecc.min()),
        hop_diameter=hop_diam,
        n_nodes=topo.n_nodes,
        n_links=len(topo.links),
    )


# --------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GenTargets:
    node_count: int = 50
    density_target: float = 0.083
    density_tol: float = 0.005
    cc_target: float = 0.37
    cc_tol: float = 0.05
    seed: int = 0
    area: tuple[float, float] = DEFAULT_AREA
    tx_range: float = DEFAULT_TX_RANGE
    radios_per_node: int = DEFAULT_RADIOS
    # minimum spacing between placed nodes; spreads nodes over the area
    min_separation: float = 100.0

    def __post_init__(self):
        if self.density_tol < 0 or self.cc_tol < 0:
            raise TopologyError("tolerances must be non-negative")
        for name in ("density_target", "cc_target"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise TopologyError(f"{name}={value} outside [0, 1]")

    @property
    def link_count(self) -> int:
        return round(self.density_target * math.comb(self.node_count, 2))


def _place_nodes(rng: np.random.Generator, targets: GenTargets,
                 compaction: float = 1.0) -> np.ndarray | None:
    """Attach nodes one at a time, each within range of an already placed node.

    Uniform placement of 50 nodes at the default range is almost never
    connected, so each new point is drawn uniformly from the area and kept
    only if it is within ``compaction * tx_range`` of the current cluster and
    at least min_separation (scaled the same way) from every placed node.
    """
    w, h = targets.area
    r = targets.tx_range * compaction
    sep = min(targets.min_separation * compaction, 0.9 * r)
    pts = np.empty((targets.node_count, 2))
    pts[0] = rng.uniform((0.0, 0.0), (w, h))
    placed = 1
    budget = 2000 * targets.node_count
    while placed < targets.node_count:
        if budget == 0:
            return None
        budget -= 1
        p = rng.uniform((0.0, 0.0), (w, h))
        d = np.hypot(*(pts[:placed] - p).T).min()
        if sep <= d <= r:
            pts[placed] = p
            placed += 1
    return pts


class _EdgeState:
    """Chosen edge set with incrementally maintained triangle/triplet counts."""

    def __init__(self, n: int):
        self.adj: list[set[int]] = [set() for _ in range(n)]
        self.triangles = 0
        self.triplets = 0

    def add(self, u: int, v: int) -> None:
        self.triangles += len(self.adj[u] & self.adj[v])
        self.triplets += len(self.adj[u]) + len(self.adj[v])
        self.adj[u].add(v)
        self.adj[v].add(u)

    def remove(self, u: int, v: int) -> None:
        self.adj[u].discard(v)
        self.adj[v].discard(u)
        self.triangles -= len(self.adj[u] & self.adj[v])
        self.triplets -= len(self.adj[u]) + len(self.adj[v])

    def cc(self) -> float:
        return 3 * self.triangles / self.triplets if self.triplets else 0.0

    def connected_without(self, u: int, v: int) -> bool:
        """True if u still reaches v after removing the (present) edge u-v."""
        seen = {u}
        stack = [u]
        while stack:
            x = stack.pop()
            for y in self.adj[x]:
                if x == u and y == v:
                    continue
                if y == v:
                    return True
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False


def _random_spanning_tree(rng, n, candidates) -> list[tuple[int, int]] | None:
    """Kruskal over randomly weighted candidate edges."""
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = []
    for idx in rng.permutation(len(candidates)):
        u, v = candidates[idx]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.append((u, v))
    return tree if len(tree) == n - 1 else None


def _search_edges(rng, n, candidates, m, targets) -> list[tuple[int, int]] | None:
    tree = _random_spanning_tree(rng, n, candidates)
    if tree is None:
        return None
    state = _EdgeState(n)
    chosen = set(tree)
    rest = [e for e in candidates if e not in chosen]
    extra = rng.permutation(len(rest))[: m - len(tree)]
    chosen.update(rest[i] for i in extra)
    for u, v in sorted(chosen):
        state.add(u, v)
    chosen_l = sorted(chosen)
    unchosen_l = sorted(set(candidates) - chosen)

    err = abs(state.cc() - targets.cc_target)
    for _ in range(MAX_STEPS):
        if err <= targets.cc_tol * 0.2 or not unchosen_l:
            break
        i = int(rng.integers(len(chosen_l)))
        j = int(rng.integers(len(unchosen_l)))
        out_e, in_e = chosen_l[i], unchosen_l[j]
        state.add(*in_e)
        if not state.connected_without(*out_e):
            state.remove(*in_e)
            continue
        state.remove(*out_e)
        new_err = abs(state.cc() - targets.cc_target)
        if new_err <= err:
            err = new_err
            chosen_l[i], unchosen_l[j] = in_e, out_e
        else:
            state.add(*out_e)
            state.remove(*in_e)
    if err > targets.cc_tol:
        return None
    return sorted(chosen_l)


def generate_rwmn(targets: GenTargets) -> MeshTopology:
    """Generate a connected random mesh meeting the density and CC targets.

    Deterministic for a fixed ``targets.seed``. Raises UnreachableTargets when
    the targets are infeasible or the search budget runs out.
    """
    n = targets.node_count
    if n < 4:
        raise UnreachableTargets(f"unreachable: node_count={n} < 4")
    total = math.comb(n, 2)
    m = targets.link_count
    if m < n - 1:
        raise UnreachableTargets(
            f"unreachable: density below connectivity minimum "
            f"({targets.density_target}*{total} -> {m} links < {n - 1} for a spanning tree)")
    if abs(m / total - targets.density_target) > targets.density_tol:
        raise UnreachableTargets(
            f"unreachable: no integer link count within density tolerance for n={n}")

    rng = np.random.default_rng(targets.seed)
    short_of_links = 0
    for _ in range(MAX_PLACEMENTS):
        # each placement that lacked in-range pairs packs the next one tighter
        pts = _place_nodes(rng, targets, 0.85 ** short_of_links)
        if pts is None:
            continue
        candidates = [
            (u, v) for u, v in combinations(range(n), 2)
            if math.hypot(*(pts[u] - pts[v])) <= targets.tx_range
        ]
        if len(candidates) < m:
            short_of_links += 1
            continue
        edges = _search_edges(rng, n, candidates, m, targets)
        if edges is None:
            continue
        topo = make_topology(pts, edges, targets.radios_per_node, targets.area, targets.tx_range)
        return topo
    raise UnreachableTargets(
        f"unreachable: no placement met targets after {MAX_PLACEMENTS} placements "
        f"({short_of_links} had fewer than {m} in-range pairs)")


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    rows: list[tuple[str, float, float, float, bool]] = field(default_factory=list)
    connected: bool = True

    @property
    def passed(self) -> bool:
        return self.connected and all(row[-1] for row in self.rows)

    def failures(self) -> list[str]:
        out = [] if self.connected else ["not connected"]
        out += [f"{name}: measured {got:.4f}, target {want}±{tol}"
                for name, got, want, tol, ok in self.rows if not ok]
        return out

    def __str__(self) -> str:
        lines = [f"{'connected':<24} {'yes' if self.connected else 'NO'}"]
        for name, got, want, tol, ok in self.rows:
            lines.append(f"{name:<24} {got:.4f}  target {want}±{tol}  {'pass' if ok else 'FAIL'}")
        lines.append("overall: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def validate_topology(topo: MeshTopology, targets: GenTargets) -> ValidationReport:
    gm = global_metrics(topo)
    report = ValidationReport(connected=topo.is_connected())
    eps = 1e-12
    for name, got, want, tol in (
        ("density", gm.density, targets.density_target, targets.density_tol),
        ("clustering_coefficient", gm.clustering_coefficient, targets.cc_target, targets.cc_tol),
    ):
        report.rows.append((name, got, want, tol, abs(got - want) <= tol + eps))
    if targets.node_count != topo.n_nodes:
        report.rows.append(("node_count", topo.n_nodes, targets.node_count, 0, False))
    return report


# --------------------------------------------------------------------------
# file format


def topology_to_dict(topo: MeshTopology) -> dict:
    return {
        "area": list(topo.area),
        "links": [{"a": l.a, "b": l.b, "id": l.id} for l in topo.links],
        "nodes": [{"id": i, "x": x, "y": y} for i, (x, y) in enumerate(topo.positions)],
        "radios_per_node": topo.radios_per_node,
        "tx_range": topo.tx_range,
    }


def topology_from_dict(data: dict) -> MeshTopology:
    nodes = sorted(data["nodes"], key=lambda d: d["id"])
    if [d["id"] for d in nodes] != list(range(len(nodes))):
        raise TopologyError("node ids must be 0..n-1")
    links = tuple(Link(int(d["id"]), int(d["a"]), int(d["b"]))
                  for d in sorted(data["links"], key=lambda d: d["id"]))
    topo = MeshTopology(
        positions=tuple((float(d["x"]), float(d["y"])) for d in nodes),
        links=links,
        radios_per_node=int(data.get("radios_per_node", DEFAULT_RADIOS)),
        area=tuple(float(x) for x in data.get("area", DEFAULT_AREA)),
        tx_range=float(data.get("tx_range", DEFAULT_TX_RANGE)),
    )
    topo.check()
    return topo


def write_topology(topo: MeshTopology, path) -> None:
    Path(path).write_text(json.dumps(topology_to_dict(topo), indent=1, sort_keys=True) + "\n")


def read_topology(path) -> MeshTopology:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TopologyError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return topology_from_dict(data)
