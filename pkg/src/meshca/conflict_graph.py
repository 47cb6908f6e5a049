"""Multi-radio multi-channel conflict graph (with radio co-location edges).

Vertices are topology links. Two links conflict when some endpoint of one
lies within the interference range ``ir_tr_ratio * tx_range`` of some
endpoint of the other (protocol model). Links that share a node are always
in range of each other; if a channel assignment binds them to two different
radios of that node, the edge is additionally tagged ``colocation``.

A link map (``lcm``) maps link id -> channel; only links present in the map
carry traffic, so conflicts with unmapped (broken) links are ignored.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .topology import MeshTopology

RANGE = "range"
COLOCATION = "colocation"


class ConflictGraphError(ValueError):
    pass


@dataclass(frozen=True)
class ConflictGraph:
    vertices: tuple[int, ...]
    adj: dict[int, frozenset[int]]
    kinds: dict[tuple[int, int], frozenset[str]]
    ir_tr_ratio: int
    interference_range: float

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.kinds)

    @property
    def n_edges(self) -> int:
        return len(self.kinds)

    def edge_kind(self, a: int, b: int) -> frozenset[str]:
        return self.kinds[(a, b) if a < b else (b, a)]

    def has_edge(self, a: int, b: int) -> bool:
        return b in self.adj.get(a, ())

    def dump(self) -> str:
        return "".join(f"{a} {b} {'+'.join(sorted(k))}\n" for (a, b), k in sorted(self.kinds.items()))


def _endpoint_distances(topo: MeshTopology) -> np.ndarray:
    """(L, L) matrix of the minimum endpoint-to-endpoint distance between links."""
    pos = np.asarray(topo.positions, dtype=float).reshape(-1, 2)
    ends = np.array([link.nodes for link in topo.links], dtype=int).reshape(-1, 2)
    pa, pb = pos[ends[:, 0]], pos[ends[:, 1]]
    best = None
    for p in (pa, pb):
        for q in (pa, pb):
            d = np.hypot(p[:, None, 0] - q[None, :, 0], p[:, None, 1] - q[None, :, 1])
            best = d if best is None else np.minimum(best, d)
    return best if best is not None else np.zeros((0, 0))


def build_emmcg(topo: MeshTopology, ir_tr_ratio: int = 2, binding=None) -> ConflictGraph:
    """Build the conflict graph for ``topo``.

    ``binding`` optionally maps link id -> (radio at link.a, radio at link.b);
    it only affects edge kinds (co-location tagging), never the edge set.
    """
    if int(ir_tr_ratio) != ir_tr_ratio or ir_tr_ratio < 1:
        raise ConflictGraphError(f"ir_tr_ratio must be a positive integer, got {ir_tr_ratio}")
    ir = ir_tr_ratio * topo.tx_range
    dist = _endpoint_distances(topo)
    n = len(topo.links)
    ii, jj = np.nonzero(np.triu(dist <= ir + 1e-9, k=1))

    adj: dict[int, set[int]] = {link.id: set() for link in topo.links}
    kinds: dict[tuple[int, int], frozenset[str]] = {}
    links = topo.links
    for i, j in zip(ii.tolist(), jj.tolist()):
        kind = {RANGE}
        if binding is not None and _colocated(links[i], links[j], binding):
            kind.add(COLOCATION)
        kinds[(i, j)] = frozenset(kind)
        adj[i].add(j)
        adj[j].add(i)
    assert n == len(adj)
    return ConflictGraph(
        vertices=tuple(range(n)),
        adj={k: frozenset(v) for k, v in adj.items()},
        kinds=kinds,
        ir_tr_ratio=int(ir_tr_ratio),
        interference_range=ir,
    )


def _radio_at(link, node, binding) -> int | None:
    pair = binding.get(link.id)
    if pair is None:
        return None
    return pair[0] if node == link.a else pair[1]


def _colocated(l1, l2, binding) -> bool:
    for node in set(l1.nodes) & set(l2.nodes):
        r1, r2 = _radio_at(l1, node, binding), _radio_at(l2, node, binding)
        if r1 is not None and r2 is not None and r1 != r2:
            return True
    return False


def interference_degree(cg: ConflictGraph, lcm: dict[int, int], link: int) -> int:
    """Number of conflicting neighbours of ``link`` that use the same channel."""
    if link not in cg.adj:
        raise ConflictGraphError(f"link {link} is not a vertex of the conflict graph")
    if link not in lcm:
        raise ConflictGraphError(f"link {link} has no channel")
    ch = lcm[link]
    return sum(1 for other in cg.adj[link] if lcm.get(other) == ch)


def total_interference_degree(cg: ConflictGraph, lcm: dict[int, int]) -> int:
    """Number of conflicting link pairs that share a channel."""
    for link in lcm:
        if link not in cg.adj:
            raise ConflictGraphError(f"link {link} is not a vertex of the conflict graph")
    tid = 0
    for a, b in cg.kinds:
        ca = lcm.get(a)
        if ca is not None and ca == lcm.get(b):
            tid += 1
    return tid


def write_dump(cg: ConflictGraph, path) -> None:
    Path(path).write_text(cg.dump())
