"""CA performance prediction metrics beyond TID: CDAL_cost and CXLS_wt.

All metrics are oriented "higher = more interference = worse".
"""
from __future__ import annotations

import math

from .conflict_graph import ConflictGraph, total_interference_degree
from .topology import MeshTopology


class MetricError(ValueError):
    pass


def channel_loads(lcm: dict[int, int], channel_count: int) -> list[int]:
    counts = [0] * channel_count
    for c in lcm.values():
        if not 0 <= c < channel_count:
            raise MetricError(f"channel {c} outside [0, {channel_count})")
        counts[c] += 1
    return counts


def cdal_cost(lcm: dict[int, int], channel_count: int) -> float:
    """Population standard deviation of the number of links per channel."""
    if not lcm:
        raise MetricError("cdal_cost of an empty link map")
    counts = channel_loads(lcm, channel_count)
    mean = sum(counts) / channel_count
    return math.sqrt(sum((c - mean) ** 2 for c in counts) / channel_count)


def _line_graph(topo: MeshTopology, links) -> dict[int, set[int]]:
    """Links adjacent iff they share a node, restricted to ``links``."""
    keep = set(links)
    inc: dict[int, list[int]] = {u: [] for u in topo.nodes}
    for link in topo.links:
        if link.id in keep:
            inc[link.a].append(link.id)
            inc[link.b].append(link.id)
    adj = {l: set() for l in keep}
    for ids in inc.values():
        for i in ids:
            adj[i].update(j for j in ids if j != i)
    return adj


def enumerate_x_link_sets(topo: MeshTopology, lcm: dict[int, int], x: int) -> list[tuple[int, ...]]:
    """All connected sets of exactly ``x`` alive links, each once, sorted.

    Connectivity is over shared nodes. Uses ESU-style extension: every set is
    grown from its smallest link using only larger links, and each candidate
    joins the extension pool only through its first discovering member.
    """
    if x < 1:
        raise MetricError(f"x must be >= 1, got {x}")
    adj = _line_graph(topo, lcm)
    found: list[tuple[int, ...]] = []

    def extend(sub: list[int], closed: set[int], ext: list[int], root: int) -> None:
        if len(sub) == x:
            found.append(tuple(sorted(sub)))
            return
        ext = sorted(ext)
        while ext:
            w = ext.pop(0)
            fresh = [u for u in adj[w] if u > root and u not in closed]
            extend(sub + [w], closed | adj[w] | {w}, ext + fresh, root)

    for v in sorted(adj):
        extend([v], adj[v] | {v}, [u for u in adj[v] if u > v], v)
    found.sort()
    return found


def x_link_set_weight(cg: ConflictGraph, lcm: dict[int, int], links) -> int:
    """Same-channel conflicting pairs inside one link set."""
    links = list(links)
    w = 0
    for i, a in enumerate(links):
        for b in links[i + 1:]:
            if lcm[a] == lcm[b] and cg.has_edge(a, b):
                w += 1
    return w


def cxls_wt(topo: MeshTopology, lcm: dict[int, int], cg: ConflictGraph, x: int | None = None) -> int:
    """Cumulative X-link-set weight; ``x`` defaults to the graph's I_r:T_r ratio."""
    if x is None:
        x = cg.ir_tr_ratio
    if x != cg.ir_tr_ratio:
        raise MetricError(f"x={x} does not match conflict graph ir_tr_ratio={cg.ir_tr_ratio}")
    return sum(x_link_set_weight(cg, lcm, s) for s in enumerate_x_link_sets(topo, lcm, x))


def all_metrics(topo: MeshTopology, lcm: dict[int, int], cg: ConflictGraph,
                channel_count: int) -> dict[str, float]:
    """The three prediction metrics keyed by their report names."""
    return {
        "TID": total_interference_degree(cg, lcm),
        "CDAL": cdal_cost(lcm, channel_count),
        "CXLS": cxls_wt(topo, lcm, cg),
    }


def format_metrics_csv(rows: dict[str, dict[str, float]]) -> str:
    out = ["scheme,TID,CDAL,CXLS"]
    for scheme, m in rows.items():
        out.append(f"{scheme},{m['TID']},{m['CDAL']:.6f},{m['CXLS']}")
    return "\n".join(out) + "\n"
