"""Channel assignments and the CA scheme suite.

A channel assignment (CA) tunes every radio of every node to a channel and
binds every link to one radio at each endpoint. A link is *alive* when its
two bound radios share a channel; that channel is the link's channel.

Schemes work on link channels under the radio constraint (a node can serve
at most ``radios_per_node`` distinct channels) and are then materialised
into radio channels plus bindings by :func:`from_link_channels`.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conflict_graph import ConflictGraph
from .topology import MeshTopology

DEFAULT_CHANNELS = 4
PRESET_SCHEMES = ("BFS", "MIS", "EC", "LP", "EIZM", "OIS")
BASELINE_SCHEMES = ("SINGLE", "SPREAD")
SCHEMES = PRESET_SCHEMES + BASELINE_SCHEMES
LOCAL_SEARCH_PASSES = 20


class AssignmentError(ValueError):
    pass


class BrokenLinks(AssignmentError):
    def __init__(self, links):
        self.links = sorted(links)
        super().__init__(f"broken link(s), endpoints share no channel: {self.links}")


@dataclass
class ChannelAssignment:
    radio_channels: dict[tuple[int, int], int]
    link_radios: dict[int, tuple[int, int]] = field(default_factory=dict)
    scheme: str = ""
    channel_count: int = DEFAULT_CHANNELS

    def channels_of(self, node: int, radios: int) -> list[int]:
        return [self.radio_channels[(node, r)] for r in range(radios)]

    def relabel(self, perm) -> "ChannelAssignment":
        """Same assignment with channel ``c`` renamed to ``perm[c]``."""
        return ChannelAssignment(
            {k: int(perm[c]) for k, c in self.radio_channels.items()},
            dict(self.link_radios), self.scheme, self.channel_count)

    def check(self, topo: MeshTopology) -> None:
        for u in topo.nodes:
            for r in range(topo.radios_per_node):
                c = self.radio_channels.get((u, r))
                if c is None:
                    raise AssignmentError(f"radio ({u}, {r}) has no channel")
                if not 0 <= c < self.channel_count:
                    raise AssignmentError(f"radio ({u}, {r}) channel {c} out of range")


# --------------------------------------------------------------------------
# link resolution


def _link_channel(topo, ca, link) -> tuple[int, int, int] | None:
    """(radio_a, radio_b, channel) serving ``link``, or None if broken."""
    R = topo.radios_per_node
    bound = ca.link_radios.get(link.id)
    if bound is not None:
        ra, rb = bound
        ca_ = ca.radio_channels.get((link.a, ra))
        if ca_ is not None and ca_ == ca.radio_channels.get((link.b, rb)):
            return ra, rb, ca_
        return None
    # unbound: lowest common channel, lowest radio ids
    best = None
    for ra in range(R):
        for rb in range(R):
            c = ca.radio_channels[(link.a, ra)]
            if c == ca.radio_channels[(link.b, rb)] and (best is None or c < best[2]):
                best = (ra, rb, c)
    return best


def live_link_channels(topo: MeshTopology, ca: ChannelAssignment) -> tuple[dict[int, int], list[int]]:
    """Return (link -> channel for alive links, sorted broken link ids)."""
    lcm, broken = {}, []
    for link in topo.links:
        hit = _link_channel(topo, ca, link)
        if hit is None:
            broken.append(link.id)
        else:
            lcm[link.id] = hit[2]
    return lcm, broken


def resolve_link_channels(topo: MeshTopology, ca: ChannelAssignment) -> dict[int, int]:
    lcm, broken = live_link_channels(topo, ca)
    if broken:
        raise BrokenLinks(broken)
    return lcm


@dataclass(frozen=True)
class PreservationReport:
    broken: tuple[int, ...]

    @property
    def preserved(self) -> bool:
        return not self.broken


def check_topology_preservation(topo: MeshTopology, ca: ChannelAssignment) -> PreservationReport:
    return PreservationReport(tuple(live_link_channels(topo, ca)[1]))


# --------------------------------------------------------------------------
# materialisation


def from_link_channels(topo: MeshTopology, link_ch: dict[int, int], channel_count: int,
                       scheme: str = "") -> ChannelAssignment:
    """Tune radios to serve ``link_ch`` and bind links to radios.

    Each node keeps its most used link channels (ties: lower channel) up to
    its radio count; spare radios take the lowest channels not yet present.
    A link whose channel did not survive at an endpoint falls back to the
    lowest channel common to both endpoints, or stays unbound (broken).
    """
    R = topo.radios_per_node
    inc = topo.incident_links()
    radio_channels: dict[tuple[int, int], int] = {}
    for u in topo.nodes:
        use = Counter(link_ch[l.id] for l in inc[u] if l.id in link_ch)
        kept = sorted(sorted(use, key=lambda c: (-use[c], c))[:R])
        spare = [c for c in range(channel_count) if c not in kept]
        while len(kept) < R:
            kept.append(spare.pop(0) if spare else kept[0])
        for r, c in enumerate(kept):
            radio_channels[(u, r)] = c

    def radio_for(node, ch):
        for r in range(R):
            if radio_channels[(node, r)] == ch:
                return r
        return None

    link_radios = {}
    for link in topo.links:
        ch = link_ch.get(link.id)
        ra = radio_for(link.a, ch) if ch is not None else None
        rb = radio_for(link.b, ch) if ch is not None else None
        if ra is None or rb is None:
            common = sorted({radio_channels[(link.a, r)] for r in range(R)}
                            & {radio_channels[(link.b, r)] for r in range(R)})
            if not common:
                continue
            ra, rb = radio_for(link.a, common[0]), radio_for(link.b, common[0])
        link_radios[link.id] = (ra, rb)
    return ChannelAssignment(radio_channels, link_radios, scheme, channel_count)


# --------------------------------------------------------------------------
# shared greedy machinery


def _weights(topo: MeshTopology, cg: ConflictGraph, colocation_weight: int):
    """Edge weights for the greedy objective; links sharing a node get ``colocation_weight``."""
    links = topo.links
    w = {}
    for a, b in cg.edges():
        shared = set(links[a].nodes) & set(links[b].nodes)
        w[(a, b)] = w[(b, a)] = colocation_weight if shared else 1
    return w


class _Greedy:
    """Incremental link-channel state respecting per-node radio limits."""

    def __init__(self, topo, cg, channel_count, colocation_weight=1):
        self.topo = topo
        self.cg = cg
        self.C = channel_count
        self.R = topo.radios_per_node
        self.w = _weights(topo, cg, colocation_weight)
        self.ch: dict[int, int] = {}
        self.node_use = [Counter() for _ in topo.nodes]

    def cost(self, link: int, c: int) -> int:
        ch = self.ch
        return sum(self.w[(link, o)] for o in self.cg.adj[link] if ch.get(o) == c)

    def _fits(self, node, c, leaving=None) -> bool:
        use = self.node_use[node]
        if use[c] > 0:
            return True
        distinct = len(use)
        if leaving is not None and use[leaving] == 1:
            distinct -= 1
        return distinct < self.R

    def feasible(self, link: int) -> list[int]:
        l = self.topo.links[link]
        old = self.ch.get(link)
        return [c for c in range(self.C)
                if self._fits(l.a, c, old) and self._fits(l.b, c, old)]

    def set(self, link: int, c: int) -> None:
        l = self.topo.links[link]
        old = self.ch.get(link)
        for u in l.nodes:
            use = self.node_use[u]
            if old is not None:
                use[old] -= 1
                if use[old] == 0:
                    del use[old]
            use[c] += 1
        self.ch[link] = c

    def best(self, link: int, prefer=None, load=None) -> int:
        options = self.feasible(link)
        if not options:
            # cannot happen with R >= ceil(C / 2); keep the link, it will be flagged broken
            return min(self.node_use[self.topo.links[link].a] or [0])

        def key(c):
            return (self.cost(link, c), 0 if c == prefer else 1,
                    load[c] if load is not None else 0, c)
        return min(options, key=key)

    def improve(self, rng, passes=LOCAL_SEARCH_PASSES) -> None:
        """Re-channel single links while that strictly lowers the weighted conflicts."""
        links = sorted(self.ch)
        for _ in range(passes):
            moved = False
            for idx in rng.permutation(len(links)):
                link = links[idx]
                cur = self.ch[link]
                here = self.cost(link, cur)
                for c in self.feasible(link):
                    if c != cur and self.cost(link, c) < here:
                        here = self.cost(link, c)
                        cur = c
                if cur != self.ch[link]:
                    self.set(link, cur)
                    moved = True
            if not moved:
                break


# --------------------------------------------------------------------------
# schemes


def _single(topo, cg, C, rng):
    return {l.id: 0 for l in topo.links}


def _spread(topo, cg, C, rng):
    g = _Greedy(topo, cg, C)
    load = [0] * C
    for link in sorted(cg.vertices, key=lambda v: (-len(cg.adj[v]), v)):
        c = g.best(link, load=load)
        g.set(link, c)
        load[c] += 1
    g.improve(rng)
    return g.ch


def _bfs(topo, cg, C, rng):
    g = _Greedy(topo, cg, C)
    adj = topo.neighbors()
    inc = topo.incident_links()
    root = int(rng.integers(topo.n_nodes))
    order, seen, queue = [], {root}, deque([root])
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in sorted(adj[u]):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    order += [u for u in topo.nodes if u not in seen]
    radios: dict[int, list[int]] = {}
    for u in order:
        # fix this node's radios: channels already forced, then lowest free ones
        chans = sorted(g.node_use[u])
        chans += [c for c in range(C) if c not in chans][: max(0, g.R - len(chans))]
        radios[u] = chans
        for l in sorted(inc[u], key=lambda l: l.id):
            if l.id in g.ch:
                continue
            v = l.other(u)
            options = [c for c in chans if v not in radios or c in radios[v]]
            options = [c for c in options if g._fits(v, c)] or options or chans
            g.set(l.id, min(options, key=lambda c: (g.cost(l.id, c), c)))
    return g.ch


def _independent_sets(cg: ConflictGraph, weight) -> list[list[int]]:
    residual = set(cg.vertices)
    sets = []
    while residual:
        deg = {v: sum(weight(v, o) for o in cg.adj[v] if o in residual) for v in residual}
        pool = set(residual)
        chosen = []
        while pool:
            v = min(pool, key=lambda x: (deg[x], x))
            chosen.append(v)
            pool -= cg.adj[v] | {v}
        residual -= set(chosen)
        sets.append(sorted(chosen))
    return sets


def _mis_like(topo, cg, C, colocation_weight):
    g = _Greedy(topo, cg, C, colocation_weight)
    w = g.w
    for k, group in enumerate(_independent_sets(cg, lambda a, b: w[(a, b)])):
        prefer = k % C
        for link in group:
            options = g.feasible(link)
            g.set(link, prefer if prefer in options else g.best(link, prefer=prefer))
    return g.ch


def _mis(topo, cg, C, rng):
    return _mis_like(topo, cg, C, 1)


def _ois(topo, cg, C, rng):
    return _mis_like(topo, cg, C, 2)


def _ec(topo, cg, C, rng):
    colors_at = [set() for _ in topo.nodes]
    out = {}
    for l in topo.links:
        color = 0
        while color in colors_at[l.a] or color in colors_at[l.b]:
            color += 1
        colors_at[l.a].add(color)
        colors_at[l.b].add(color)
        out[l.id] = color % C
    return out


def _lp_like(topo, cg, C, rng, colocation_weight):
    g = _Greedy(topo, cg, C, colocation_weight)
    for l in topo.links:
        g.set(l.id, 0)
    g.improve(rng)
    return g.ch


def _lp(topo, cg, C, rng):
    return _lp_like(topo, cg, C, rng, 1)


def _eizm(topo, cg, C, rng):
    return _lp_like(topo, cg, C, rng, 2)


_SCHEMES = {
    "SINGLE": _single,
    "SPREAD": _spread,
    "BFS": _bfs,
    "MIS": _mis,
    "OIS": _ois,
    "EC": _ec,
    "LP": _lp,
    "EIZM": _eizm,
}


def run_ca_scheme(scheme: str, topo: MeshTopology, cg: ConflictGraph,
                  channel_count: int = DEFAULT_CHANNELS, seed: int = 0) -> ChannelAssignment:
    """Run one CA scheme; the result is a total, seed-deterministic assignment."""
    key = scheme.upper()
    if key not in _SCHEMES:
        raise AssignmentError(f"unknown CA scheme {scheme!r}; choose from {', '.join(SCHEMES)}")
    if channel_count < 1:
        raise AssignmentError("channel_count must be >= 1")
    if len(cg.vertices) != len(topo.links):
        raise AssignmentError("conflict graph was not built from this topology")
    rng = np.random.default_rng(seed)
    link_ch = _SCHEMES[key](topo, cg, channel_count, rng)
    if key == "SINGLE":
        radios = {(u, r): 0 for u in topo.nodes for r in range(topo.radios_per_node)}
        binding = {l.id: (0, 0) for l in topo.links}
        return ChannelAssignment(radios, binding, key, channel_count)
    return from_link_channels(topo, link_ch, channel_count, key)


# --------------------------------------------------------------------------
# file format


def format_assignment(topo: MeshTopology, ca: ChannelAssignment) -> str:
    """Rows ``node radio channel`` then ``link radioA radioB channel``."""
    lines = [f"# scheme: {ca.scheme}", f"# channels: {ca.channel_count}"]
    lines += [f"{u} {r} {c}" for (u, r), c in sorted(ca.radio_channels.items())]
    for link, (ra, rb) in sorted(ca.link_radios.items()):
        lines.append(f"{link} {ra} {rb} {ca.radio_channels[(topo.links[link].a, ra)]}")
    return "\n".join(lines) + "\n"


def parse_assignment(text: str, topo: MeshTopology, source: str = "<ca>") -> ChannelAssignment:
    header: dict[str, str] = {}
    radio_rows: list[tuple[int, tuple[int, ...]]] = []
    link_rows: list[tuple[int, tuple[int, ...]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        try:
            fields = tuple(int(x) for x in line.split())
        except ValueError:
            raise AssignmentError(f"{source}:{lineno}: non-integer field in {raw!r}") from None
        if len(fields) == 3:
            radio_rows.append((lineno, fields))
        elif len(fields) == 4:
            link_rows.append((lineno, fields))
        else:
            raise AssignmentError(f"{source}:{lineno}: expected 3 or 4 fields, got {len(fields)}")

    C = int(header.get("channels", DEFAULT_CHANNELS))
    R = topo.radios_per_node
    radios: dict[tuple[int, int], int] = {}
    for lineno, (u, r, c) in radio_rows:
        if not (0 <= u < topo.n_nodes and 0 <= r < R):
            raise AssignmentError(f"{source}:{lineno}: unknown radio ({u}, {r})")
        if not 0 <= c < C:
            raise AssignmentError(f"{source}:{lineno}: channel {c} out of range [0, {C})")
        if (u, r) in radios:
            raise AssignmentError(f"{source}:{lineno}: duplicate radio ({u}, {r})")
        radios[(u, r)] = c
    binding: dict[int, tuple[int, int]] = {}
    for lineno, (link, ra, rb, c) in link_rows:
        if not 0 <= link < len(topo.links):
            raise AssignmentError(f"{source}:{lineno}: unknown link {link}")
        if not (0 <= ra < R and 0 <= rb < R):
            raise AssignmentError(f"{source}:{lineno}: radio index out of range")
        if not 0 <= c < C:
            raise AssignmentError(f"{source}:{lineno}: channel {c} out of range [0, {C})")
        l = topo.links[link]
        got = (radios.get((l.a, ra)), radios.get((l.b, rb)))
        if got != (c, c):
            raise AssignmentError(
                f"{source}:{lineno}: broken link {link}: radios tuned to {got}, row says {c}")
        binding[link] = (ra, rb)
    ca = ChannelAssignment(radios, binding, header.get("scheme", ""), C)
    ca.check(topo)
    return ca


def write_assignment(topo: MeshTopology, ca: ChannelAssignment, path) -> None:
    Path(path).write_text(format_assignment(topo, ca))


def read_assignment(path, topo: MeshTopology) -> ChannelAssignment:
    return parse_assignment(Path(path).read_text(), topo, str(path))
