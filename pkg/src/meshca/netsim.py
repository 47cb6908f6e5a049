"""Slotted protocol-model contention simulator.

One slot is the airtime of one TCP segment at the PHY rate. Links with a
queued packet contend every slot:

* TCP mode (RTS/CTS on): a random maximal set of contenders with no
  same-channel conflict transmits, so there are no collisions.
* UDP mode (RTS/CTS off): each contender transmits with ``udp_tx_prob``;
  any two simultaneous same-channel conflicting transmissions both fail and
  the packets are lost.

TCP flows are stop-and-wait: the next segment leaves the source once the
previous one reached the destination (ACKs are not simulated). A TCP flow
that has not delivered its whole file by ``tcp_deadline_s`` is disrupted.
UDP flows emit one packet per ``udp_interval_s`` until ``horizon_s``; the
simulation then keeps running until the network drains.

Routing is static min-hop over alive links, computed once per run. Flows
without a route are disrupted from the start.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
import random
from collections import deque
from dataclasses import dataclass

from .conflict_graph import ConflictGraph
from .topology import MeshTopology, hop_distances

TCP = "TCP"
UDP = "UDP"
MODES = (TCP, UDP)
TEST_CASES = (8, 12, 16, 20, 24)
MIN_HOPS, MAX_HOPS = 3, 11


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class Flow:
    src: int
    dst: int


@dataclass(frozen=True)
class TrafficScenario:
    flows: tuple[Flow, ...]
    label: str = ""


@dataclass(frozen=True)
class SimParams:
    phy_rate_mbps: float = 54.0
    mss_bytes: int = 1024
    udp_packet_bytes: int = 512
    file_bytes: int = 1 << 20
    horizon_s: float = 60.0
    tcp_deadline_s: float = 3.0
    udp_interval_s: float = 0.05
    udp_tx_prob: float = 0.5
    udp_retry_limit: int = 0
    slot_us: float | None = None  # default: one MSS at phy_rate
    seed: int = 0

    def __post_init__(self):
        for name in ("phy_rate_mbps", "mss_bytes", "udp_packet_bytes", "file_bytes",
                     "horizon_s", "tcp_deadline_s", "udp_interval_s"):
            if getattr(self, name) <= 0:
                raise SimError(f"{name} must be positive")
        if not 0.0 < self.udp_tx_prob <= 1.0:
            raise SimError("udp_tx_prob must be in (0, 1]")
        if self.slot_us is not None and self.slot_us <= 0:
            raise SimError("slot_us must be positive")
        if self.udp_retry_limit < 0:
            raise SimError("udp_retry_limit must be >= 0")

    @property
    def slot(self) -> float:
        """Slot length in microseconds."""
        if self.slot_us is not None:
            return self.slot_us
        return self.mss_bytes * 8 / self.phy_rate_mbps

    def slots(self, seconds: float) -> int:
        return int(seconds * 1e6 / self.slot)


@dataclass(frozen=True)
class SimResult:
    throughput: float  # Mbps
    dfc: int
    pdr: float  # percent
    eed: float  # microseconds
    sent: int = 0
    delivered: int = 0
    offered_bytes: int = 0
    delivered_bytes: int = 0
    flows: int = 0
    min_delay_bound_ok: bool = True


NPMS = ("throughput", "dfc", "pdr", "eed")


# --------------------------------------------------------------------------
# scenarios and routing


def _alive_adjacency(topo: MeshTopology, lcm) -> dict[int, dict[int, int]]:
    """node -> {neighbour: link id} over links in ``lcm`` (all links if None)."""
    adj: dict[int, dict[int, int]] = {u: {} for u in topo.nodes}
    for link in topo.links:
        if lcm is None or link.id in lcm:
            adj[link.a][link.b] = link.id
            adj[link.b][link.a] = link.id
    return adj


def build_scenario(topo: MeshTopology, lcm: dict[int, int] | None, n_flows: int, seed: int,
                   min_hops: int = MIN_HOPS, max_hops: int = MAX_HOPS,
                   label: str | None = None) -> TrafficScenario:
    """Draw ``n_flows`` distinct (src, dst) pairs whose hop distance is in range.

    Hop distances are measured over the links of ``lcm``; pass ``None`` to use
    the whole topology, which gives every CA the same traffic.
    """
    adj = _alive_adjacency(topo, lcm)
    eligible = []
    for s in topo.nodes:
        hops = hop_distances(adj, s)
        eligible += [(s, d) for d, h in sorted(hops.items()) if min_hops <= h <= max_hops]
    if not eligible:
        raise SimError(f"no eligible pairs at {min_hops}-{max_hops} hops")
    if len(eligible) < n_flows:
        raise SimError(f"only {len(eligible)} eligible pairs for {n_flows} flows")
    rnd = random.Random(seed)
    picked = rnd.sample(eligible, n_flows)
    return TrafficScenario(tuple(Flow(s, d) for s, d in picked), label or f"{n_flows}-flows")


def route(topo: MeshTopology, lcm, src: int, dst: int, adj=None) -> list[int] | None:
    """Min-hop path as a list of link ids; ties broken towards lower node ids."""
    if adj is None:
        adj = _alive_adjacency(topo, lcm)
    prev = {src: None}
    queue = deque([src])
    while queue and dst not in prev:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if v not in prev:
                prev[v] = u
                queue.append(v)
    if dst not in prev:
        return None
    path = []
    v = dst
    while prev[v] is not None:
        u = prev[v]
        path.append(adj[u][v])
        v = u
    return path[::-1]


# --------------------------------------------------------------------------
# simulation


def _conflict_masks(cg: ConflictGraph, lcm) -> dict[int, int]:
    """Bitmask of same-channel conflicting alive links, per alive link."""
    masks = {}
    for link, ch in lcm.items():
        m = 0
        for other in cg.adj[link]:
            if lcm.get(other) == ch:
                m |= 1 << other
        masks[link] = m
    return masks


def simulate(topo: MeshTopology, lcm: dict[int, int], cg: ConflictGraph,
             scenario: TrafficScenario, params: SimParams, mode: str = TCP) -> SimResult:
    mode = mode.upper()
    if mode not in MODES:
        raise SimError(f"unknown mode {mode!r}")
    rnd = random.Random(params.seed)
    slot = params.slot
    horizon = params.slots(params.tcp_deadline_s if mode == TCP else params.horizon_s)
    masks = _conflict_masks(cg, lcm)
    adj = _alive_adjacency(topo, lcm)
    paths = [route(topo, lcm, f.src, f.dst, adj) for f in scenario.flows]
    nflows = len(paths)

    queues: dict[int, deque] = {l: deque() for l in lcm}
    active: set[int] = set()

    def enqueue(link, pkt):
        queues[link].append(pkt)
        active.add(link)

    # per-flow bookkeeping
    pkt_bytes = params.mss_bytes if mode == TCP else params.udp_packet_bytes
    total_pkts = math.ceil(params.file_bytes / pkt_bytes)
    sent = [0] * nflows
    delivered = [0] * nflows
    done_slot: list[int | None] = [None] * nflows
    delays: list[float] = []
    bound_ok = True

    if mode == TCP:
        for i, p in enumerate(paths):
            if p:
                sent[i] = 1
                enqueue(p[0], [i, 0, 0, 0])  # flow, hop, created slot, retries
        gen_slots = []
    else:
        interval = params.udp_interval_s * 1e6 / slot
        # per-flow phase offset keeps sources from firing in lockstep
        gen_slots = [(rnd.random() * interval, i) for i in range(nflows)]
        heapq.heapify(gen_slots)

    t = 0
    # TCP segments are never dropped; UDP frames get udp_retry_limit retries
    retry_limit = math.inf if mode == TCP else params.udp_retry_limit
    drain_cap = 2 * horizon
    gen_q = gen_slots
    while True:
        if mode == TCP:
            if t >= horizon or not active:
                break
        else:
            # UDP: offer packets due by this slot, then drain after the horizon
            while gen_q and gen_q[0][0] <= t and gen_q[0][0] < horizon:
                when, i = heapq.heappop(gen_q)
                sent[i] += 1
                if paths[i]:
                    enqueue(paths[i][0], [i, 0, when, 0])
                if sent[i] < total_pkts:
                    heapq.heappush(gen_q, (when + interval, i))
            if not active:
                if not gen_q or gen_q[0][0] >= horizon:
                    break
                t = max(t + 1, math.ceil(gen_q[0][0]))
                continue
            if t >= drain_cap:
                break

        contenders = sorted(active)
        if mode == TCP:
            rnd.shuffle(contenders)
            chosen = 0
            tx = []
            for l in contenders:
                if not masks[l] & chosen:
                    chosen |= 1 << l
                    tx.append(l)
            failed = ()
        else:
            p = params.udp_tx_prob
            tx = [l for l in contenders if rnd.random() < p]
            on_air = 0
            for l in tx:
                on_air |= 1 << l
            failed = {l for l in tx if masks[l] & on_air}

        for l in tx:
            q = queues[l]
            if l in failed:
                head = q[0]
                head[3] += 1
                if head[3] > retry_limit:
                    q.popleft()
                    if not q:
                        active.discard(l)
                continue
            pkt = q.popleft()
            pkt[3] = 0
            if not q:
                active.discard(l)
            i = pkt[0]
            path = paths[i]
            pkt[1] += 1
            if pkt[1] < len(path):
                enqueue(path[pkt[1]], pkt)
                continue
            # delivered at the end of slot t
            delay = (t + 1 - pkt[2]) * slot
            if delay + 1e-9 < len(path) * slot:
                bound_ok = False
            delays.append(delay)
            delivered[i] += 1
            if mode == TCP:
                if delivered[i] == total_pkts:
                    done_slot[i] = t + 1
                else:
                    sent[i] += 1
                    enqueue(path[0], [i, 0, t + 1, 0])
        t += 1

    horizon_us = horizon * slot
    if mode == TCP:
        flow_tput = []
        for i in range(nflows):
            bits = min(delivered[i] * pkt_bytes, params.file_bytes) * 8
            span = done_slot[i] * slot if done_slot[i] else horizon_us
            flow_tput.append(bits / span if span else 0.0)
        throughput = sum(flow_tput)
        disrupted = sum(1 for i in range(nflows) if done_slot[i] is None)
    else:
        bits = sum(delivered) * pkt_bytes * 8
        throughput = bits / horizon_us
        disrupted = sum(1 for i in range(nflows) if not paths[i] or delivered[i] < sent[i])

    total_sent = sum(sent)
    total_delivered = sum(delivered)
    return SimResult(
        throughput=throughput,
        dfc=disrupted,
        pdr=100.0 * total_delivered / total_sent if total_sent else 100.0,
        # nothing delivered: report the horizon as the delay bound
        eed=sum(delays) / len(delays) if delays else horizon_us,
        sent=total_sent,
        delivered=total_delivered,
        offered_bytes=(total_pkts * nflows if mode == TCP else total_sent) * pkt_bytes,
        delivered_bytes=total_delivered * pkt_bytes,
        flows=nflows,
        min_delay_bound_ok=bound_ok,
    )


# --------------------------------------------------------------------------
# aggregation and I/O


@dataclass(frozen=True)
class NpmSummary:
    throughput: float
    dfc: float
    pdr: float
    eed: float
    cases: int = 1

    def get(self, npm: str) -> float:
        return getattr(self, npm)


def aggregate_npms(results) -> NpmSummary:
    """Arithmetic mean of each NPM over test cases."""
    results = list(results)
    if not results:
        raise SimError("aggregate_npms needs at least one result")
    n = len(results)
    return NpmSummary(*(sum(getattr(r, k) for r in results) / n for k in NPMS), cases=n)


@dataclass
class ResultRow:
    scheme: str
    mode: str
    test_case: str
    result: SimResult
    seed: int


RESULT_FIELDS = ["scheme", "mode", "test_case", "throughput_mbps", "dfc", "pdr_pct", "eed_us", "seed"]


def format_results_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    for r in rows:
        w.writerow([r.scheme, r.mode, r.test_case, f"{r.result.throughput:.6f}", r.result.dfc,
                    f"{r.result.pdr:.6f}", f"{r.result.eed:.3f}", r.seed])
    return buf.getvalue()


def parse_results_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row["throughput_mbps"] = float(row["throughput_mbps"])
        row["dfc"] = int(row["dfc"])
        row["pdr_pct"] = float(row["pdr_pct"])
        row["eed_us"] = float(row["eed_us"])
        row["seed"] = int(row["seed"])
    return rows
