"""Exact offline optimum for the k-server problem.

``optimum_flow`` solves a min-cost flow problem by successive shortest paths
with node potentials.  ``optimum_bruteforce`` is an independent dynamic
program over configurations, used to check it.

Flow network
------------
Source ``S``, sink ``T``, one node ``a_j`` per starting server and a pair
``r_m -> r'_m`` per request (capacity 1, cost ``-K`` so every request is
covered).  A unit of flow is one server's itinerary; a server that has just
served request ``m`` may next serve any later request up to and including
the next request for the same node, and may retire to ``T`` only when its
node is never requested again.  This keeps servers on distinct nodes and
makes a covered request free, which matches the lazy one-server-per-node
model even for non-metric costs.  The graph has ``O((k + n) s)`` edges in
practice and ``O(k s + s^2)`` in the worst case.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .domain import DistanceFunction, NodeSpace, ServiceDecision, replay

BRUTEFORCE_LIMIT = 10**7


@dataclass
class OptTrace:
    decisions: list[ServiceDecision]
    total_cost: object

    @property
    def sources(self) -> list[int]:
        return [d.source for d in self.decisions]


class _Network:
    """Residual graph with paired forward/backward edges (edge ``e ^ 1`` is the reverse)."""

    def __init__(self, size: int):
        self.adj: list[list[int]] = [[] for _ in range(size)]
        self.head: list[int] = []
        self.cap: list[int] = []
        self.cost: list = []

    def add(self, u: int, v: int, cap: int, cost) -> None:
        self.adj[u].append(len(self.head))
        self.head += [v, u]
        self.cap += [cap, 0]
        self.cost += [cost, -cost]
        self.adj[v].append(len(self.head) - 1)

    def dag_potentials(self, source: int) -> list:
        """Shortest distances from ``source``; node indices must be a topological order."""
        inf = math.inf
        h = [inf] * len(self.adj)
        h[source] = 0
        for u in range(len(self.adj)):
            if h[u] == inf:
                continue
            for e in self.adj[u]:
                if e & 1 == 0 and self.cap[e] > 0:
                    v = self.head[e]
                    if h[u] + self.cost[e] < h[v]:
                        h[v] = h[u] + self.cost[e]
        finite = [x for x in h if x != inf]
        top = max(finite) if finite else 0
        return [top if x == inf else x for x in h]

    def augment(self, s: int, t: int, h: list) -> bool:
        """Push one unit along a shortest ``s -> t`` path; update ``h`` in place."""
        inf = math.inf
        dist = [inf] * len(self.adj)
        parent = [-1] * len(self.adj)
        done = [False] * len(self.adj)
        dist[s] = 0
        heap = [(0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            if u == t:
                break
            for e in self.adj[u]:
                if self.cap[e] <= 0:
                    continue
                v = self.head[e]
                nd = d + self.cost[e] + h[u] - h[v]
                if nd < dist[v]:
                    dist[v] = nd
                    parent[v] = e
                    heapq.heappush(heap, (nd, v))
        if not done[t]:
            return False
        dt = dist[t]
        for v in range(len(h)):
            h[v] += dist[v] if dist[v] < dt else dt
        v = t
        while v != s:
            e = parent[v]
            self.cap[e] -= 1
            self.cap[e ^ 1] += 1
            v = self.head[e ^ 1]
        return True


def _cost_matrix(d: DistanceFunction, space: NodeSpace):
    return d.matrix(space)


def optimum_flow(space: NodeSpace, d: DistanceFunction, start, stream: Sequence[int]) -> OptTrace:
    """Minimum-cost lazy service of ``stream`` from configuration ``start``."""
    dist = _cost_matrix(d, space)
    start = sorted(start)
    stream = [int(v) for v in stream]
    for v in start + stream:
        space.check(v)
    if len(set(start)) != len(start):
        raise ValueError("start configuration places two servers on one node")
    k, s = len(start), len(stream)
    if s == 0:
        return OptTrace([], 0)

    # next_same[m]: next index with the same node as request m, or s if none
    next_same = [s] * s
    last_seen: dict[int, int] = {}
    for m in range(s - 1, -1, -1):
        next_same[m] = last_seen.get(stream[m], s)
        last_seen[stream[m]] = m
    first = [last_seen.get(pos, s) for pos in start]

    max_d = max(max(row) for row in dist)
    big = 1 + k * s * max_d
    src, sink = 0, 1 + k + 2 * s
    r_in = lambda m: 1 + k + 2 * m  # noqa: E731
    net = _Network(sink + 1)

    for j, pos in enumerate(start):
        net.add(src, 1 + j, 1, 0)
        for p in range(min(first[j] + 1, s)):
            net.add(1 + j, r_in(p), 1, dist[pos][stream[p]])
        if first[j] == s:
            net.add(1 + j, sink, 1, 0)
    for m, node in enumerate(stream):
        net.add(r_in(m), r_in(m) + 1, 1, -big)
        row = dist[node]
        for p in range(m + 1, min(next_same[m] + 1, s)):
            net.add(r_in(m) + 1, r_in(p), 1, row[stream[p]])
        if next_same[m] == s:
            net.add(r_in(m) + 1, sink, 1, 0)

    h = net.dag_potentials(src)
    for _ in range(k):
        if not net.augment(src, sink, h):
            raise RuntimeError("flow network admits fewer than k server paths")

    decisions: list[ServiceDecision | None] = [None] * s
    for j, pos in enumerate(start):
        u = 1 + j
        while u != sink:
            e = next(e for e in net.adj[u] if e & 1 == 0 and net.cap[e] == 0)
            u = net.head[e]
            if u == sink:
                break
            m = (u - 1 - k) // 2
            req = stream[m]
            decisions[m] = ServiceDecision(req, req, 0) if pos == req else ServiceDecision(req, pos, dist[pos][req])
            pos = req
            u += 1  # through r_m -> r'_m
    if any(dec is None for dec in decisions):
        raise RuntimeError("optimum flow left a request uncovered")
    _, total = replay(frozenset(start), decisions, dist)
    return OptTrace(decisions, total)


def optimum_bruteforce(space: NodeSpace, d: DistanceFunction, start, stream: Sequence[int]):
    """Exact optimum by dynamic programming over all reachable configurations."""
    dist = _cost_matrix(d, space)
    start = list(start)
    n, k, s = space.n, len(start), len(stream)
    size = math.comb(n, k) * max(s, 1)
    if size > BRUTEFORCE_LIMIT:
        raise ValueError(f"instance too large for brute force: C({n},{k}) * {s} = {size} > {BRUTEFORCE_LIMIT}")
    mask0 = 0
    for v in start:
        space.check(v)
        mask0 |= 1 << v
    if bin(mask0).count("1") != k:
        raise ValueError("start configuration places two servers on one node")
    best = {mask0: 0}
    for req in stream:
        bit = 1 << req
        nxt: dict[int, object] = {}
        for mask, c in best.items():
            if mask & bit:
                if c < nxt.get(mask, math.inf):
                    nxt[mask] = c
                continue
            m = mask
            while m:
                low = m & -m
                j = low.bit_length() - 1
                m ^= low
                new = (mask ^ low) | bit
                cand = c + dist[j][req]
                if cand < nxt.get(new, math.inf):
                    nxt[new] = cand
        best = nxt
    return min(best.values())


def _fmt(c) -> str:
    if isinstance(c, Fraction):
        return str(c.numerator) if c.denominator == 1 else repr(float(c))
    return str(c)


def format_trace(trace: OptTrace) -> str:
    lines = [f"{dec.request} {dec.source} {_fmt(dec.cost)}" for dec in trace.decisions]
    lines.append(f"total {_fmt(trace.total_cost)}")
    return "\n".join(lines) + "\n"


def load_trace(text: str) -> OptTrace:
    decisions = []
    total = None
    for lineno, line in enumerate(text.splitlines(), 1):
        toks = line.split()
        if not toks:
            continue
        if toks[0] == "total":
            total = _num(toks[1])
            continue
        if len(toks) != 3:
            raise ValueError(f"line {lineno}: expected 'request source cost'")
        decisions.append(ServiceDecision(int(toks[0]), int(toks[1]), _num(toks[2])))
    if total is None:
        total = sum(dec.cost for dec in decisions)
    return OptTrace(decisions, total)


def _num(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)
