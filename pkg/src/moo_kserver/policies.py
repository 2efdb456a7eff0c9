"""Online policies and the loop that runs them over a request stream.

A policy only ever sees the current configuration and the current request;
``run_policy`` never hands it the rest of the stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .domain import DistanceFunction, NodeSpace, ServiceDecision, apply_decision
from .miner import classify
from .streamgen import make_rng


def greedy_choose(dist, config, request: int) -> int:
    """Occupied node closest to ``request`` (ties: smallest node id)."""
    return min(sorted(config), key=lambda j: dist[j][request])


def balance_choose(costs: dict, dist, config, request: int) -> int:
    return min(sorted(config), key=lambda j: costs[j] + dist[j][request])


def harmonic_choose(rng, dist, config, request: int) -> int:
    """Pick server ``j`` with probability proportional to ``1 / d(j, request)``.

    Zero-distance servers, if any, share all the probability equally.
    """
    nodes = sorted(config)
    zero = [j for j in nodes if dist[j][request] == 0]
    if zero:
        return zero[int(rng.integers(len(zero)))] if len(zero) > 1 else zero[0]
    weights = [1.0 / float(dist[j][request]) for j in nodes]
    u = rng.random() * math.fsum(weights)
    acc = 0.0
    for j, w in zip(nodes, weights):
        acc += w
        if u < acc:
            return j
    return nodes[-1]


class Policy:
    """Base class: ``choose`` returns ``(source, valid)`` for an uncovered request."""

    name = "policy"

    def reset(self, dist, start) -> None:
        self.dist = dist

    def choose(self, config, request: int) -> tuple[int, bool]:
        raise NotImplementedError

    def served(self, decision: ServiceDecision) -> None:
        pass


class Greedy(Policy):
    name = "greedy"

    def choose(self, config, request):
        return greedy_choose(self.dist, config, request), True


class Balance(Policy):
    """Work-balancing rule; each server carries the cost it has accumulated."""

    name = "balance"

    def reset(self, dist, start):
        self.dist = dist
        self.costs = {j: 0 for j in start}

    def choose(self, config, request):
        return balance_choose(self.costs, self.dist, config, request), True

    def served(self, decision):
        if decision.source != decision.request:
            self.costs[decision.request] = self.costs.pop(decision.source) + decision.cost


class Harmonic(Policy):
    name = "harmonic"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def reset(self, dist, start):
        self.dist = dist
        self.rng = make_rng(self.seed)

    def choose(self, config, request):
        return harmonic_choose(self.rng, self.dist, config, request), True


class MOOPolicy(Policy):
    """Follow a mined decision tree; fall back to greedy on an invalid prediction."""

    name = "moo"

    def __init__(self, tree):
        self.tree = tree

    def choose(self, config, request):
        return moo_choose(self.tree, self.dist, config, request)


def moo_choose(tree, dist, config, request: int) -> tuple[int, bool]:
    predicted = classify(tree, request, config)
    if predicted in config and predicted != request:
        return predicted, True
    return greedy_choose(dist, config, request), False


POLICIES = {"greedy": Greedy, "balance": Balance, "harmonic": Harmonic}


@dataclass
class RunResult:
    total_cost: object
    invalid_count: int
    final_config: frozenset
    decisions: list[ServiceDecision] = field(repr=False)


def run_policy(policy: Policy, space: NodeSpace, d: DistanceFunction, start, stream: Sequence[int]) -> RunResult:
    dist = d.matrix(space)
    config = frozenset(start)
    policy.reset(dist, config)
    decisions = []
    total = 0
    invalid = 0
    for request in stream:
        if request in config:
            dec = ServiceDecision(request, request, 0)
        else:
            source, valid = policy.choose(config, request)
            invalid += not valid
            dec = ServiceDecision(request, source, dist[source][request])
        config = apply_decision(config, dec)
        policy.served(dec)
        total += dec.cost
        decisions.append(dec)
    return RunResult(total, invalid, config, decisions)


def competitive_ratio(policy_cost, opt_cost) -> float:
    if policy_cost < 0 or opt_cost < 0:
        raise ValueError("costs must be non-negative")
    if opt_cost == 0:
        return 1.0 if policy_cost == 0 else math.inf
    return float(policy_cost) / float(opt_cost)
