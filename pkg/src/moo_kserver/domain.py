"""Core k-server types: node spaces, distance functions and service steps.

Nodes are identified by 0-based integer ids.  Distance formulas are
evaluated on 1-based coordinates: on a line node ``i`` sits at ``x = i + 1``;
on a grid node ``i`` sits at ``(i % width + 1, i // width + 1)`` (row-major).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

LINE_KINDS = ("line_abs", "line_sq", "line_asym")
GRID_KINDS = ("grid_manhattan", "grid_asym")
DISTANCE_KINDS = LINE_KINDS + GRID_KINDS + ("table",)


class InvalidDecision(ValueError):
    """A service decision that is inconsistent with the configuration."""


@dataclass(frozen=True)
class NodeSpace:
    kind: str
    n: int
    width: int | None = None

    def __post_init__(self):
        if self.kind not in ("line", "grid"):
            raise ValueError(f"unknown node space kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("a node space needs at least one node")
        if self.kind == "grid":
            if not self.width or self.width < 1 or self.n % self.width:
                raise ValueError(f"grid of {self.n} nodes cannot have width {self.width}")

    @classmethod
    def line(cls, n: int) -> "NodeSpace":
        return cls("line", n)

    @classmethod
    def grid(cls, width: int, height: int | None = None) -> "NodeSpace":
        height = width if height is None else height
        return cls("grid", width * height, width)

    @classmethod
    def parse(cls, text: str) -> "NodeSpace":
        """Parse ``line:9`` or ``grid:3x3`` (``grid:3`` means square)."""
        kind, _, size = text.strip().partition(":")
        if kind == "line":
            return cls.line(int(size))
        if kind == "grid":
            w, _, h = size.partition("x")
            return cls.grid(int(w), int(h) if h else None)
        raise ValueError(f"cannot parse node space {text!r}")

    def __str__(self):
        if self.kind == "line":
            return f"line:{self.n}"
        return f"grid:{self.width}x{self.n // self.width}"

    def check(self, node: int) -> None:
        if not 0 <= node < self.n:
            raise ValueError(f"node {node} outside [0, {self.n})")

    def coords(self, node: int) -> tuple[int, ...]:
        self.check(node)
        if self.kind == "line":
            return (node + 1,)
        return (node % self.width + 1, node // self.width + 1)


@dataclass(frozen=True)
class DistanceFunction:
    """A cost rule ``d(from, to)``; need not be symmetric or metric."""

    kind: str
    table: tuple[tuple, ...] | None = None

    def __post_init__(self):
        if self.kind not in DISTANCE_KINDS:
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table distance needs a cost matrix")
            rows = self.table
            if any(len(r) != len(rows) for r in rows):
                raise ValueError("distance table must be square")
            if any(c < 0 for r in rows for c in r):
                raise ValueError("distance table entries must be non-negative")

    @classmethod
    def from_table(cls, table) -> "DistanceFunction":
        rows = tuple(tuple(_exact(c) for c in row) for row in table)
        return cls("table", rows)

    def __str__(self):
        return self.kind

    def matrix(self, space: NodeSpace) -> list[list]:
        """All pairwise costs as nested lists of exact numbers (int or Fraction)."""
        return [[distance(self, space, a, b) for b in range(space.n)] for a in range(space.n)]


def _exact(value):
    """Integers stay ints; other reals become exact Fractions."""
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else value
    f = Fraction(str(value)) if isinstance(value, str) else Fraction(float(value))
    return f.numerator if f.denominator == 1 else f


def distance(fn: DistanceFunction, space: NodeSpace, src: int, dst: int):
    """Cost of moving a server from ``src`` to ``dst``."""
    space.check(src)
    space.check(dst)
    if fn.kind == "table":
        if len(fn.table) != space.n:
            raise ValueError(f"distance table is {len(fn.table)}x{len(fn.table)}, space has {space.n} nodes")
        return fn.table[src][dst]
    if fn.kind in LINE_KINDS and space.kind != "line":
        raise ValueError(f"{fn.kind} needs a line space, got {space.kind}")
    if fn.kind in GRID_KINDS and space.kind != "grid":
        raise ValueError(f"{fn.kind} needs a grid space, got {space.kind}")

    if fn.kind in LINE_KINDS:
        (x,), (x2,) = space.coords(src), space.coords(dst)
        if fn.kind == "line_abs":
            return abs(x - x2)
        if fn.kind == "line_sq":
            return (x - x2) ** 2
        return abs(x - x2) * x2
    (x, y), (x2, y2) = space.coords(src), space.coords(dst)
    if fn.kind == "grid_manhattan":
        return abs(x - x2) + abs(y - y2)
    return abs(x - x2) * x2 + abs(y - y2) * y2


def load_distance_table(text: str) -> DistanceFunction:
    """Parse a distance table: first line ``n``, then ``n`` rows of ``n`` costs."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 1:
        raise ValueError("distance table must start with a line holding n")
    n = int(lines[0][0])
    rows = lines[1:]
    if len(rows) != n:
        raise ValueError(f"expected {n} rows, found {len(rows)}")
    table = []
    for i, row in enumerate(rows):
        if len(row) != n:
            raise ValueError(f"row {i}: expected {n} entries, found {len(row)}")
        table.append([_exact(v) for v in row])
    return DistanceFunction.from_table(table)


def format_distance_table(fn: DistanceFunction) -> str:
    rows = [" ".join(str(c) for c in row) for row in fn.table]
    return "\n".join([str(len(fn.table))] + rows) + "\n"


Configuration = frozenset


def make_config(nodes: Iterable[int], space: NodeSpace | None = None, k: int | None = None) -> frozenset[int]:
    """Build a configuration, rejecting duplicate or out-of-range nodes."""
    nodes = [int(v) for v in nodes]
    config = frozenset(nodes)
    if len(config) != len(nodes):
        raise ValueError(f"configuration {sorted(nodes)} places two servers on one node")
    if space is not None:
        for v in config:
            space.check(v)
    if k is not None and len(config) != k:
        raise ValueError(f"configuration has {len(config)} servers, expected {k}")
    return config


class ServiceDecision(NamedTuple):
    request: int
    source: int
    cost: object


def apply_decision(config: frozenset[int], decision: ServiceDecision) -> frozenset[int]:
    """Return the configuration after carrying out ``decision``."""
    request, source, _ = decision
    if request in config:
        if source != request:
            raise InvalidDecision(f"request {request} is already covered; cannot move a server from {source}")
        return config
    if source not in config:
        raise InvalidDecision(f"no server at node {source}")
    return (config - {source}) | {request}


def replay(start: frozenset[int], decisions: Sequence[ServiceDecision], dist=None):
    """Replay ``decisions`` from ``start``, checking validity and costs.

    ``dist`` is an optional cost matrix; when given, each decision's cost is
    checked against it.  Returns the final configuration and the total cost.
    """
    config = start
    total = 0
    for dec in decisions:
        if dist is not None:
            expected = 0 if dec.request in config else dist[dec.source][dec.request]
            if dec.cost != expected:
                raise InvalidDecision(f"decision {dec} should cost {expected}")
        config = apply_decision(config, dec)
        total += dec.cost
    return config, total
