"""Turn an optimum trace into training cases and mine them into a decision tree.

A case has ``n + 1`` discrete attributes: the requested node (an ``n``-valued
attribute, split ``n`` ways) and one occupancy bit per node.  Its class is
the node the optimum moved a server from (the request itself when the
request was already covered).

The tree learner follows C4.5 for discrete attributes: gain-ratio splits
restricted to attributes with at least average gain, a ``min_cases`` limit
on branch sizes, and error-based pruning with a confidence factor.

Tree file grammar
-----------------
::

    file    := comment* (leaf | branch+)
    comment := '#' text               e.g. '# n=9 k=5 cases=2000'
    leaf    := CLASS [stats]
    branch  := indent test ':' [CLASS [stats]]
    indent  := ('|' SPACES)*          one '|' per level below the root
    test    := 'Request from = ' INT | 'Node ' INT ' status = ' ('0' | '1')
    stats   := '(' CASES ['/' ERRORS] ')'

A branch line without a class opens a subtree whose branches follow at the
next indent level.  Leaf branches of a node are listed before its subtrees.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .domain import apply_decision

REQUEST = 0
EPSILON = 1e-3

# C4.5's normal-deviate table used to turn a confidence factor into z
_CF_VAL = (0.0, 0.001, 0.005, 0.01, 0.05, 0.10, 0.20, 0.40, 1.00)
_CF_DEV = (4.0, 3.09, 2.58, 2.33, 1.65, 1.28, 0.84, 0.25, 0.00)


class Case(NamedTuple):
    request: int
    occupancy: tuple[int, ...]
    cls: int


@dataclass
class CaseTable:
    n: int
    k: int
    cases: list[Case]

    def __len__(self):
        return len(self.cases)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Attribute matrix (request column first) and class vector."""
        X = np.array([(c.request,) + tuple(c.occupancy) for c in self.cases], dtype=np.int64).reshape(-1, self.n + 1)
        y = np.array([c.cls for c in self.cases], dtype=np.int64)
        return X, y


def extract_cases(stream: Sequence[int], start, trace, n: int | None = None) -> CaseTable:
    """One case per request: the configuration seen on arrival and the optimum's source.

    ``n`` defaults to one more than the largest node id that appears.
    """
    decisions = trace.decisions if hasattr(trace, "decisions") else trace
    if len(decisions) != len(stream):
        raise ValueError(f"trace has {len(decisions)} decisions for {len(stream)} requests")
    n = _infer_n(start, stream, decisions) if n is None else n
    config = frozenset(start)
    cases = []
    for req, dec in zip(stream, decisions):
        if dec.request != req:
            raise ValueError(f"trace serves node {dec.request} where the stream requests {req}")
        cases.append(Case(req, tuple(int(v in config) for v in range(n)), dec.source))
        config = apply_decision(config, dec)
    return CaseTable(n, len(frozenset(start)), cases)


def _infer_n(start, stream, decisions):
    nodes = list(start) + list(stream) + [d.source for d in decisions]
    return max(nodes) + 1 if nodes else 0


def format_cases(table: CaseTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["request"] + [f"node{i}" for i in range(table.n)] + ["class"])
    for c in table.cases:
        w.writerow([c.request, *c.occupancy, c.cls])
    return buf.getvalue()


def load_cases(text: str) -> CaseTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty case file")
    header = rows[0]
    n = len(header) - 2
    expected = ["request"] + [f"node{i}" for i in range(n)] + ["class"]
    if header != expected:
        raise ValueError("case file header must be request,node0,...,node{n-1},class")
    cases = []
    k = None
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != n + 2:
            raise ValueError(f"line {lineno}: expected {n + 2} fields")
        try:
            vals = [int(v) for v in row]
        except ValueError:
            raise ValueError(f"line {lineno}: fields must be integers") from None
        occ = tuple(vals[1:-1])
        if any(b not in (0, 1) for b in occ):
            raise ValueError(f"line {lineno}: occupancy fields must be 0 or 1")
        if k is None:
            k = sum(occ)
        elif sum(occ) != k:
            raise ValueError(f"line {lineno}: {sum(occ)} servers, earlier cases have {k}")
        cases.append(Case(vals[0], occ, vals[-1]))
    return CaseTable(n, k or 0, cases)


@dataclass
class TreeNode:
    """Leaf when ``attribute`` is None.  Internal nodes keep ``cls`` as None."""

    cls: int | None
    count: int
    errors: int
    attribute: int | None = None
    branches: dict[int, "TreeNode"] = field(default_factory=dict)
    default: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None


@dataclass
class DecisionTree:
    root: TreeNode
    n: int
    n_cases: int
    k: int | None = None

    def decision_nodes(self) -> int:
        return sum(1 for node in _walk(self.root) if not node.is_leaf)

    def leaves(self) -> int:
        return sum(1 for node in _walk(self.root) if node.is_leaf)


def _walk(node):
    yield node
    for child in node.branches.values():
        yield from _walk(child)


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def split_scores(X: np.ndarray, y: np.ndarray, attribute: int, n_classes: int) -> tuple[float, float, float]:
    """``(gain, split_info, gain_ratio)`` of ``attribute`` on the cases ``X, y``."""
    info = _entropy(np.bincount(y, minlength=n_classes))
    col = X[:, attribute]
    values, sizes = np.unique(col, return_counts=True)
    remainder = 0.0
    for v, size in zip(values, sizes):
        remainder += size / len(y) * _entropy(np.bincount(y[col == v], minlength=n_classes))
    gain = info - remainder
    split = _entropy(sizes)
    return gain, split, (gain / split if split > EPSILON else 0.0)


def _add_errs(n: float, e: float, coeff: float, cf: float) -> float:
    """Extra errors predicted at a leaf of ``n`` cases with ``e`` training errors."""
    if e < 1e-6:
        return n * (1 - math.exp(math.log(cf) / n))
    if e < 0.9999:
        v0 = n * (1 - math.exp(math.log(cf) / n))
        return v0 + e * (_add_errs(n, 1.0, coeff, cf) - v0)
    if e + 0.5 >= n:
        return 0.67 * (n - e)
    pr = (e + 0.5 + coeff / 2 + math.sqrt(coeff * ((e + 0.5) * (1 - (e + 0.5) / n) + coeff / 4))) / (n + coeff)
    return n * pr - e


def _z_squared(cf: float) -> float:
    if not 0 < cf < 1:
        raise ValueError("confidence factor must lie in (0, 1)")
    i = next(i for i, v in enumerate(_CF_VAL) if cf <= v)
    z = _CF_DEV[i - 1] + (_CF_DEV[i] - _CF_DEV[i - 1]) * (cf - _CF_VAL[i - 1]) / (_CF_VAL[i] - _CF_VAL[i - 1])
    return z * z


def build_tree(table: CaseTable, min_cases: int = 2, confidence: float = 0.25, prune: bool = True) -> DecisionTree:
    if not table.cases:
        raise ValueError("cannot build a tree from an empty case table")
    X, y = table.arrays()
    n_classes = max(table.n, int(y.max()) + 1)

    def grow(idx: np.ndarray, used: frozenset) -> TreeNode:
        counts = np.bincount(y[idx], minlength=n_classes)
        cls = int(np.argmax(counts))
        node = TreeNode(cls, len(idx), int(len(idx) - counts[cls]))
        if node.errors == 0 or len(idx) < 2 * min_cases:
            return node
        Xs, ys = X[idx], y[idx]
        scored = []
        for a in range(X.shape[1]):
            if a in used:
                continue
            sizes = np.unique(Xs[:, a], return_counts=True)[1]
            if (sizes >= min_cases).sum() < 2:
                continue
            scored.append((a, *split_scores(Xs, ys, a, n_classes)))
        if not scored:
            return node
        positive = [s for s in scored if s[1] > EPSILON]
        if positive:
            avg = sum(s[1] for s in positive) / len(positive)
            best = max((s for s in positive if s[1] >= avg - EPSILON), key=lambda s: s[3])
        else:
            # no single attribute is informative (e.g. xor-like classes); split anyway
            best = scored[0]
        a = best[0]
        node.attribute = a
        col = Xs[:, a]
        for v in np.unique(col):
            node.branches[int(v)] = grow(idx[col == v], used | {a})
        return node

    root = grow(np.arange(len(y)), frozenset())
    if prune:
        coeff = _z_squared(confidence)

        def estimate(node: TreeNode) -> float:
            leaf_est = node.errors + _add_errs(node.count, node.errors, coeff, confidence)
            if node.is_leaf:
                return leaf_est
            tree_est = sum(estimate(child) for child in node.branches.values())
            if leaf_est <= tree_est + 0.1:
                node.attribute = None
                node.branches = {}
                return leaf_est
            return tree_est

        estimate(root)
    _finalize(root)
    return DecisionTree(root, table.n, len(table), table.k)


def _finalize(node: TreeNode) -> None:
    """Recompute internal bookkeeping from the leaves and fix default branches."""
    if node.is_leaf:
        node.default = None
        return
    for child in node.branches.values():
        _finalize(child)
    node.cls = None
    node.count = sum(c.count for c in node.branches.values())
    node.errors = sum(c.errors for c in node.branches.values())
    node.default = min(node.branches, key=lambda v: (-node.branches[v].count, v))


def classify(tree: DecisionTree, request: int, config) -> int:
    node = tree.root
    while not node.is_leaf:
        value = request if node.attribute == REQUEST else int((node.attribute - 1) in config)
        node = node.branches.get(value) or node.branches[node.default]
    return node.cls


def _label(attribute: int) -> str:
    return "Request from" if attribute == REQUEST else f"Node {attribute - 1} status"


def _stats(node: TreeNode) -> str:
    return f"({node.count}/{node.errors})" if node.errors else f"({node.count})"


def render_tree(tree: DecisionTree) -> str:
    """Indented text rendering, one branch per line."""
    root = tree.root
    if root.is_leaf:
        return f"{root.cls} {_stats(root)}\n"
    lines: list[str] = []

    def emit(node: TreeNode, depth: int):
        prefix = "|   " * depth
        order = sorted(node.branches, key=lambda v: (not node.branches[v].is_leaf, v))
        for v in order:
            child = node.branches[v]
            head = f"{prefix}{_label(node.attribute)} = {v}:"
            if child.is_leaf:
                lines.append(f"{head} {child.cls} {_stats(child)}")
            else:
                lines.append(head)
                emit(child, depth + 1)

    emit(root, 0)
    return "\n".join(lines) + "\n"


def format_tree(tree: DecisionTree) -> str:
    meta = f"# n={tree.n} cases={tree.n_cases}"
    if tree.k is not None:
        meta += f" k={tree.k}"
    meta += f" decision_nodes={tree.decision_nodes()} leaves={tree.leaves()}"
    return meta + "\n" + render_tree(tree)


_BRANCH = re.compile(
    r"^(?:Request from|Node (\d+) status) = (\d+):\s*(?:(\d+)\s*(?:\((\d+)(?:/(\d+))?\))?)?\s*$"
)
_LEAF = re.compile(r"^(\d+)\s*(?:\((\d+)(?:/(\d+))?\))?\s*$")


class TreeParseError(ValueError):
    pass


def load_tree(text: str) -> DecisionTree:
    meta: dict[str, int] = {}
    body = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//")[0].rstrip()
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            for key, val in re.findall(r"(\w+)=(\d+)", line):
                meta[key] = int(val)
            continue
        body.append((lineno, line))
    if not body:
        raise TreeParseError("tree file has no nodes")

    def leaf_from(groups, lineno):
        cls, cnt, err = groups
        return TreeNode(int(cls), int(cnt or 0), int(err or 0))

    first_no, first = body[0]
    if len(body) == 1 and _LEAF.match(first.strip()):
        root = leaf_from(_LEAF.match(first.strip()).groups(), first_no)
    else:
        root = TreeNode(None, 0, 0)
        open_nodes = [root]  # open_nodes[d] receives the branches written at depth d
        for lineno, line in body:
            depth = 0
            rest = line
            while rest.lstrip().startswith("|"):
                rest = rest.lstrip()[1:]
                depth += 1
            m = _BRANCH.match(rest.strip())
            if not m:
                raise TreeParseError(f"line {lineno}: cannot parse {line.strip()!r}")
            if depth >= len(open_nodes):
                raise TreeParseError(f"line {lineno}: indented below a leaf")
            del open_nodes[depth + 1:]
            parent = open_nodes[depth]
            attribute = REQUEST if m.group(1) is None else int(m.group(1)) + 1
            if parent.attribute is None:
                parent.attribute = attribute
            elif parent.attribute != attribute:
                raise TreeParseError(f"line {lineno}: sibling branches test different attributes")
            value = int(m.group(2))
            if value in parent.branches:
                raise TreeParseError(f"line {lineno}: duplicate branch value {value}")
            if m.group(3) is not None:
                parent.branches[value] = leaf_from(m.group(3, 4, 5), lineno)
            else:
                child = TreeNode(None, 0, 0)
                parent.branches[value] = child
                open_nodes.append(child)
        for node in _walk(root):
            if node.cls is None and not node.branches:
                raise TreeParseError("a subtree has no branches")
    _finalize(root)
    classes = [node.cls for node in _walk(root) if node.is_leaf]
    n = meta.get("n", max(classes + [v for node in _walk(root) if node.attribute == REQUEST for v in node.branches]) + 1)
    if any(not 0 <= c < n for c in classes):
        raise TreeParseError(f"leaf class outside [0, {n})")
    return DecisionTree(root, n, meta.get("cases", root.count), meta.get("k"))
