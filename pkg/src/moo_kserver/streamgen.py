"""Markov transition matrices and request streams.

All randomness comes from numpy's ``PCG64`` bit generator seeded with an
explicit integer, so a given ``(spec, seed)`` always yields the same stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ROW_TOL = 1e-9
DENSITY_BOUNDS = {"sparse": (0.10, 0.20), "dense": (0.80, 0.90)}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix; ``p[i, j]`` is P(next request = j | previous = i)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {p.shape}")
        for i, row in enumerate(p):
            if (row < 0).any() or (row > 1).any():
                raise ValueError(f"row {i}: entries must lie in [0, 1]")
            if not (row > 0).any():
                raise ValueError(f"row {i}: no positive entry")
            if abs(row.sum() - 1.0) > ROW_TOL:
                raise ValueError(f"row {i}: sums to {row.sum():.6g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def __eq__(self, other):
        return isinstance(other, TransitionMatrix) and np.array_equal(self.p, other.p)

    def density(self) -> float:
        return np.count_nonzero(self.p) / self.p.size


def _nonzero_count(n: int, density: str, rng) -> int:
    lo, hi = DENSITY_BOUNDS[density]
    cells = n * n
    low = max(math.ceil(lo * cells - 1e-9), n)
    high = min(math.floor(hi * cells + 1e-9), cells)
    if low > high:
        raise ValueError(f"no {density} {n}x{n} matrix can keep every row non-empty")
    return int(rng.integers(low, high + 1))


def gen_matrix(n: int, density: str, seed: int, irreducible: bool = False) -> TransitionMatrix:
    """Random transition matrix with a global nonzero fraction in the density band.

    Each row first receives one random nonzero column (with ``irreducible``,
    the successor of the row in a random cyclic order of all nodes, so every
    node can reach every other); the remaining nonzero
    cells are spread uniformly over the rest of the matrix.  Weights are drawn
    from (0, 1], normalised and rounded to two decimals (when every row entry
    can hold at least 0.01), the largest entry absorbing the rounding slack.
    """
    if n < 2:
        raise ValueError("a transition matrix needs n >= 2")
    if density not in DENSITY_BOUNDS:
        raise ValueError(f"density must be 'sparse' or 'dense', got {density!r}")
    rng = make_rng(seed)
    total = _nonzero_count(n, density, rng)

    mask = np.zeros((n, n), dtype=bool)
    if irreducible:
        order = rng.permutation(n)
        mask[order, np.roll(order, -1)] = True
    else:
        mask[np.arange(n), rng.integers(0, n, size=n)] = True
    free = np.flatnonzero(~mask.ravel())
    extra = rng.choice(free, size=total - n, replace=False)
    mask.ravel()[extra] = True

    p = np.zeros((n, n))
    for i in range(n):
        cols = np.flatnonzero(mask[i])
        w = 1.0 - rng.random(len(cols))
        w /= w.sum()
        if len(cols) <= 50:
            r = np.maximum(np.round(w, 2), 0.01)
            top = int(np.argmax(r))
            r[top] = round(1.0 - (r.sum() - r[top]), 2)
            if r[top] >= 0.01:
                w = r
        p[i, cols] = w
    return TransitionMatrix(p)


def load_matrix(text: str) -> TransitionMatrix:
    """Parse a matrix file.

    Accepted layouts: an optional first line holding ``n`` alone, then ``n``
    rows of ``n`` probabilities.  A header row of column labels and a leading
    row label on each line (as in a printed table) are also recognised.
    """
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty matrix file")
    n = None
    if len(lines[0]) == 1 and len(lines) > 1:
        n = int(lines[0][0])
        lines = lines[1:]
    elif len(lines) > 1 and all("." not in tok for tok in lines[0]) and len(lines[0]) == len(lines) - 1:
        lines = lines[1:]
    n = len(lines) if n is None else n
    if len(lines) != n:
        raise ValueError(f"expected {n} rows, found {len(lines)}")
    rows = []
    for i, toks in enumerate(lines):
        if len(toks) == n + 1:
            toks = toks[1:]
        if len(toks) != n:
            raise ValueError(f"row {i}: expected {n} entries, found {len(toks)}")
        try:
            rows.append([float(t) for t in toks])
        except ValueError as exc:
            raise ValueError(f"row {i}: {exc}") from None
    return TransitionMatrix(np.array(rows))


def format_matrix(matrix: TransitionMatrix) -> str:
    rows = [" ".join(f"{v:.2f}" if round(v, 2) == v else repr(float(v)) for v in row) for row in matrix.p]
    return "\n".join([str(matrix.n)] + rows) + "\n"


@dataclass(frozen=True)
class StreamSpec:
    matrices: tuple[TransitionMatrix, ...]
    length: int
    seed: int
    block: int = 10
    initial: int = 0
    mode: str = field(default="")

    def __post_init__(self):
        mats = tuple(self.matrices)
        object.__setattr__(self, "matrices", mats)
        mode = self.mode or ("one_matrix" if len(mats) == 1 else "two_matrix")
        object.__setattr__(self, "mode", mode)
        if mode == "one_matrix" and len(mats) != 1:
            raise ValueError("one_matrix mode takes exactly one matrix")
        if mode == "two_matrix":
            if len(mats) != 2:
                raise ValueError("two_matrix mode takes exactly two matrices")
            if mats[0].n != mats[1].n:
                raise ValueError("both matrices must have the same dimension")
        if mode not in ("one_matrix", "two_matrix"):
            raise ValueError(f"unknown stream mode {mode!r}")
        if self.length < 1 or self.block < 1:
            raise ValueError("stream length and block length must be positive")
        if not 0 <= self.initial < mats[0].n:
            raise ValueError(f"initial node {self.initial} outside [0, {mats[0].n})")

    @property
    def n(self) -> int:
        return self.matrices[0].n

    def active(self, step: int) -> int:
        """Index of the matrix generating request ``step`` (1-based)."""
        if self.mode == "one_matrix":
            return 0
        return ((step - 1) // self.block) % 2


def gen_stream(spec: StreamSpec) -> list[int]:
    """Sample requests ``T_1..T_s``; ``T_1`` is drawn from row ``spec.initial``."""
    cdfs = [np.cumsum(m.p, axis=1) for m in spec.matrices]
    last_positive = [np.array([np.flatnonzero(row)[-1] for row in m.p]) for m in spec.matrices]
    u = make_rng(spec.seed).random(spec.length)
    prev = spec.initial
    out = []
    for step in range(1, spec.length + 1):
        a = spec.active(step)
        j = int(np.searchsorted(cdfs[a][prev], u[step - 1], side="right"))
        if j >= spec.n:
            j = int(last_positive[a][prev])
        out.append(j)
        prev = j
    return out


def format_stream(stream) -> str:
    return " ".join(str(int(v)) for v in stream) + "\n"


def load_stream(text: str, n: int | None = None) -> list[int]:
    out = [int(tok) for tok in text.split()]
    if n is not None:
        bad = [v for v in out if not 0 <= v < n]
        if bad:
            raise ValueError(f"stream holds node {bad[0]} outside [0, {n})")
    return out


def reference_sparse_matrix() -> TransitionMatrix:
    """A hand-picked 9-node sparse matrix whose streams follow a strong cycle."""
    from importlib.resources import files

    return load_matrix(files("moo_kserver").joinpath("data/reference_sparse.txt").read_text())
