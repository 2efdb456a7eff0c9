"""End-to-end experiments: train on one stream's optimum, test against baselines.

Seeds
-----
Every random quantity of run ``r`` is seeded with ``derive_seed(master, r,
role)``: the first 64-bit word of ``numpy.random.SeedSequence([master, r,
ROLE_IDS[role]])``.  Roles are independent, so changing e.g. the Harmonic
stream never shifts a request stream.  The training stream and training
start configuration use index 0.  Test run ``r`` uses index ``r`` when the
training stream doubles as the first test stream and ``r + 1`` otherwise.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .domain import DistanceFunction, NodeSpace, load_distance_table
from .miner import DecisionTree, build_tree, extract_cases
from .offline import OptTrace, optimum_flow
from .policies import POLICIES, MOOPolicy, competitive_ratio, run_policy
from .streamgen import StreamSpec, TransitionMatrix, gen_matrix, gen_stream, load_matrix, make_rng

ROLE_IDS = {"stream": 0, "start": 1, "harmonic": 2, "matrix": 3, "matrix2": 4}
POLICY_ORDER = ("moo", "greedy", "balance", "harmonic")
CSV_COLUMNS = ("run", "policy", "opt_cost", "cost", "ratio", "invalid", "seed", "start_config")


def derive_seed(master: int, run: int, role: str) -> int:
    state = np.random.SeedSequence([int(master), int(run), ROLE_IDS[role]]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class ExperimentSpec:
    space: NodeSpace
    distance: DistanceFunction
    k: int
    densities: tuple[str, ...] = ("sparse",)
    matrices: tuple[TransitionMatrix, ...] = ()
    block: int = 10
    train_length: int = 2000
    test_length: int = 2000
    policies: tuple[str, ...] = POLICY_ORDER
    runs: int = 3
    seed: int = 0
    start: str = "per-run"
    train_as_test: bool = False
    irreducible: bool = True
    initial: int = 0
    min_cases: int = 2
    confidence: float = 0.25
    label: str = ""

    def __post_init__(self):
        if self.train_length < 1 or self.test_length < 1 or self.runs < 1:
            raise ValueError("stream lengths and run count must be positive")
        if not 1 <= self.k <= self.space.n:
            raise ValueError(f"k={self.k} servers do not fit on {self.space.n} nodes")
        if self.start not in ("fixed", "per-run"):
            raise ValueError("start must be 'fixed' or 'per-run'")
        unknown = set(self.policies) - set(POLICY_ORDER)
        if unknown:
            raise ValueError(f"unknown policies {sorted(unknown)}")
        if not self.matrices and len(self.densities) not in (1, 2):
            raise ValueError("give one or two matrix densities")

    @property
    def mode(self) -> str:
        count = len(self.matrices) or len(self.densities)
        return "one_matrix" if count == 1 else "two_matrix"

    def transition_matrices(self) -> tuple[TransitionMatrix, ...]:
        if self.matrices:
            return self.matrices
        roles = ("matrix", "matrix2")
        return tuple(
            gen_matrix(self.space.n, dens, derive_seed(self.seed, 0, role), irreducible=self.irreducible)
            for dens, role in zip(self.densities, roles)
        )

    def stream_spec(self, index: int, length: int, matrices=None) -> StreamSpec:
        mats = matrices or self.transition_matrices()
        return StreamSpec(mats, length, derive_seed(self.seed, index, "stream"), self.block, self.initial)

    def start_config(self, index: int) -> tuple[int, ...]:
        """Uniformly random k-subset of nodes, sorted."""
        index = 0 if self.start == "fixed" else index
        rng = make_rng(derive_seed(self.seed, index, "start"))
        return tuple(sorted(int(v) for v in rng.choice(self.space.n, size=self.k, replace=False)))

    def test_index(self, run: int) -> int:
        return run if self.train_as_test else run + 1


def run_moo_pipeline(spec: ExperimentSpec, matrices=None) -> tuple[DecisionTree, OptTrace]:
    """Training stream -> offline optimum -> cases -> decision tree."""
    stream = gen_stream(spec.stream_spec(0, spec.train_length, matrices))
    start = spec.start_config(0)
    trace = optimum_flow(spec.space, spec.distance, start, stream)
    table = extract_cases(stream, start, trace, spec.space.n)
    tree = build_tree(table, spec.min_cases, spec.confidence)
    return tree, trace


@dataclass
class PolicyOutcome:
    cost: object
    ratio: float
    invalid: int


@dataclass
class RunRecord:
    run: int
    seed: int
    start_config: tuple[int, ...]
    opt_cost: object
    outcomes: dict[str, PolicyOutcome]
    solve_seconds: float = field(default=0.0, compare=False)


@dataclass
class ExperimentReport:
    label: str
    policies: tuple[str, ...]
    runs: list[RunRecord]
    tree: DecisionTree | None = field(default=None, compare=False, repr=False)

    def ratios(self, policy: str) -> list[float]:
        return [r.outcomes[policy].ratio for r in self.runs]

    def mean_ratio(self, policy: str) -> float:
        vals = self.ratios(policy)
        return math.fsum(vals) / len(vals) if not any(math.isinf(v) for v in vals) else math.inf

    def means(self) -> dict[str, float]:
        return {p: self.mean_ratio(p) for p in self.policies}


def _plain(cost):
    return int(cost) if cost == int(cost) else float(cost)


def _one_run(spec: ExperimentSpec, run: int, matrices, train_stream, tree) -> RunRecord:
    idx = spec.test_index(run)
    if spec.train_as_test and run == 0:
        stream = train_stream
    else:
        stream = gen_stream(spec.stream_spec(idx, spec.test_length, matrices))
    start = spec.start_config(idx)
    t0 = time.perf_counter()
    opt = optimum_flow(spec.space, spec.distance, start, stream).total_cost
    elapsed = time.perf_counter() - t0
    outcomes = {}
    for name in spec.policies:
        if name == "moo":
            policy = MOOPolicy(tree)
        elif name == "harmonic":
            policy = POLICIES[name](derive_seed(spec.seed, idx, "harmonic"))
        else:
            policy = POLICIES[name]()
        res = run_policy(policy, spec.space, spec.distance, start, stream)
        outcomes[name] = PolicyOutcome(_plain(res.total_cost), competitive_ratio(res.total_cost, opt), res.invalid_count)
    return RunRecord(run, derive_seed(spec.seed, idx, "stream"), start, _plain(opt), outcomes, elapsed)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentReport:
    """Run ``spec.runs`` test streams; results are ordered by run index."""
    matrices = spec.transition_matrices()
    train_stream = gen_stream(spec.stream_spec(0, spec.train_length, matrices))
    tree = run_moo_pipeline(spec, matrices)[0] if "moo" in spec.policies else None
    args = [(spec, r, matrices, train_stream, tree) for r in range(spec.runs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(_one_run, *zip(*args)))
    else:
        runs = [_one_run(*a) for a in args]
    return ExperimentReport(spec.label, tuple(spec.policies), runs, tree)


def _fmt_num(x) -> str:
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(x)
    return str(x)


def _parse_num(tok: str):
    if tok == "":
        return None
    if tok == "inf":
        return math.inf
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in report.runs:
        for p in report.policies:
            o = rec.outcomes[p]
            w.writerow([rec.run, p, _fmt_num(rec.opt_cost), _fmt_num(o.cost), _fmt_num(o.ratio), o.invalid,
                        rec.seed, " ".join(map(str, rec.start_config))])
    for p in report.policies:
        w.writerow(["mean", p, "", "", _fmt_num(report.mean_ratio(p)), "", "", ""])
    return buf.getvalue()


def report_table(report: ExperimentReport) -> str:
    """Tab-separated x/y/z layout: one triple entry per column, ratios to 2 decimals."""
    def triple(vals, fmt):
        return "/".join(fmt(v) for v in vals)

    ratio = lambda v: "inf" if math.isinf(v) else f"{v:.2f}"  # noqa: E731
    head = ["", "optimum cost"] + [p.capitalize() if p != "moo" else "MOO" for p in report.policies]
    row = [report.label or "-", triple([r.opt_cost for r in report.runs], _fmt_num)]
    row += [triple(report.ratios(p), ratio) for p in report.policies]
    if "moo" in report.policies:
        head.append("invalid assignment")
        row.append(triple([r.outcomes["moo"].invalid for r in report.runs], str))
    head.append("mean")
    row.append(" ".join(f"{p}={ratio(report.mean_ratio(p))}" for p in report.policies))
    return "\t".join(head) + "\n" + "\t".join(row) + "\n"


def emit_report(report: ExperimentReport, path, fmt: str = "csv") -> None:
    text = {"csv": report_csv, "table": report_table}[fmt](report)
    Path(path).write_text(text)


def load_report_csv(text: str, label: str = "") -> ExperimentReport:
    rows = list(csv.DictReader(io.StringIO(text)))
    policies: list[str] = []
    runs: dict[int, RunRecord] = {}
    for row in rows:
        if row["run"] == "mean":
            continue
        r = int(row["run"])
        if row["policy"] not in policies:
            policies.append(row["policy"])
        rec = runs.get(r)
        if rec is None:
            start = tuple(int(v) for v in row["start_config"].split())
            rec = runs[r] = RunRecord(r, int(row["seed"]), start, _parse_num(row["opt_cost"]), {})
        rec.outcomes[row["policy"]] = PolicyOutcome(_parse_num(row["cost"]), float(row["ratio"]), int(row["invalid"]))
    return ExperimentReport(label, tuple(policies), [runs[r] for r in sorted(runs)])


def sweep(spec: ExperimentSpec, param: str, values, workers: int = 1) -> list[tuple[object, ExperimentReport]]:
    """Repeat an experiment while varying ``k`` or the node count ``n``."""
    out = []
    for v in values:
        if param == "k":
            s = replace(spec, k=v)
        elif param == "n":
            space = NodeSpace.line(v) if spec.space.kind == "line" else NodeSpace.grid(math.isqrt(v))
            if space.n != v:
                raise ValueError(f"a square grid cannot have {v} nodes")
            s = replace(spec, space=space, matrices=())
        else:
            raise ValueError("sweeps vary 'k' or 'n'")
        out.append((v, run_experiment(s, workers)))
    return out


def sweep_csv(param: str, results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([param, "policy", "mean_ratio", "mean_opt_cost", "max_invalid"])
    for v, rep in results:
        opt = math.fsum(float(r.opt_cost) for r in rep.runs) / len(rep.runs)
        for p in rep.policies:
            invalid = max(r.outcomes[p].invalid for r in rep.runs)
            w.writerow([v, p, _fmt_num(rep.mean_ratio(p)), repr(opt), invalid])
    return buf.getvalue()


# Named experiment layouts: line or grid, pattern strength, distance kind.
PRESETS = {
    "strong_line": dict(space=NodeSpace.line(9), distance=DistanceFunction("line_sq"), k=5, densities=("sparse",),
                        runs=3, start="fixed", train_as_test=True, label="strong_line"),
    "weak_line": dict(space=NodeSpace.line(9), distance=DistanceFunction("line_sq"), k=5, densities=("dense",),
                      runs=3, start="per-run", label="weak_line"),
    "mixed_line": dict(space=NodeSpace.line(9), distance=DistanceFunction("line_abs"), k=5,
                       densities=("sparse", "dense"), runs=6, label="mixed_line"),
    "asym_line": dict(space=NodeSpace.line(9), distance=DistanceFunction("line_asym"), k=5,
                      densities=("dense", "dense"), runs=6, label="asym_line"),
    "mixed_grid": dict(space=NodeSpace.grid(3), distance=DistanceFunction("grid_manhattan"), k=5,
                       densities=("sparse", "dense"), runs=6, label="mixed_grid"),
    "asym_grid": dict(space=NodeSpace.grid(3), distance=DistanceFunction("grid_asym"), k=5,
                      densities=("dense", "dense"), runs=6, label="asym_grid"),
}

SWEEPS = {
    "mixed_line": ("k", range(1, 9)),
    "asym_line": ("n", range(6, 13)),
    "mixed_grid": ("k", range(1, 9)),
    "asym_grid": ("n", (9, 16, 25)),
}


def preset(name: str, **overrides) -> ExperimentSpec:
    return ExperimentSpec(**{**PRESETS[name], **overrides})


_SPEC_KEYS = {f.name for f in fields(ExperimentSpec)}


def parse_spec_file(text: str, base_dir: Path | str = ".") -> ExperimentSpec:
    """Parse flat ``key = value`` lines (``#`` starts a comment).

    Keys: preset, space (``line:9``/``grid:3x3``), distance (kind or
    ``table:<file>``), k, density (``sparse`` or ``sparse,dense``), matrix,
    matrix2, block, train_length, test_length, policies, runs, seed, start
    (``fixed``/``per-run``), train_as_test, irreducible, initial, min_cases,
    confidence, label.
    """
    base_dir = Path(base_dir)
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key = value")
        raw[key.strip()] = value.strip()

    kw: dict[str, object] = dict(PRESETS[raw.pop("preset")]) if "preset" in raw else {}
    mats = []
    for key, value in raw.items():
        if key == "space":
            kw["space"] = NodeSpace.parse(value)
        elif key == "distance":
            if value.startswith("table:"):
                kw["distance"] = load_distance_table((base_dir / value[6:]).read_text())
            else:
                kw["distance"] = DistanceFunction(value)
        elif key in ("density", "densities"):
            kw["densities"] = tuple(v.strip() for v in value.split(","))
        elif key in ("matrix", "matrix2"):
            mats.append((key, load_matrix((base_dir / value).read_text())))
        elif key == "policies":
            kw["policies"] = tuple(v.strip() for v in value.split(","))
        elif key in ("train_as_test", "irreducible"):
            kw[key] = value.lower() in ("1", "true", "yes", "on")
        elif key == "confidence":
            kw[key] = float(value)
        elif key in ("label", "start"):
            kw[key] = value
        elif key in _SPEC_KEYS:
            kw[key] = int(value)
        else:
            raise ValueError(f"unknown experiment key {key!r}")
    if mats:
        kw["matrices"] = tuple(m for _, m in sorted(mats))
    missing = {"space", "distance", "k"} - set(kw)
    if missing:
        raise ValueError(f"experiment spec lacks {sorted(missing)}")
    return ExperimentSpec(**kw)
