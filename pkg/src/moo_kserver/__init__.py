"""Mining the offline optimum of the k-server problem for online decisions."""

from .domain import (
    DistanceFunction,
    InvalidDecision,
    NodeSpace,
    ServiceDecision,
    apply_decision,
    distance,
    make_config,
)
from .streamgen import StreamSpec, TransitionMatrix, gen_matrix, gen_stream, load_matrix
from .offline import OptTrace, optimum_bruteforce, optimum_flow
from .policies import (
    Balance,
    Greedy,
    Harmonic,
    MOOPolicy,
    RunResult,
    competitive_ratio,
    run_policy,
)
from .miner import CaseTable, DecisionTree, build_tree, classify, extract_cases
from .harness import ExperimentSpec, ExperimentReport, run_experiment, run_moo_pipeline

__version__ = "0.1.0"
