"""
Comparing policies on a strong and a weak pattern
=================================================

Each experiment mines one training stream and then serves three test
streams with MOO, Greedy, Balance and Harmonic.  Ratios are policy cost over
the optimum cost of the same stream.
"""

from moo_kserver.harness import preset, run_experiment
from moo_kserver.harness import report_csv, report_table
from moo_kserver.streamgen import reference_sparse_matrix

# Strong pattern: the first test stream is the training stream itself
strong = run_experiment(preset("strong_line", matrices=(reference_sparse_matrix(),), seed=0))
print(report_table(strong))

# Weak pattern: fresh test streams and a new starting configuration per run
weak = run_experiment(preset("weak_line", seed=0))
print(report_table(weak))

# Full precision lives in the CSV form
print(report_csv(weak))
