"""
Sweeping the number of servers and nodes
========================================

Mean ratios as k grows on a line, and as the line grows under the
asymmetric distance.  Stream lengths are shortened to keep this quick.
"""

from moo_kserver.harness import preset, sweep, sweep_csv

fast = dict(train_length=500, test_length=500, runs=2)

# Mixed sparse/dense stream on nine nodes, k = 1..8
print(sweep_csv("k", sweep(preset("mixed_line", **fast), "k", range(1, 9))))

# Asymmetric distance, dense/dense stream, n = 6..12 with k = 5
print(sweep_csv("n", sweep(preset("asym_line", **fast), "n", range(6, 13))))
