"""
The offline optimum
===================

With the whole stream known in advance the cheapest service plan is a
minimum-cost flow.  A dynamic program over configurations checks it on
small instances.
"""

import time

from moo_kserver import DistanceFunction, NodeSpace, StreamSpec, gen_stream, optimum_bruteforce, optimum_flow
from moo_kserver.offline import format_trace
from moo_kserver.policies import Greedy, run_policy
from moo_kserver.streamgen import reference_sparse_matrix

# Two servers and a stream that alternates between nodes 1 and 2
space = NodeSpace.line(6)
d = DistanceFunction("line_abs")
stream = [1, 2] * 3
trace = optimum_flow(space, d, [0, 3], stream)
print(format_trace(trace))

# Greedy keeps shuttling one server back and forth
print("greedy pays", run_policy(Greedy(), space, d, [0, 3], stream).total_cost)

# Both solvers agree
print("dynamic program:", optimum_bruteforce(space, d, [0, 3], stream))

# A 2000-request stream solves in well under a second
space = NodeSpace.line(9)
long_stream = gen_stream(StreamSpec((reference_sparse_matrix(),), 2000, seed=0))
t0 = time.perf_counter()
trace = optimum_flow(space, DistanceFunction("line_sq"), [0, 2, 4, 6, 8], long_stream)
print(f"optimum {trace.total_cost} in {time.perf_counter() - t0:.2f}s")
