"""
Mining the optimum into a decision tree
=======================================

Each request of the training stream becomes a case: the requested node, the
occupancy of every node, and the node the optimum moved a server from.  A
C4.5-style learner turns the cases into rules.
"""

from moo_kserver import DistanceFunction, NodeSpace, StreamSpec, build_tree, classify, extract_cases, gen_stream
from moo_kserver.miner import format_tree
from moo_kserver.offline import optimum_flow
from moo_kserver.streamgen import reference_sparse_matrix

space = NodeSpace.line(9)
d = DistanceFunction("line_sq")
start = [0, 2, 4, 6, 8]
stream = gen_stream(StreamSpec((reference_sparse_matrix(),), 2000, seed=0))
trace = optimum_flow(space, d, start, stream)

table = extract_cases(stream, start, trace, space.n)
print(len(table), "cases; first:", table.cases[0])

# The strong pattern yields a small tree that first asks which node was requested
tree = build_tree(table)
print(format_tree(tree))

# The tree names a source node for a request and configuration
print("request 3 with servers on 0 2 4 6 8 ->", classify(tree, 3, {0, 2, 4, 6, 8}))
