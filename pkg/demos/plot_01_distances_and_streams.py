"""
Node spaces, distances and request streams
==========================================

Nodes live on a line or a grid.  Distances may be asymmetric and need not
obey the triangle inequality.  Requests come from a Markov chain.
"""

import numpy as np

from moo_kserver import DistanceFunction, NodeSpace, StreamSpec, gen_matrix, gen_stream
from moo_kserver.streamgen import reference_sparse_matrix

# Nine nodes on a line; node 0 sits at coordinate 1
line = NodeSpace.line(9)
for kind in ("line_abs", "line_sq", "line_asym"):
    m = np.array(DistanceFunction(kind).matrix(line))
    print(kind, "row 1:", m[1])

# The destination-weighted rule is not symmetric
asym = DistanceFunction("line_asym").matrix(line)
print("2 -> 5 costs", asym[1][4], "but 5 -> 2 costs", asym[4][1])

# Grids are numbered row by row
grid = NodeSpace.grid(3)
print("node 5 on the grid is at", grid.coords(5))

# A sparse matrix gives a strongly patterned stream, a dense one a weak pattern
strong = reference_sparse_matrix()
weak = gen_matrix(9, "dense", seed=1)
print("nonzero fraction:", strong.density(), weak.density())
print("strong:", gen_stream(StreamSpec((strong,), 30, seed=0)))
print("weak:  ", gen_stream(StreamSpec((weak,), 30, seed=0)))

# Two matrices alternate every ten requests
mixed = StreamSpec((strong, weak), 40, seed=0, block=10)
print("mixed: ", gen_stream(mixed))
