"""Draws a 2^8 table from a pairwise log-linear model on reference_graph.txt."""
import itertools
import numpy as np

rng = np.random.default_rng(665)
edges = []
for line in open("reference_graph.txt"):
    line = line.split("#")[0].split()
    if line:
        edges.append(tuple(ord(c) - ord("a") for c in line))

main = rng.normal(-0.4, 0.5, size=8)
pair = {e: rng.choice([-1, 1]) * rng.uniform(0.6, 1.4) for e in edges}
cells = list(itertools.product([0, 1], repeat=8))
logits = np.array([main @ np.array(c) + sum(w * c[u] * c[v] for (u, v), w in pair.items()) for c in cells])
prob = np.exp(logits - logits.max())
counts = rng.multinomial(665, prob / prob.sum())

with open("synthetic_8var.csv", "w") as out:
    out.write("a,b,c,d,e,f,g,h,count\n")
    for c, n in zip(cells, counts):
        if n:
            out.write(",".join(map(str, c)) + f",{n}\n")
