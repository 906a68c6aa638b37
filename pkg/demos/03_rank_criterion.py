"""
When is consensus achievable at all?
====================================

Consensus can be reached with some block-diagonal gain exactly when the edge
system has no unstable decentralized fixed mode. That holds if, for every
unstable eigenvalue of ``A`` and every split of the agents into "actuating"
and "measuring" sets, a certain block matrix keeps full row rank. The sweep
is exponential in the number of agents, which is harmless at these sizes.

The same question can be probed numerically. Eigenvalues of the closed loop
that survive several random decentralized gains are fixed modes.
"""

# %%
import time

import numpy as np

from consensus_forge import AgentDynamics, Topology, build_transformed_system, criterion, extract_dst, renumber
from consensus_forge.criterion import dfm_sample
from consensus_forge.fixtures import example1, example2

for make in (example1, example2):
    sc = make()
    tree = renumber(extract_dst(sc.topology, sc.root))
    v = criterion(sc.dynamics, sc.topology, tree)
    print(f"{sc.name}: achievable={v.consensus_achievable}, splits checked={v.bipartitions_checked}")

# %%
# An agent without actuation
# --------------------------
# With ``B = 0`` nobody can move the oscillator modes, so every split fails.
# The random-gain probe finds the same modes, the pair ``±i`` once per
# fundamental edge.
sc = example1()
tree = renumber(extract_dst(sc.topology, sc.root))
mute = AgentDynamics(sc.dynamics.A, np.zeros((2, 1)))
v = criterion(mute, sc.topology, tree, exhaustive=False)
print("achievable:", v.consensus_achievable, " first witness split:", v.failures[0][1])
fixed = dfm_sample(build_transformed_system(mute, sc.topology, tree), trials=6, seed=0)
print("persistent eigenvalues:", np.round(fixed, 6))

# %%
# Sweep cost
# ----------
# A ring of ten oscillators means 1024 splits for the single tested mode.
N = 10
W = np.roll(np.eye(N), 1, axis=1)
topo = Topology(W)
tree = renumber(extract_dst(topo))
start = time.perf_counter()
v = criterion(sc.dynamics, topo, tree)
print(f"N = {N}: {v.bipartitions_checked} splits in {time.perf_counter() - start:.3f} s,",
      "achievable" if v.consensus_achievable else "not achievable")
