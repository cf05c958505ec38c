# coding: utf-8

# # Validating a leader-follower network
#
# Agents 1 and 2 are leaders.  Every follower needs at least two neighbors
# numbered below it, the graph must be acyclic, and each follower's bearings
# must not all be parallel.

# In[1]:

import numpy as np

from bearing_pose import load_scenario, spectral_report, validate_topology
from bearing_pose.network import Topology

cfg = load_scenario("paper_sec5")
print(cfg.topology.neighbors)
print(validate_topology(cfg.topology, cfg.positions))

# Breaking one rule at a time shows which clause is reported.

# In[2]:

bad = dict(cfg.topology.neighbors)
bad[5] = (4,)
print(validate_topology(Topology.from_neighbors(8, bad), cfg.positions).to_dict())

pos = cfg.positions.copy()
pos[3] = [4.0, 0.0, 0.0]  # agent 4 on the line through both leaders
line = Topology.from_neighbors(4, {3: [1, 2], 4: [1, 2]})
print(validate_topology(line, pos[:4]).to_dict())

# The per-follower spectra drive everything downstream:
#
# * `M` is the gain-weighted sum of `b b^T` over measured bearings; its
#   eigenvectors fix the undesired attitude equilibria.
# * `Q = (sum k) I - M`; its smallest eigenvalue sets the local attitude rate.
# * the smallest eigenvalue of the projector sum sets the position rate.

# In[3]:

rep = spectral_report(cfg.topology, cfg.positions)
for i, s in rep.followers.items():
    print(i, np.round(s.m_eigenvalues, 4), "Q min", round(s.q_min, 4), "P min", round(s.p_min, 4),
          "distinct" if s.distinct else "REPEATED")

# Agent 8 hears agent 1 along a face diagonal and agent 7 along an edge at a
# right angle to it, so `M_8` has a double eigenvalue 1.  Its half-turn
# equilibria then form a circle rather than isolated points.
