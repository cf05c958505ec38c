# coding: utf-8

# # Attitude equilibria of a single follower
#
# With exact neighbors the attitude error of a follower obeys
# `dR/dt = R [-2 k_R psi(M R)]x`.  Its rest points are the identity and the
# half-turns about the three eigenvectors of `M`.

# In[1]:

import numpy as np

from bearing_pose import exp_so3, reference_scenario
from bearing_pose.analysis import (enumerate_equilibria, escape_time, linearize_unforced,
                                   simulate_unforced)
from bearing_pose.geom3 import rotation_distance
from bearing_pose.network import bearing_matrix

cfg = reference_scenario()
M = bearing_matrix(6, cfg.topology, cfg.positions)
eq = enumerate_equilibria(6, M)
for label, R, res in zip(eq.labels, eq.points, eq.residuals):
    ev = linearize_unforced(6, M, R)
    print(f"{label:32s} residual {res:.0e}  Re(eig) {np.round(ev.real, 3)}")

# Only the identity has an all-negative spectrum.  A 1e-6 nudge along the
# most unstable direction leaves each half-turn within a few seconds.

# In[2]:

for label, R in zip(eq.labels[1:], eq.points[1:]):
    print(label, f"escapes a 0.1 ball after {escape_time(M, R):.2f} s")

# Starting 0.99 pi away, the flow still ends at the identity.

# In[3]:

start = eq.points[1] @ exp_so3([0.05, 0.0, 0.0])
t, Rs = simulate_unforced(M, start, horizon=20.0, h=1e-2)
print([f"{rotation_distance(R):.3f}" for R in Rs[::400]])

# Repeated eigenvalues (agent 8) are refused unless representatives are
# requested explicitly.

# In[4]:

M8 = bearing_matrix(8, cfg.topology, cfg.positions)
try:
    enumerate_equilibria(8, M8)
except ValueError as exc:
    print(exc)
print(enumerate_equilibria(8, M8, allow_repeated=True).labels)
