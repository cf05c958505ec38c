# coding: utf-8

# # Random initial estimates
#
# Attitude estimates drawn uniformly over all rotations, position estimates
# uniformly in a 10 m box.  Each trial has its own child seed, so any single
# trial can be replayed.

# In[1]:

from bearing_pose import basin_sweep, reference_scenario
from bearing_pose.sim import planted_equilibrium_trial

cfg = reference_scenario()
res = basin_sweep(cfg, trials=20, seed=7)
print(f"{res['converged']}/{res['trials']} converged; worst final attitude error "
      f"{max(res['final_attitude_error']):.1e}, position error {max(res['final_position_error']):.1e} m")

# The exceptional set has measure zero: starting exactly on an undesired
# equilibrium keeps the error there, until round-off excites the unstable
# mode.

# In[2]:

w = planted_equilibrium_trial(cfg)
print(w)
