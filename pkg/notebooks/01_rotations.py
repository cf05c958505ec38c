# coding: utf-8

# # Rotations and the error metric
#
# Attitudes are plain 3x3 arrays.  This script walks through the few maps the
# observers are built from.

# In[1]:

import math

import numpy as np

from bearing_pose.geom3 import (angle_axis, exp_so3, is_rotation, log_so3, orthogonal_projector,
                                project_to_rotation, psi, random_rotation, rotation_distance, skew, vex)

# `skew` turns a vector into its cross-product matrix and `vex` undoes it.

# In[2]:

v = np.array([0.3, -1.2, 0.5])
y = np.array([1.0, 2.0, 3.0])
print(skew(v) @ y, np.cross(v, y))
print(vex(skew(v)))

# `psi` keeps only the antisymmetric part of a matrix, as a vector.  It is
# what turns the weighted bearing matrix into a correction direction.

# In[3]:

C = np.arange(9.0).reshape(3, 3)
print(psi(C))

# The error metric is `sqrt(tr(I - R) / 4)`, i.e. the sine of half the
# rotation angle: 0 at the identity, 1 for any half-turn.

# In[4]:

for theta in (0.0, 0.1 * math.pi, 0.5 * math.pi, 0.9 * math.pi, math.pi):
    R = angle_axis(theta, np.array([1.0, 0.0, 0.0]))
    print(f"{theta / math.pi:.1f} pi -> {rotation_distance(R):.4f}")

# The exponential and logarithm are inverses on angles in [0, pi].

# In[5]:

w = np.array([0.4, 2.1, -1.0])
print(log_so3(exp_so3(w)), w)

# Projection onto the plane orthogonal to a bearing, and the nearest
# rotation to a perturbed matrix.

# In[6]:

P = orthogonal_projector(np.array([0.0, 0.0, 2.0]))
print(P)
noisy = exp_so3(w) + 1e-3 * np.random.default_rng(0).standard_normal((3, 3))
print(is_rotation(noisy), is_rotation(project_to_rotation(noisy)))

# Uniform random rotations (used by the random-start sweep) have a zero mean
# matrix.

# In[7]:

rng = np.random.default_rng(1)
print(np.round(np.mean([random_rotation(rng) for _ in range(5000)], axis=0), 2))
