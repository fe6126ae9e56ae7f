"""Saddle manifolds: a separatrix loop and a saddle connection.

The pendulum's unstable branch from (pi, 0) swings over the bottom and comes
back near the saddle, so the homoclinic detector fires. In the channel field
two saddles share a trajectory, which the transversality check reports as
a tangency.
"""

import math

import numpy as np

from flowclass import check_transversality, detect_homoclinic, make_field, unstable_manifold

pendulum = make_field(lambda x: np.array([x[1], -np.sin(x[0])]), 2)
for br in unstable_manifold(pendulum, [math.pi, 0.0], n_points=5, extent=3.0):
    print(f"branch sign {br.sign:+d}:", np.round(br.points, 3).tolist())
print("homoclinic:", detect_homoclinic(pendulum, [math.pi, 0.0]))

channel = make_field(lambda x: np.array([np.sin(x[0]), -x[1] * np.cos(x[0])]), 2)
v = check_transversality(channel, [[0.0, 0.0], [math.pi, 0.0]], [(-1.0, 4.0), (-1.5, 1.5)])
print(f"channel: {v.verdict}, min angle {math.degrees(v.min_angle):.3f} deg over {v.checked_pairs} pairs")
