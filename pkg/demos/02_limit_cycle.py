"""Find the Van der Pol limit cycle and check its Floquet multipliers.

The product of the multipliers must equal exp of the divergence integrated
once around the orbit; the script prints both sides.
"""

import numpy as np

from flowclass import builtin, find_periodic_orbits, jacobian

vdp = builtin("vanderpol")
(orbit,) = find_periodic_orbits(vdp, [(-3.0, 3.0), (-3.0, 3.0)])
print(f"period      {orbit.period:.6f}")
print(f"stability   {orbit.stability}")
print("multipliers", np.round(orbit.multipliers, 6))

div = np.array([np.trace(jacobian(vdp, p)) for p in orbit.points])
print(f"prod(mu)    {abs(np.prod(orbit.multipliers)):.6e}")
print(f"exp(int div) {np.exp(div.mean() * orbit.period):.6e}")
