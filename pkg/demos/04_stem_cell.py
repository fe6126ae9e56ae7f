"""Sweep the LIF input of the four-gene stem-cell network.

For each LIF level the script lists the equilibria and the classifier
verdict, then measures the curl/gradient ratio at a probe point. The same
model ships as models/stemcell.fcm; the two are compared first.
"""

from pathlib import Path

import numpy as np

from flowclass import builtin, classify_system, curl_to_gradient_ratio
from flowclass.modeldsl import compile_model, load_model
from flowclass.vectorfield import DEFAULT_BOUNDS

bounds = DEFAULT_BOUNDS["stemcell"]
dsl, _ = compile_model(load_model(Path(__file__).parents[1] / "models" / "stemcell.fcm"))
pts = np.random.default_rng(0).uniform(0, 100, size=(100, 4))
print("file vs builtin, max diff:", max(np.max(np.abs(dsl(p) - builtin("stemcell")(p))) for p in pts))

for L in (10.0, 50.0, 150.0):
    f = builtin("stemcell", {"L": L})
    r = classify_system(f, bounds)
    print(f"\nL = {L:g}: {r.system_class.value}  (symmetry error {r.jacobian_symmetry:.2e})")
    for fp in r.fixed_points:
        print("  ", fp.type.value, np.round(fp.location, 4))

probe = [60.0, 50.0, 40.0, 20.0]
ratio = curl_to_gradient_ratio(builtin("stemcell", {"L": 150.0}), probe)
print(f"\ncurl/gradient ratio at {probe}, L=150: {ratio:.3e}",
      "(significant)" if ratio > 0.1 else "(below 0.1)")
