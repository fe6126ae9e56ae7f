"""Classify a linear gradient system and print the boxed report.

Run: python3 demos/01_quickstart.py
"""

import numpy as np

from flowclass import classify_system, make_field
from flowclass.report import render_report

# dx/dt = -grad V with V = x1^2 + x2^2 + x1 x2: a bowl with one minimum.
field = make_field(lambda x: np.array([-2 * x[0] - x[1], -x[0] - 2 * x[1]]), 2, name="bowl")
report = classify_system(field, [(-2.0, 2.0), (-2.0, 2.0)])
print(render_report(report))

# The same information is available programmatically.
print("gradient:", report.is_gradient)
print("rule that fired:", report.details["rule"])
print("trajectory fates:", report.details["fates"])
