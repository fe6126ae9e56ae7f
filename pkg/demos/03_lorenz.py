"""Lorenz at the classic parameters: three saddles and a strange attractor.

No periodic orbit closes and every sampled trajectory stays bounded without
settling, so the classifier lands on GENERAL.
"""

from flowclass import builtin, classify_system
from flowclass.report import render_report
from flowclass.vectorfield import DEFAULT_BOUNDS

report = classify_system(builtin("lorenz"), DEFAULT_BOUNDS["lorenz"])
print(render_report(report))
print("fates:", report.details["fates"])
print("orbit search:", report.details["orbit_search"])
