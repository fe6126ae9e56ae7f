"""Boxed plain-text rendering of a :class:`~flowclass.classify.ClassificationReport`."""

from __future__ import annotations

from .classify import landscape_interpretation

_MIN_WIDTH = 62


def fmt_coord(v):
    s = f"{v:.1f}"
    return "0.0" if s == "-0.0" else s


def fmt_point(x):
    return "[" + ", ".join(fmt_coord(float(v)) for v in x) + "]"


def fmt_sci(v):
    """Scientific notation with two significant figures."""
    return f"{v:.1e}"


def fmt_sig2(v):
    if v == 0:
        return "0.0"
    s = f"{v:.2g}"
    return s if any(c in s for c in ".e") else s + ".0"


def manifold_text(report):
    if report.details.get("saddles", 0) == 0:
        return "N/A (no saddles)"
    if report.has_transverse_manifolds is None:
        return "Unknown (not checked)"
    return "Yes" if report.has_transverse_manifolds else "No"


def render_report(report):
    """The report as a box-drawn text block, one statistic per line."""
    sections = [
        ["System Class: " + report.system_class.value,
         f"Confidence: {report.confidence:.2f}"],
        [f"Fixed Points: {len(report.fixed_points)}"]
        + [f"  • {fp.type.description} at {fmt_point(fp.location)}" for fp in report.fixed_points]
        + [f"Periodic Orbits: {len(report.periodic_orbits)}"]
        + [
            f"  • {'Stable' if o.is_stable else 'Unstable'} orbit, period {o.period:.4f}"
            for o in report.periodic_orbits
        ],
        [f"Jacobian Symmetry Error: {fmt_sci(report.jacobian_symmetry)}",
         f"Curl/Gradient Ratio: {fmt_sig2(report.curl_gradient_ratio)}",
         f"Manifolds Transverse: {manifold_text(report)}"],
        ["Landscape: " + landscape_interpretation(report)[2]],
    ]
    title = "System Classification Report"
    width = max([_MIN_WIDTH, len(title) + 2] + [len(s) + 2 for sec in sections for s in sec])
    bar = "═" * width
    out = ["╔" + bar + "╗", "║" + title.center(width) + "║"]
    for sec in sections:
        out.append("╠" + bar + "╣")
        out += ["║ " + s.ljust(width - 1) + "║" for s in sec]
    out.append("╚" + bar + "╝")
    return "\n".join(out)
