"""Trajectory outputs: CSV, run report, and an SVG plot of the paths."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .simulator import Scenario, Trajectory, convergence_time, final_law
from .stability import classify

__all__ = ["csv_text", "write_csv", "svg_text", "write_svg", "build_report"]

_PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b",
            "#e01a93", "#ff7f0e", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def csv_text(traj: Trajectory) -> str:
    """CSV rendering: one row per recorded sample, 17 significant digits,
    plain decimal points.  The e_d column is left empty when the scenario
    controls no closing edge."""
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    n = traj.n
    header = "t," + ",".join(f"x{i},y{i}" for i in range(1, n + 1)) + ",e_theta_norm,e_d"
    lines = [header]
    for i, t in enumerate(traj.times):
        cells = [_fmt(t)]
        cells.extend(_fmt(v) for v in traj.positions[i])
        cells.append(_fmt(traj.e_theta_norm[i]))
        cells.append(_fmt(traj.e_d[i]) if traj.has_closing else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(csv_text(traj), encoding="utf-8")
    return path


def svg_text(traj: Trajectory, width: int = 640) -> str:
    """SVG 1.1 plot: one polyline per agent, a cross at each initial
    position, a dot at each final position, and a dashed closing edge
    between the endpoint agents when the scenario controls it."""
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    n = traj.n
    pts = traj.positions.reshape(len(traj.times), n, 2)
    xmin, ymin = pts.reshape(-1, 2).min(axis=0)
    xmax, ymax = pts.reshape(-1, 2).max(axis=0)
    span_x = max(xmax - xmin, 1e-9)
    span_y = max(ymax - ymin, 1e-9)
    mx, my = 0.05 * span_x, 0.05 * span_y
    # Mirrored y values land back inside [ymin - my, ymax + my], so one
    # viewBox serves both axes even though SVG's y grows downward.
    vb = (xmin - mx, ymin - my, span_x + 2 * mx, span_y + 2 * my)
    height = max(1, int(round(width * vb[3] / vb[2])))

    def sy(y: float) -> float:
        return (ymin + ymax) - y

    mark = 0.02 * max(span_x, span_y)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{vb[0]:.6g} {vb[1]:.6g} {vb[2]:.6g} {vb[3]:.6g}" '
        f'width="{width}" height="{height}">',
        f'<rect x="{vb[0]:.6g}" y="{vb[1]:.6g}" width="{vb[2]:.6g}" '
        f'height="{vb[3]:.6g}" fill="white"/>',
    ]
    stroke = 0.004 * max(span_x, span_y)
    if traj.has_closing:
        a, b = pts[-1, 0], pts[-1, -1]
        parts.append(
            f'<line x1="{a[0]:.6g}" y1="{sy(a[1]):.6g}" x2="{b[0]:.6g}" y2="{sy(b[1]):.6g}" '
            f'stroke="#d62728" stroke-width="{stroke:.6g}" stroke-dasharray="{4 * stroke:.6g} {3 * stroke:.6g}"/>'
        )
    for agent in range(n):
        color = _PALETTE[agent % len(_PALETTE)]
        coords = " ".join(f"{x:.6g},{sy(y):.6g}" for x, y in pts[:, agent])
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="{stroke:.6g}" points="{coords}"/>')
    for agent in range(n):
        color = _PALETTE[agent % len(_PALETTE)]
        x0, y0 = pts[0, agent]
        parts.append(
            f'<path d="M {x0 - mark:.6g} {sy(y0 - mark):.6g} L {x0 + mark:.6g} {sy(y0 + mark):.6g} '
            f'M {x0 - mark:.6g} {sy(y0 + mark):.6g} L {x0 + mark:.6g} {sy(y0 - mark):.6g}" '
            f'stroke="{color}" stroke-width="{stroke:.6g}"/>'
        )
        x1, y1 = pts[-1, agent]
        parts.append(f'<circle cx="{x1:.6g}" cy="{sy(y1):.6g}" r="{0.6 * mark:.6g}" fill="{color}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(traj: Trajectory, path, width: int = 640) -> Path:
    path = Path(path)
    path.write_text(svg_text(traj, width=width), encoding="utf-8")
    return path


def build_report(traj: Trajectory, scenario: Scenario, tol: float) -> dict:
    """Run summary: convergence, final shape metrics, the spectral verdict
    of the target shape, and the rigid-motion fit averaged over the tail."""
    law = final_law(scenario)
    final = traj.metrics[-1]
    sides = [float(s) for s in final.spacing]
    if traj.has_closing:
        sides.append(float(final.closing_distance))
    t_conv = None if traj.diverged else convergence_time(traj, tol)

    verdict = None
    if law.mode not in ("gradient3", "mismatched3"):
        verdict = classify(law.spec, scenario.n).verdict

    tail = max(1, len(traj.metrics) // 10)
    fits = [m.rigid_fit for m in traj.metrics[-tail:] if m.rigid_fit is not None]
    rigid = None
    if fits:
        rigid = {
            "v": [float(np.mean([f.v[0] for f in fits])), float(np.mean([f.v[1] for f in fits]))],
            "omega": float(np.mean([f.omega for f in fits])),
            "residual": float(np.max([f.residual for f in fits])),
        }

    angles = [None if math.isnan(a) else float(a) for a in final.angles]
    return {
        "converged": t_conv is not None,
        "convergence_time": t_conv,
        "final_sides": sides,
        "final_angles": angles,
        "e_d_final": float(traj.e_d[-1]) if traj.has_closing else None,
        "verdict": verdict,
        "rigid_fit": rigid,
        "diverged": traj.diverged,
    }
