"""Acceptance suite: the release-gating checks.

Each criterion is a standalone callable returning (passed, detail); the
CLI ``verify`` command and the pytest suite both execute this registry,
so there is exactly one implementation of every check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .control import ControlLaw, MotionParams, deployment_law, mismatched_law_3, scale_law, velocity_field
from .geometry import ShapeSpec, line_error, polygon_error
from .scenario import bundled_scenario_path, load_scenario
from .simulator import (
    Scenario,
    Trajectory,
    final_law,
    perturbed_chain,
    run,
    uniform_positions,
)
from .stability import classify, closed_form_eigs, stability_bound
from .topology import build_daisy_chain
from .output import csv_text

__all__ = ["CriterionResult", "REGISTRY", "run_criterion", "run_all"]


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float | None


_hexagon_cache: tuple[Scenario, Trajectory] | None = None


def hexagon_run() -> tuple[Scenario, Trajectory]:
    """The bundled hexagon scenario, simulated once and shared."""
    global _hexagon_cache
    if _hexagon_cache is None:
        scenario = load_scenario(bundled_scenario_path("hexagon.json"))
        _hexagon_cache = (scenario, run(scenario))
    return _hexagon_cache


def _spec_uniform(n: int, theta_star: float) -> ShapeSpec:
    return ShapeSpec(theta=np.full(n - 2, theta_star))


def criterion_eigenvalue_oracle() -> tuple[bool, str]:
    """Numerical spectrum of the error matrix == closed form, doubled."""
    worst = 0.0
    from .stability import assemble_A, numerical_eigs

    for n in range(3, 13):
        for theta in np.linspace(-np.pi, np.pi, 26)[1:]:
            expected = np.sort(np.repeat(closed_form_eigs(theta, n), 2))
            got = numerical_eigs(assemble_A(_spec_uniform(n, theta), n))
            dev = max(float(np.max(np.abs(np.sort(got.real) - expected))),
                      float(np.max(np.abs(got.imag))))
            worst = max(worst, dev)
    return worst <= 1e-9, f"max eigenvalue deviation {worst:.3e} over n=3..12 x 25 angles"


def _bound_run(n: int, factor: float, seed: int) -> tuple[float, Trajectory]:
    theta = factor * stability_bound(n)
    spec = _spec_uniform(n, theta)
    lam_max = float(np.max(closed_form_eigs(theta, n)))
    dt = 2.5 / lam_max
    scenario = Scenario(
        n=n,
        initial=perturbed_chain(n, theta, seed=seed, error_norm=1.0),
        law=ControlLaw(mode="polygon", c=1.0, spec=spec),
        t_end=2000 * dt,
        dt=dt,
        record_every=2000,
    )
    report = classify(spec, n)
    return report.min_real, run(scenario)


def criterion_stability_bound() -> tuple[bool, str]:
    """Spectrum sign and simulated decay/growth on both sides of the bound."""
    problems = []
    for n in range(4, 11):
        min_real, traj = _bound_run(n, 0.95, seed=1000 + n)
        if not (min_real > 0.0):
            problems.append(f"n={n}: min_real {min_real:.3e} not positive below bound")
        if not (traj.e_theta_norm[-1] < 1e-6):
            problems.append(f"n={n}: stable run settled at {traj.e_theta_norm[-1]:.3e}")
        min_real, traj = _bound_run(n, 1.05, seed=2000 + n)
        if not (min_real < 0.0):
            problems.append(f"n={n}: min_real {min_real:.3e} not negative above bound")
        if not (traj.e_theta_norm[-1] > traj.e_theta_norm[0]):
            problems.append(f"n={n}: unstable run decayed")
    return not problems, "; ".join(problems) or "7 agent counts, both sides of the bound"


_LINE_WINDOWS = {3: (14.0, 2.0, 7.0), 5: (48.0, 10.0, 30.0), 8: (135.0, 40.0, 90.0)}


def criterion_line_deployment() -> tuple[bool, str]:
    """Collinear equally spaced limit with the path-graph decay rate."""
    problems = []
    details = []
    for n, (t_end, w0, w1) in _LINE_WINDOWS.items():
        scenario = Scenario(
            n=n,
            initial=uniform_positions(40 + n, (0.0, 10.0, 0.0, 10.0), n),
            law=ControlLaw(mode="line", c=1.0),
            t_end=t_end,
            dt=0.05,
            record_every=10,
        )
        traj = run(scenario)
        final = traj.metrics[-1]
        if not (final.collinearity_residual < 1e-8):
            problems.append(f"n={n}: collinearity residual {final.collinearity_residual:.3e}")
        spread = float(np.ptp(final.spacing))
        if not (spread < 1e-8):
            problems.append(f"n={n}: spacing spread {spread:.3e}")
        lam_min = 2.0 - 2.0 * np.cos(np.pi / (n - 1))
        mask = (traj.times >= w0) & (traj.times <= w1)
        slope = float(np.polyfit(traj.times[mask], np.log(traj.e_theta_norm[mask]), 1)[0])
        rel = abs(slope + lam_min) / lam_min
        details.append(f"n={n}: slope {slope:.5f} vs -{lam_min:.5f}")
        if not (rel < 0.05):
            problems.append(f"n={n}: decay slope off by {100 * rel:.2f}%")
    return not problems, "; ".join(problems or details)


def criterion_ratio_control() -> tuple[bool, str]:
    """Ratio-weighted line deployment reaches the prescribed magnitudes."""
    n = 5
    ratios = np.array([1.0, 2.0, 1.0, 2.0])
    scenario = Scenario(
        n=n,
        initial=uniform_positions(4040, (0.0, 10.0, 0.0, 10.0), n),
        law=ControlLaw(mode="line", c=1.0, spec=ShapeSpec(ratios=ratios)),
        t_end=40.0,
        dt=0.05,
        record_every=100,
    )
    traj = run(scenario)
    pts = traj.positions[-1].reshape(-1, 2)
    z = pts[:-1] - pts[1:]
    weighted = ratios[:, None] * z
    pair_err = float(np.max(np.linalg.norm(weighted[:-1] - weighted[1:], axis=1)))
    norms = np.linalg.norm(z, axis=1)
    ratio_err = float(np.max(np.abs(norms[:-1] / norms[1:] - ratios[1:] / ratios[:-1])))
    ok = pair_err < 1e-8 and ratio_err < 1e-6
    return ok, f"max weighted-pair error {pair_err:.3e}, max magnitude-ratio error {ratio_err:.3e}"


def criterion_hexagon() -> tuple[bool, str]:
    """The six-agent hexagon: sides and angles at the rescaling event and
    the rescaled sides at the end."""
    _, traj = hexagon_run()
    if traj.diverged:
        return False, "hexagon run diverged"
    idx = int(np.argmin(np.abs(traj.times - 150.0)))
    at150 = traj.metrics[idx]
    sides_150 = np.append(at150.spacing, at150.closing_distance)
    angles_150 = at150.angles
    final = traj.metrics[-1]
    sides_end = np.append(final.spacing, final.closing_distance)
    side_err_150 = float(np.max(np.abs(sides_150 - 10.0)))
    angle_err_150 = float(np.max(np.abs(angles_150 - np.pi / 3.0)))
    side_err_end = float(np.max(np.abs(sides_end - 30.0)))
    ok = side_err_150 < 1e-3 and angle_err_150 < 1e-4 and side_err_end < 1e-3
    return ok, (f"t=150: sides within {side_err_150:.2e} of 10, angles within "
                f"{angle_err_150:.2e} of pi/3; t=300: sides within {side_err_end:.2e} of 30")


def criterion_spin() -> tuple[bool, str]:
    """Converged hexagon velocities form a pure spin about a fixed centroid."""
    scenario, traj = hexagon_run()
    if traj.diverged:
        return False, "hexagon run diverged"
    law = final_law(scenario)
    tail = np.flatnonzero(traj.times >= traj.times[-1] - 30.0)
    fits = [traj.metrics[i].rigid_fit for i in tail]
    problems = []
    omegas = []
    for i, fit in zip(tail, fits):
        p = traj.positions[i]
        u = velocity_field(p, law)
        rms_u = float(np.sqrt(np.mean(np.sum(u.reshape(-1, 2) ** 2, axis=1))))
        pts = p.reshape(-1, 2)
        radius = float(np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1)))
        if not (fit.residual < 1e-4 * rms_u):
            problems.append(f"residual {fit.residual:.3e} vs {1e-4 * rms_u:.3e}")
        if not (np.linalg.norm(fit.v) < 1e-4 * abs(fit.omega) * radius):
            problems.append(f"|v| {np.linalg.norm(fit.v):.3e} too large")
        omegas.append(fit.omega)
    windows = np.array_split(np.asarray(omegas), 4)
    means = np.array([w.mean() for w in windows])
    cv = float(np.std(means) / np.abs(np.mean(means)))
    if not (cv < 0.01):
        problems.append(f"omega coefficient of variation {cv:.3e}")
    drift = float(np.linalg.norm(traj.metrics[tail[-1]].centroid - traj.metrics[tail[0]].centroid))
    if not (drift < 1e-3):
        problems.append(f"centroid drift {drift:.3e}")
    detail = f"omega {np.mean(means):.6f}, cv {cv:.2e}, centroid drift {drift:.2e}"
    return not problems, "; ".join(problems) or detail


def criterion_error_dynamics() -> tuple[bool, str]:
    """Finite differences of the corner error reproduce the linear error
    system with first-order convergence in dt."""
    from .stability import assemble_A

    n, theta = 6, np.pi / 3.0
    spec = _spec_uniform(n, theta)
    top = build_daisy_chain(n)
    a = assemble_A(spec, n)
    c = 1.0
    residuals = []
    dts = (1e-2, 5e-3, 2.5e-3)
    for dt in dts:
        scenario = Scenario(
            n=n,
            initial=perturbed_chain(n, theta, seed=77, error_norm=1.0),
            law=ControlLaw(mode="polygon", c=c, spec=spec),
            t_end=2.0,
            dt=dt,
            record_every=1,
        )
        traj = run(scenario)
        errs = []
        for row in traj.positions:
            pts = row.reshape(-1, 2)
            z = (pts[:-1] - pts[1:]).reshape(-1)
            errs.append(polygon_error(z, top, spec).e_theta)
        errs = np.asarray(errs)
        fd = (errs[1:] - errs[:-1]) / dt
        target = -c * errs[:-1] @ a.T
        residuals.append(float(np.max(np.abs(fd - target))))
    order = float(np.polyfit(np.log(dts), np.log(residuals), 1)[0])
    ok = order >= 0.9
    return ok, f"residuals {['%.3e' % r for r in residuals]}, observed order {order:.3f}"


def criterion_scale_sign() -> tuple[bool, str]:
    """Endpoints separate below the target distance, approach above it,
    and their midpoint never moves."""
    problems = []
    for start, label in ((1.0, "from 1"), (3.0, "from 3")):
        p = np.array([0.0, 0.0, start, 0.0])
        mid0 = np.array([p[0] + p[2], p[1] + p[3]]) / 2.0
        dists = [abs(p[2] - p[0])]
        dt, d = 0.002, 2.0

        def field(q):
            v1, v2 = scale_law(q, d=d, k_d=1.0)
            return np.concatenate([v1, v2])

        for _ in range(1500):
            k1 = field(p)
            k2 = field(p + 0.5 * dt * k1)
            k3 = field(p + 0.5 * dt * k2)
            k4 = field(p + dt * k3)
            p = p + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            dists.append(float(np.hypot(p[2] - p[0], p[3] - p[1])))
        dists = np.asarray(dists)
        inside = np.abs(dists - d) < 1e-6
        if not inside[-1]:
            problems.append(f"{label}: ended at distance {dists[-1]:.9f}")
            continue
        settle = int(np.argmax(inside))
        diffs = np.diff(dists[: settle + 1])
        monotone = np.all(diffs > 0.0) if start < d else np.all(diffs < 0.0)
        if not monotone:
            problems.append(f"{label}: distance not strictly monotone before settling")
        if not np.all(inside[settle:]):
            problems.append(f"{label}: left the 1e-6 band after settling")
        mid = np.array([p[0] + p[2], p[1] + p[3]]) / 2.0
        if not (np.linalg.norm(mid - mid0) <= 1e-9):
            problems.append(f"{label}: midpoint drifted {np.linalg.norm(mid - mid0):.3e}")
    return not problems, "; ".join(problems) or "both directions monotone, midpoint fixed"


def criterion_reductions() -> tuple[bool, str]:
    """Exact floating-point reduction identities on random configurations."""
    rng = np.random.default_rng(99)
    problems = []
    for trial in range(100):
        n = 3 + trial % 6
        top = build_daisy_chain(n)
        z = rng.uniform(-5.0, 5.0, 2 * (n - 1))
        zero_spec = ShapeSpec(theta=np.zeros(n - 2))
        a = polygon_error(z, top, zero_spec).e_theta
        b = line_error(z, top).e_theta
        if not np.array_equal(a, b):
            problems.append(f"trial {trial}: zero-angle reduction differs")
            break
    for trial in range(100):
        n = 4 + trial % 5
        p = rng.uniform(-5.0, 5.0, 2 * n)
        spec = ShapeSpec(
            theta=rng.uniform(-1.0, 1.0, n - 2),
            ratios=rng.uniform(0.5, 2.0, n - 1),
            closing_distance=float(rng.uniform(0.5, 3.0)),
        )
        steered = ControlLaw(mode="steered", c=1.5, k_d=0.7, spec=spec,
                             motion=MotionParams(np.zeros((n, 2))))
        closed = ControlLaw(mode="closed_polygon", c=1.5, k_d=0.7, spec=spec)
        u_steer = velocity_field(p, steered)
        u_sum = deployment_law(p, closed)
        v1, v2 = scale_law(p, spec.closing_distance, 0.7)
        u_sum[0:2] += v1
        u_sum[-2:] += v2
        if not np.array_equal(u_steer, u_sum):
            problems.append(f"trial {trial}: zero-motion steering differs from deployment+scale")
            break
    for trial in range(100):
        c = float(2.0 ** rng.integers(-1, 3))
        p = rng.uniform(-5.0, 5.0, 6)
        top3 = build_daisy_chain(3)
        u = mismatched_law_3(p, 1.0, 1.0, c, c, include_distance_terms=False)
        pts = p.reshape(-1, 2)
        z = (pts[:-1] - pts[1:]).reshape(-1)
        expected = c * line_error(z, top3).e_theta
        if not (np.array_equal(u[2:4], expected) and np.array_equal(u[0:2], [0.0, 0.0])
                and np.array_equal(u[4:6], [0.0, 0.0])):
            problems.append(f"trial {trial}: mismatch alignment differs from scaled line error")
            break
    return not problems, "; ".join(problems) or "3 identities x 100 configurations, exact equality"


def criterion_determinism() -> tuple[bool, str]:
    """Rerunning the bundled hexagon scenario reproduces the CSV bytes."""
    scenario, first = hexagon_run()
    second = run(scenario)
    same = csv_text(first) == csv_text(second)
    return same, "byte-identical CSV" if same else "CSV outputs differ between reruns"


REGISTRY = (
    ("C01", "eigenvalue-oracle", 5.0, criterion_eigenvalue_oracle),
    ("C02", "stability-bound-both-directions", 30.0, criterion_stability_bound),
    ("C03", "line-deployment", 10.0, criterion_line_deployment),
    ("C04", "ratio-control", None, criterion_ratio_control),
    ("C05", "hexagon-experiment", 10.0, criterion_hexagon),
    ("C06", "spin-about-centroid", None, criterion_spin),
    ("C07", "error-dynamics-consistency", None, criterion_error_dynamics),
    ("C08", "scale-law-sign", None, criterion_scale_sign),
    ("C09", "reduction-identities", None, criterion_reductions),
    ("C10", "determinism", None, criterion_determinism),
)


def run_criterion(cid: str, name: str, budget: float | None, func) -> CriterionResult:
    start = time.perf_counter()
    try:
        passed, detail = func()
    except Exception as exc:  # a crash is a failure, not an abort
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    if passed and budget is not None and elapsed >= budget:
        passed = False
        detail = f"over time budget: {elapsed:.2f}s >= {budget:.0f}s ({detail})"
    return CriterionResult(cid=cid, name=name, passed=passed, detail=detail,
                           elapsed=elapsed, budget=budget)


def run_all(echo=print) -> list[CriterionResult]:
    results = []
    for cid, name, budget, func in REGISTRY:
        result = run_criterion(cid, name, budget, func)
        results.append(result)
        status = "PASS" if result.passed else "FAIL"
        echo(f"{result.cid} {result.name:<32} {status} {result.elapsed:7.2f}s  {result.detail}")
    return results
