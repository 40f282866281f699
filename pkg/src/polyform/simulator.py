"""Deterministic fixed-step simulation of the formation control laws.

A Scenario bundles the initial placement, the control law, integrator
settings, and timed parameter patches.  Runs are bitwise reproducible:
same scenario (including seed), same trajectory.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .control import ControlLaw, MotionParams, formation_error, velocity_field
from .errors import DegenerateConfigurationWarning, IntegrationDiverged
from .geometry import closing_distance_error, rot
from .topology import as_stacked, build_daisy_chain

__all__ = [
    "SeededBox",
    "Event",
    "Scenario",
    "MetricFrame",
    "RigidMotionFit",
    "Trajectory",
    "uniform_positions",
    "initial_positions",
    "apply_patch",
    "step",
    "run",
    "collinearity_residual",
    "realized_angles",
    "fit_rigid_motion",
    "convergence_time",
    "final_law",
    "polygon_chain",
    "perturbed_chain",
]

_MASK64 = (1 << 64) - 1

DEFAULT_DT = 0.005
DEFAULT_TOL = 1e-6


def _splitmix64(seed: int):
    """SplitMix64 stream; the documented placement generator.

    state += 0x9E3779B97F4A7C15; x = state;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB;
    output x ^ (x >> 31).  All arithmetic mod 2^64.
    """
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        x = state
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield x ^ (x >> 31)


def uniform_positions(seed: int, box, n: int) -> np.ndarray:
    """Seeded uniform placement in an axis-aligned box (xmin, xmax, ymin, ymax).

    Draws x1, y1, x2, y2, ... in order; each coordinate maps the top 53
    bits of one SplitMix64 output to [0, 1), so any implementation of the
    generator reproduces the layout exactly.
    """
    xmin, xmax, ymin, ymax = (float(v) for v in box)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("placement box must have positive extent")
    gen = _splitmix64(int(seed))
    out = np.empty(2 * n)
    for i in range(n):
        out[2 * i] = xmin + (next(gen) >> 11) * 2.0 ** -53 * (xmax - xmin)
        out[2 * i + 1] = ymin + (next(gen) >> 11) * 2.0 ** -53 * (ymax - ymin)
    return out


@dataclass(frozen=True)
class SeededBox:
    seed: int
    box: tuple[float, float, float, float]


@dataclass(frozen=True)
class Event:
    """Parameter patch applied at the first step whose time is >= ``time``.

    Patches may touch d, c, k_d, motion_params, or mismatches; never
    positions.
    """

    time: float
    patch: dict


@dataclass(frozen=True)
class Scenario:
    n: int
    initial: np.ndarray | SeededBox
    law: ControlLaw
    t_end: float
    dt: float = DEFAULT_DT
    method: str = "rk4"
    events: tuple[Event, ...] = ()
    record_every: int = 1

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("at least three agents required")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if not isinstance(self.initial, SeededBox):
            object.__setattr__(self, "initial", as_stacked(self.initial, self.n))
        events = tuple(self.events)
        times = [e.time for e in events]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        if any(t < 0.0 or t > self.t_end for t in times):
            raise ValueError("event times must lie within [0, t_end]")
        object.__setattr__(self, "events", events)


def initial_positions(scenario: Scenario) -> np.ndarray:
    if isinstance(scenario.initial, SeededBox):
        return uniform_positions(scenario.initial.seed, scenario.initial.box, scenario.n)
    return scenario.initial.copy()


_PATCHABLE = ("d", "c", "k_d", "motion_params", "mismatches")


def apply_patch(law: ControlLaw, patch: dict, n: int) -> ControlLaw:
    """New law with the event's parameters swapped in."""
    for key in patch:
        if key not in _PATCHABLE:
            raise ValueError(f"events may only patch {_PATCHABLE}, got {key!r}")
    out = law
    if "d" in patch:
        if law.spec.closing_distance is None:
            raise ValueError("cannot patch d: law does not control a closing distance")
        out = out.with_closing_distance(float(patch["d"]))
    if "c" in patch:
        out = replace(out, c=float(patch["c"]))
    if "k_d" in patch:
        out = replace(out, k_d=float(patch["k_d"]))
    if "motion_params" in patch:
        value = patch["motion_params"]
        motion = MotionParams.uniform(n, value) if np.isscalar(value) else MotionParams(np.asarray(value))
        out = replace(out, motion=motion)
    if "mismatches" in patch:
        mu1, mu2 = patch["mismatches"]
        out = replace(out, mismatches=(float(mu1), float(mu2)))
    return out


def step(p, law: ControlLaw, dt: float, method: str = "rk4", t: float | None = None) -> np.ndarray:
    """One deterministic integrator step of the kinematic agents."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    p = as_stacked(p)
    if method == "euler":
        nxt = p + dt * velocity_field(p, law)
    elif method == "rk4":
        k1 = velocity_field(p, law)
        k2 = velocity_field(p + 0.5 * dt * k1, law)
        k3 = velocity_field(p + 0.5 * dt * k2, law)
        k4 = velocity_field(p + dt * k3, law)
        nxt = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    if not np.all(np.isfinite(nxt)):
        raise IntegrationDiverged(t)
    return nxt


@dataclass(frozen=True)
class RigidMotionFit:
    v: np.ndarray        # translational velocity
    omega: float         # angular rate about the centroid
    residual: float      # RMS misfit speed


@dataclass(frozen=True)
class MetricFrame:
    collinearity_residual: float
    spacing: np.ndarray            # ||z_k|| per edge
    angles: np.ndarray             # signed consecutive turn angles (NaN if undefined)
    closing_distance: float        # ||p_1 - p_n||
    centroid: np.ndarray
    rigid_fit: RigidMotionFit | None


@dataclass
class Trajectory:
    n: int
    times: np.ndarray
    positions: np.ndarray          # one stacked position row per sample
    e_theta_norm: np.ndarray
    e_d: np.ndarray                # NaN throughout when no closing edge
    metrics: list[MetricFrame]
    has_closing: bool
    diverged: bool = False
    diverged_time: float | None = None

    def final_positions(self) -> np.ndarray:
        return self.positions[-1]


def collinearity_residual(p) -> float:
    """Largest orthogonal distance from any agent to the total-least-squares
    line through the agent set; zero for collinear input."""
    pts = as_stacked(p).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise ValueError("need at least two agents")
    centered = pts - pts.mean(axis=0)
    if not np.any(centered != 0.0):
        warnings.warn("all agents coincident: best-fit line undefined",
                      DegenerateConfigurationWarning, stacklevel=2)
        return 0.0
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return float(np.max(np.abs(centered @ vt[-1])))


def _angles_raw(zz: np.ndarray) -> np.ndarray:
    a, b = zz[:-1], zz[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    ang = np.arctan2(cross, dot)
    ang[ang <= -np.pi] = np.pi  # keep the (-pi, pi] convention
    return ang


def realized_angles(z) -> np.ndarray:
    """Signed turn angle from each relative position to the next."""
    zz = as_stacked(z).reshape(-1, 2)
    norms = np.hypot(zz[:, 0], zz[:, 1])
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ValueError(f"angle undefined: relative position {bad + 1} has zero length")
    return _angles_raw(zz)


def fit_rigid_motion(p, u) -> RigidMotionFit:
    """Least-squares rigid-motion decomposition of a velocity field.

    Fits u_i = v + omega * S (p_i - centroid) with S the quarter turn;
    closed form v = mean(u), omega = sum((S q_i) . u_i) / sum(||q_i||^2).
    """
    pts = as_stacked(p).reshape(-1, 2)
    vel = as_stacked(u).reshape(-1, 2)
    if pts.shape != vel.shape:
        raise ValueError("positions and velocities must pair up")
    if pts.shape[0] < 2:
        raise ValueError("need at least two agents")
    q = pts - pts.mean(axis=0)
    denom = float(np.sum(q * q))
    if denom == 0.0:
        raise ValueError("agents coincident: rotation rate undefined")
    sq = np.stack((-q[:, 1], q[:, 0]), axis=1)
    v = vel.mean(axis=0)
    omega = float(np.sum(sq * vel)) / denom
    misfit = vel - v - omega * sq
    residual = float(np.sqrt(np.mean(np.sum(misfit * misfit, axis=1))))
    return RigidMotionFit(v=v, omega=omega, residual=residual)


def _metric_frame(pts: np.ndarray, u: np.ndarray) -> MetricFrame:
    zz = pts[:-1] - pts[1:]
    norms = np.hypot(zz[:, 0], zz[:, 1])
    if np.any(norms == 0.0):
        angles = np.full(len(zz) - 1, np.nan)
    else:
        angles = _angles_raw(zz)
    q = pts - pts.mean(axis=0)
    if np.any(q != 0.0):
        fit = fit_rigid_motion(pts, u)
        res = collinearity_residual(pts)
    else:
        fit = None
        res = 0.0
    return MetricFrame(
        collinearity_residual=res,
        spacing=norms,
        angles=angles,
        closing_distance=float(np.hypot(*(pts[-1] - pts[0]))),
        centroid=pts.mean(axis=0),
        rigid_fit=fit,
    )


def run(scenario: Scenario) -> Trajectory:
    """Integrate the scenario, applying each event at the first step whose
    time reaches it.  Samples are decimated by record_every but always
    include the exact initial and final states."""
    top = build_daisy_chain(scenario.n)
    law = scenario.law
    p = initial_positions(scenario)
    dt = scenario.dt
    n_steps = max(1, int(round(scenario.t_end / dt)))
    has_closing = law.spec.closing_distance is not None

    times: list[float] = []
    rows: list[np.ndarray] = []
    eth: list[float] = []
    ed: list[float] = []
    frames: list[MetricFrame] = []

    def record(t: float, p: np.ndarray, law: ControlLaw) -> None:
        pts = p.reshape(-1, 2)
        z = (pts[:-1] - pts[1:]).reshape(-1)
        times.append(t)
        rows.append(p.copy())
        eth.append(formation_error(z, top, law).norm())
        if law.spec.closing_distance is not None:
            ed.append(abs(closing_distance_error(p, law.spec.closing_distance)[0]))
        else:
            ed.append(np.nan)
        frames.append(_metric_frame(pts, velocity_field(p, law).reshape(-1, 2)))

    diverged = False
    diverged_time: float | None = None
    ei = 0
    recorded_step = -1
    for k in range(n_steps):
        t = k * dt
        while ei < len(scenario.events) and scenario.events[ei].time <= t:
            law = apply_patch(law, scenario.events[ei].patch, scenario.n)
            ei += 1
        if k % scenario.record_every == 0:
            record(t, p, law)
            recorded_step = k
        try:
            p = step(p, law, dt, scenario.method, t=t)
        except IntegrationDiverged as exc:
            diverged = True
            diverged_time = exc.time
            if recorded_step != k:
                record(t, p, law)
            break
    if not diverged:
        t = n_steps * dt
        while ei < len(scenario.events) and scenario.events[ei].time <= t:
            law = apply_patch(law, scenario.events[ei].patch, scenario.n)
            ei += 1
        record(t, p, law)

    return Trajectory(
        n=scenario.n,
        times=np.asarray(times),
        positions=np.asarray(rows),
        e_theta_norm=np.asarray(eth),
        e_d=np.asarray(ed),
        metrics=frames,
        has_closing=has_closing,
        diverged=diverged,
        diverged_time=diverged_time,
    )


def final_law(scenario: Scenario) -> ControlLaw:
    """The law with every event patch applied, as in effect at t_end."""
    law = scenario.law
    for event in scenario.events:
        law = apply_patch(law, event.patch, scenario.n)
    return law


def convergence_time(traj: Trajectory, tol: float = DEFAULT_TOL) -> float | None:
    """First sample time after which the recorded error norms stay below
    ``tol`` through the end of the run; None if they never settle."""
    if not tol > 0.0:
        raise ValueError("tolerance must be positive")
    ok = traj.e_theta_norm < tol
    if traj.has_closing:
        ok &= traj.e_d < tol
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    first = 0 if bad.size == 0 else int(bad[-1]) + 1
    return float(traj.times[first])


def polygon_chain(n: int, theta, side: float = 1.0, start=(0.0, 0.0), direction: float = 0.0) -> np.ndarray:
    """Positions of a chain whose consecutive relative positions turn by
    the given angles with equal side length: an exact corner-error zero."""
    theta = np.full(n - 2, float(theta)) if np.isscalar(theta) else np.asarray(theta, dtype=float)
    if theta.size != n - 2:
        raise ValueError(f"expected {n - 2} turn angles, got {theta.size}")
    z = np.empty((n - 1, 2))
    z[0] = side * np.array([math.cos(direction), math.sin(direction)])
    for k in range(n - 2):
        z[k + 1] = rot(theta[k]).matrix @ z[k]
    pts = np.empty((n, 2))
    pts[0] = start
    for k in range(n - 1):
        pts[k + 1] = pts[k] - z[k]
    return pts.reshape(-1)


def perturbed_chain(n: int, theta, seed: int, error_norm: float = 1.0, side: float = 1.0) -> np.ndarray:
    """Equilibrium chain plus a seeded interior perturbation, rescaled so
    the rotational corner error norm equals ``error_norm`` exactly
    (the error is linear in positions)."""
    from .geometry import ShapeSpec, polygon_error

    base = polygon_chain(n, theta, side=side)
    rng = np.random.default_rng(seed)
    delta = np.zeros(2 * n)
    delta[2:-2] = rng.uniform(-0.5, 0.5, size=2 * (n - 2))
    top = build_daisy_chain(n)
    spec = ShapeSpec(theta=np.full(n - 2, float(theta)) if np.isscalar(theta) else theta)
    probe = base + delta
    pts = probe.reshape(-1, 2)
    z = (pts[:-1] - pts[1:]).reshape(-1)
    norm = polygon_error(z, top, spec).norm()
    if norm == 0.0:
        raise ValueError("perturbation produced no corner error")
    return base + (error_norm / norm) * delta
