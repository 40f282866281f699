"""Control laws as pure velocity fields u = f(p).

Modes:
    gradient3    three-agent distance control (gradient of the quartic
                 distance potential, unit gain)
    mismatched3  gradient3 plus deliberate distance mismatches on agent 2
    line         interior agents chase the (optionally ratio-weighted)
                 line error; endpoints hold still
    polygon      interior agents chase the rotational corner error
    closed_polygon  polygon plus endpoint distance control (chain closed)
    steered      closed_polygon plus per-agent motion parameters that add
                 a rigid-body steady-state velocity

The scale term uses gradient descent on the closing-distance potential:
endpoints approach when too far apart and separate when too close.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateConfigurationWarning
from .geometry import ErrorSignal, ShapeSpec, line_error, polygon_error, scaled_error
from .topology import Topology, as_stacked, build_daisy_chain

__all__ = [
    "MotionParams",
    "PositionAnchor",
    "ControlLaw",
    "MODES",
    "gradient_law_3",
    "mismatched_law_3",
    "deployment_law",
    "scale_law",
    "steering_law",
    "velocity_field",
    "formation_error",
]

MODES = ("gradient3", "mismatched3", "line", "polygon", "closed_polygon", "steered")


@dataclass(frozen=True)
class MotionParams:
    """Per-agent coefficient pairs on the two relative vectors each agent
    can sense; they shape the steady-state rigid-body velocity."""

    coeffs: np.ndarray  # shape (n, 2)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[1] != 2:
            raise ValueError("motion parameters must be n pairs")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("motion parameters must be finite")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def uniform(cls, n: int, mu: float) -> "MotionParams":
        """All 2n coefficients equal; on a closed regular polygon this
        produces a pure spin about the centroid."""
        return cls(np.full((n, 2), float(mu)))


@dataclass(frozen=True)
class PositionAnchor:
    """Optional position feedback on the endpoint agents (pins the
    steady-state orientation). Off unless attached to a ControlLaw."""

    gain: float
    first_target: np.ndarray
    last_target: np.ndarray

    def __post_init__(self):
        if not self.gain > 0.0:
            raise ValueError("anchor gain must be positive")
        object.__setattr__(self, "first_target", np.asarray(self.first_target, dtype=float).reshape(2))
        object.__setattr__(self, "last_target", np.asarray(self.last_target, dtype=float).reshape(2))


@dataclass(frozen=True)
class ControlLaw:
    mode: str
    c: float = 1.0
    k_d: float = 1.0
    spec: ShapeSpec = field(default_factory=ShapeSpec)
    distances: tuple[float, float] | None = None    # gradient3 / mismatched3
    mismatches: tuple[float, float] | None = None   # mismatched3
    motion: MotionParams | None = None              # steered
    pin_last: bool = False                          # scale term moves agent 1 only
    anchor: PositionAnchor | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown control mode {self.mode!r}")
        if not self.c > 0.0:
            raise ValueError("deployment gain c must be positive")
        if not self.k_d > 0.0:
            raise ValueError("scale gain k_d must be positive")

    def with_closing_distance(self, d: float) -> "ControlLaw":
        return replace(self, spec=replace(self.spec, closing_distance=float(d)))


def _three_agent_edges(p) -> tuple[np.ndarray, np.ndarray]:
    pts = as_stacked(p).reshape(-1, 2)
    if pts.shape[0] != 3:
        raise ValueError("this law is defined for exactly three agents")
    return pts[0] - pts[1], pts[1] - pts[2]


def gradient_law_3(p, d1: float, d2: float) -> np.ndarray:
    """Distance-potential gradient descent for a three-agent chain."""
    if not (d1 > 0.0 and d2 > 0.0):
        raise ValueError("desired distances must be positive")
    z1, z2 = _three_agent_edges(p)
    e1 = float(z1 @ z1) - d1 * d1
    e2 = float(z2 @ z2) - d2 * d2
    u = np.empty(6)
    u[0:2] = -z1 * e1
    u[2:4] = z1 * e1 - z2 * e2
    u[4:6] = z2 * e2
    return u


def mismatched_law_3(p, d1: float, d2: float, mu1: float, mu2: float,
                     include_distance_terms: bool = True) -> np.ndarray:
    """Three-agent gradient law with distance mismatches assigned to the
    middle agent.  With ``include_distance_terms=False`` only the mismatch
    term remains, which for mu1 == mu2 is the equal-spacing alignment law."""
    z1, z2 = _three_agent_edges(p)
    if include_distance_terms:
        u = gradient_law_3(p, d1, d2)
    else:
        u = np.zeros(6)
    u[2:4] += mu1 * z1 - mu2 * z2
    return u


def formation_error(z, top: Topology, law: ControlLaw) -> ErrorSignal:
    """The corner error a law drives: line/scaled for mode ``line`` (and
    the three-agent modes, where it is diagnostic), rotational otherwise."""
    if law.mode in ("gradient3", "mismatched3", "line"):
        if law.mode == "line" and not law.spec.has_unit_ratios():
            return scaled_error(z, top, law.spec.ratios_for(top.n))
        return line_error(z, top)
    return polygon_error(z, top, law.spec)


def deployment_law(p, law: ControlLaw) -> np.ndarray:
    """Interior agents move with gain c along their corner error; the two
    endpoint agents stay put."""
    pts = as_stacked(p).reshape(-1, 2)
    n = pts.shape[0]
    top = build_daisy_chain(n)
    z = (pts[:-1] - pts[1:]).reshape(-1)
    err = formation_error(z, top, law)
    u = np.zeros(2 * n)
    u[2:-2] = law.c * err.e_theta
    return u


def scale_law(p, d: float, k_d: float = 1.0, pin_last: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint velocity pair closing the chain at distance ``d``.

    Descent on the closing-distance potential: with e_q = ||p_n - p_1||^2 - d^2,
    agent 1 moves by +k_d e_q (p_n - p_1) and agent n by the negative, so the
    endpoints approach when too far and separate when too close.  With
    ``pin_last`` only agent 1 moves.  Coincident endpoints with e_q != 0 give
    zero velocities and a DegenerateConfigurationWarning (the gradient
    vanishes at the undesired coincident point).
    """
    if not d > 0.0:
        raise ValueError("closing distance must be positive")
    if not k_d > 0.0:
        raise ValueError("scale gain k_d must be positive")
    pts = as_stacked(p).reshape(-1, 2)
    gap = pts[-1] - pts[0]
    e_q = float(gap @ gap) - d * d
    if not np.any(gap != 0.0) and e_q != 0.0:
        warnings.warn("coincident endpoints: scale gradient vanishes away from the target",
                      DegenerateConfigurationWarning, stacklevel=2)
        return np.zeros(2), np.zeros(2)
    v_first = k_d * e_q * gap
    v_last = np.zeros(2) if pin_last else -v_first
    return v_first, v_last


def steering_law(p, law: ControlLaw) -> np.ndarray:
    """Full closed-chain law: corner errors, scale control, and the motion
    parameters that superimpose a rigid-body steady-state velocity."""
    if law.motion is None:
        raise ValueError("steered mode requires motion parameters")
    pts = as_stacked(p).reshape(-1, 2)
    n = pts.shape[0]
    mu = law.motion.coeffs
    if mu.shape[0] != n:
        raise ValueError(f"expected {n} motion-parameter pairs, got {mu.shape[0]}")
    u = deployment_law(p, law)
    u = _add_scale_term(u, pts, law)
    z = pts[:-1] - pts[1:]
    gap = pts[-1] - pts[0]
    u[0:2] += mu[0, 0] * gap + mu[0, 1] * z[0]
    u[2:-2] += (mu[1:-1, 0:1] * z[:-1] + mu[1:-1, 1:2] * z[1:]).reshape(-1)
    u[-2:] += mu[-1, 0] * gap + mu[-1, 1] * z[-1]
    return _add_anchor_term(u, pts, law)


def _add_scale_term(u: np.ndarray, pts: np.ndarray, law: ControlLaw) -> np.ndarray:
    d = law.spec.closing_distance
    if d is None:
        raise ValueError("closed-chain mode requires a closing distance")
    v_first, v_last = scale_law(pts, d, law.k_d, law.pin_last)
    u[0:2] += v_first
    u[-2:] += v_last
    return u


def _add_anchor_term(u: np.ndarray, pts: np.ndarray, law: ControlLaw) -> np.ndarray:
    if law.anchor is not None:
        u[0:2] += law.anchor.gain * (law.anchor.first_target - pts[0])
        u[-2:] += law.anchor.gain * (law.anchor.last_target - pts[-1])
    return u


def velocity_field(p, law: ControlLaw) -> np.ndarray:
    """Evaluate the law's stacked velocities at ``p``. Pure function."""
    if law.mode == "gradient3":
        if law.distances is None:
            raise ValueError("gradient3 mode requires the two desired distances")
        return gradient_law_3(p, *law.distances)
    if law.mode == "mismatched3":
        if law.distances is None or law.mismatches is None:
            raise ValueError("mismatched3 mode requires distances and mismatches")
        return mismatched_law_3(p, *law.distances, *law.mismatches)
    if law.mode in ("line", "polygon"):
        return deployment_law(p, law)
    if law.mode == "closed_polygon":
        pts = as_stacked(p).reshape(-1, 2)
        u = deployment_law(p, law)
        u = _add_scale_term(u, pts, law)
        return _add_anchor_term(u, pts, law)
    return steering_law(p, law)
