"""Rotation matrices, shape targets, and the formation error signals.

Angle convention: counterclockwise positive, target turn angles in
(-pi, pi], each measured from one relative position z_k to the next.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .topology import Topology, as_stacked

__all__ = [
    "Rotation2",
    "ShapeSpec",
    "ErrorSignal",
    "rot",
    "line_error",
    "scaled_error",
    "polygon_error",
    "build_BW",
    "closing_distance_error",
]


@dataclass(frozen=True)
class Rotation2:
    """A 2D rotation: angle in radians plus its matrix."""

    angle: float
    matrix: np.ndarray


def rot(alpha: float) -> Rotation2:
    """Counterclockwise rotation by ``alpha`` radians."""
    if not math.isfinite(alpha):
        raise ValueError("rotation angle must be finite")
    c, s = math.cos(alpha), math.sin(alpha)
    return Rotation2(angle=alpha, matrix=np.array([[c, -s], [s, c]]))


def _rotate_rows(c, s, vecs: np.ndarray) -> np.ndarray:
    """Rotate each row (x, y) of ``vecs`` by the per-row angles (cos c, sin s)."""
    x, y = vecs[:, 0], vecs[:, 1]
    return np.stack((c * x - s * y, s * x + c * y), axis=1)


@dataclass(frozen=True)
class ShapeSpec:
    """Target shape for an n-agent chain.

    theta: n-2 turn angles in (-pi, pi], or None for a straight line.
    ratios: n-1 positive magnitude ratios between consecutive relative
        positions, or None for unit ratios (equal spacing).
    closing_distance: target distance between the first and last agent,
        or None when the chain is left open.
    """

    theta: np.ndarray | None = None
    ratios: np.ndarray | None = None
    closing_distance: float | None = None

    def __post_init__(self):
        if self.theta is not None:
            theta = np.asarray(self.theta, dtype=float).reshape(-1)
            if not np.all(np.isfinite(theta)):
                raise ValueError("target angles must be finite")
            if np.any(theta <= -np.pi) or np.any(theta > np.pi):
                raise ValueError("target angles must lie in (-pi, pi]")
            object.__setattr__(self, "theta", theta)
        if self.ratios is not None:
            ratios = np.asarray(self.ratios, dtype=float).reshape(-1)
            if np.any(~np.isfinite(ratios)) or np.any(ratios <= 0.0):
                raise ValueError("magnitude ratios must be positive")
            object.__setattr__(self, "ratios", ratios)
        if self.closing_distance is not None and not self.closing_distance > 0.0:
            raise ValueError("closing distance must be positive")

    @classmethod
    def regular(cls, n: int, closing_distance: float | None = None) -> "ShapeSpec":
        """Regular n-gon target: every turn angle equals 2*pi/n."""
        if n < 3:
            raise ValueError("at least three agents required")
        return cls(theta=np.full(n - 2, 2.0 * np.pi / n), closing_distance=closing_distance)

    def theta_for(self, n: int) -> np.ndarray:
        theta = np.zeros(n - 2) if self.theta is None else self.theta
        if theta.size != n - 2:
            raise ValueError(f"expected {n - 2} target angles, got {theta.size}")
        return theta

    def ratios_for(self, n: int) -> np.ndarray:
        ratios = np.ones(n - 1) if self.ratios is None else self.ratios
        if ratios.size != n - 1:
            raise ValueError(f"expected {n - 1} ratios, got {ratios.size}")
        return ratios

    def has_unit_ratios(self) -> bool:
        return self.ratios is None or bool(np.all(self.ratios == 1.0))


@dataclass(frozen=True)
class ErrorSignal:
    """Stacked corner errors (length 2(n-2)) plus the optional distance error."""

    e_theta: np.ndarray
    e_d: float | None = None

    def norm(self) -> float:
        return float(np.linalg.norm(self.e_theta))


def _edge_vectors(z, top: Topology) -> np.ndarray:
    arr = as_stacked(z)
    if arr.size != 2 * (top.n - 1):
        raise ValueError(f"expected {2 * (top.n - 1)} relative-position entries, got {arr.size}")
    return arr.reshape(-1, 2)


def line_error(z, top: Topology) -> ErrorSignal:
    """Difference of consecutive relative positions; zero iff the chain is
    collinear with equal spacing."""
    zz = _edge_vectors(z, top)
    return ErrorSignal(e_theta=(zz[:-1] - zz[1:]).reshape(-1))


def scaled_error(z, top: Topology, ratios) -> ErrorSignal:
    """Ratio-weighted line error: entry k is r_k z_k - r_{k+1} z_{k+1}."""
    zz = _edge_vectors(z, top)
    r = np.asarray(ratios, dtype=float).reshape(-1)
    if r.size != top.n - 1:
        raise ValueError(f"expected {top.n - 1} ratios, got {r.size}")
    if np.any(r <= 0.0):
        raise ValueError("magnitude ratios must be positive")
    rz = r[:, None] * zz
    return ErrorSignal(e_theta=(rz[:-1] - rz[1:]).reshape(-1))


def polygon_error(z, top: Topology, spec: ShapeSpec) -> ErrorSignal:
    """Rotational corner error.

    Entry k compares the half-angle clockwise-rotated r_{k+1} z_{k+1}
    against the half-angle counterclockwise-rotated r_k z_k:

        e_k = W(theta_k / 2) r_k z_k - W(theta_k / 2)^T r_{k+1} z_{k+1}

    Zero (with unit ratios) exactly when z_{k+1} = W(theta_k) z_k, i.e.
    the chain turns by theta_k at every interior agent.
    """
    zz = _edge_vectors(z, top)
    theta = spec.theta_for(top.n)
    rz = spec.ratios_for(top.n)[:, None] * zz
    half = 0.5 * theta
    c, s = np.cos(half), np.sin(half)
    ahead = _rotate_rows(c, s, rz[:-1])
    behind = _rotate_rows(c, -s, rz[1:])
    return ErrorSignal(e_theta=(ahead - behind).reshape(-1))


def build_BW(spec: ShapeSpec, n: int) -> np.ndarray:
    """Block matrix encoding the rotational error: polygon_error(z) == B_W^T z
    entry for entry (with unit ratios).

    Shape 2(n-1) x 2(n-2); block column k carries W(theta_k/2)^T on the
    diagonal block and -W(theta_k/2) below it, so that the transpose
    reproduces the corner error above.  With all angles zero this equals
    the Kronecker-expanded angle incidence matrix.
    """
    if n < 3:
        raise ValueError("at least three agents required")
    theta = spec.theta_for(n)
    bw = np.zeros((2 * (n - 1), 2 * (n - 2)))
    for k in range(n - 2):
        w = rot(0.5 * theta[k]).matrix
        r, col = 2 * k, 2 * k
        bw[r:r + 2, col:col + 2] = w.T
        bw[r + 2:r + 4, col:col + 2] = -w
    return bw


def closing_distance_error(p, d: float) -> tuple[float, float]:
    """Distance error between the chain's endpoints.

    Returns (e_d, e_q): the plain gap ||p_n - p_1|| - d for reporting and
    the quadratic form ||p_n - p_1||^2 - d^2 that drives the scale control.
    """
    if not d > 0.0:
        raise ValueError("closing distance must be positive")
    pts = as_stacked(p).reshape(-1, 2)
    gap = pts[-1] - pts[0]
    sq = float(gap @ gap)
    return float(np.sqrt(sq)) - d, sq - d * d
