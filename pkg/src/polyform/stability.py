"""Spectral stability analysis of the corner-error dynamics.

Along a deployment run the stacked corner error obeys a linear system
whose matrix is the product of the error-encoding block matrix and the
expanded angle incidence matrix.  For a uniform turn angle that matrix
has a closed-form spectrum, which yields the stability bound
|theta*| <= 2*pi/(n-1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ShapeSpec, build_BW
from .topology import angle_incidence_matrix, build_daisy_chain, kron2

__all__ = [
    "StabilityReport",
    "assemble_A",
    "assemble_C",
    "closed_form_eigs",
    "numerical_eigs",
    "stability_bound",
    "regular_polygon_angle",
    "classify",
    "MARGINAL_TOL",
]

# Real parts within this band of zero count as marginal: well above
# eigensolver error, well below any eigenvalue gap at desk scale.
MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class StabilityReport:
    n: int
    theta: np.ndarray
    eigenvalues: np.ndarray       # complex spectrum of the error matrix
    min_real: float
    bound: float                  # uniform-angle stability bound 2*pi/(n-1)
    verdict: str                  # stable | marginal | unstable
    closed_form: np.ndarray | None = None  # present for uniform angle, unit ratios

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "theta": [float(t) for t in self.theta],
            "eigenvalues": [[float(v.real), float(v.imag)] for v in self.eigenvalues],
            "min_real": self.min_real,
            "bound": self.bound,
            "verdict": self.verdict,
            "closed_form": None if self.closed_form is None
            else [float(v) for v in self.closed_form],
        }


def assemble_A(spec: ShapeSpec, n: int) -> np.ndarray:
    """Error-dynamics matrix, assembled as the product of the error
    encoding and the expanded angle incidence matrix (never transcribed
    from a block display), so it is consistent with the simulated
    dynamics by construction.  Ratios enter as a diagonal edge weighting.
    Shape 2(n-2) square.
    """
    top = build_daisy_chain(n)
    bw = build_BW(spec, n)
    btheta = kron2(angle_incidence_matrix(top))
    ratios = spec.ratios_for(n)
    if spec.has_unit_ratios():
        return bw.T @ btheta
    return bw.T @ (np.repeat(ratios, 2)[:, None] * btheta)


def assemble_C(theta_star: float, n: int) -> np.ndarray:
    """Complex tridiagonal Toeplitz reduction for a uniform turn angle.

    (n-2) square, diagonal 2*cos(theta*/2), superdiagonal -exp(j*theta*/2),
    subdiagonal its conjugate.  Hermitian, so its spectrum is real and
    matches the closed form below.
    """
    if n < 3:
        raise ValueError("at least three agents required")
    m = n - 2
    w = np.exp(1j * theta_star / 2.0)
    c = np.zeros((m, m), dtype=complex)
    np.fill_diagonal(c, 2.0 * np.cos(theta_star / 2.0))
    idx = np.arange(m - 1)
    c[idx, idx + 1] = -w
    c[idx + 1, idx] = -np.conj(w)
    return c


def closed_form_eigs(theta_star: float, n: int) -> np.ndarray:
    """Analytical spectrum for a uniform turn angle, descending:

        lambda_k = 2*cos(theta*/2) + 2*cos(k*pi/(n-1)),  k = 1..n-2

    Each value appears twice in the full error matrix.
    """
    if n < 3:
        raise ValueError("at least three agents required")
    k = np.arange(1, n - 1)
    return 2.0 * np.cos(theta_star / 2.0) + 2.0 * np.cos(k * np.pi / (n - 1))


def numerical_eigs(m: np.ndarray) -> np.ndarray:
    """Dense nonsymmetric spectrum via LAPACK's QR-based solver."""
    m = np.asarray(m, dtype=complex if np.iscomplexobj(m) else float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("eigenvalue input must be a square matrix")
    if m.shape[0] > 256:
        raise ValueError("matrix larger than the supported size (256)")
    return np.linalg.eigvals(m)


def stability_bound(n: int) -> float:
    """Largest uniform |turn angle| with a nonnegative spectrum: 2*pi/(n-1)."""
    if n < 3:
        raise ValueError("at least three agents required")
    return 2.0 * np.pi / (n - 1)


def regular_polygon_angle(n: int) -> float:
    """Common turn angle of a regular n-gon traversal, 2*pi/n; always
    strictly inside the stability bound."""
    if n < 3:
        raise ValueError("at least three agents required")
    return 2.0 * np.pi / n


def classify(spec: ShapeSpec, n: int, tol: float = MARGINAL_TOL) -> StabilityReport:
    """Spectral verdict for a shape target.

    The verdict comes from the numerical spectrum's smallest real part;
    the closed form is attached when it applies (uniform angles, unit
    ratios).  Exactly at the bound the slowest mode sits at zero, which
    classifies as marginal rather than stable.
    """
    theta = spec.theta_for(n)
    a = assemble_A(spec, n)
    eigs = numerical_eigs(a)
    min_real = float(np.min(eigs.real))
    if min_real > tol:
        verdict = "stable"
    elif min_real >= -tol:
        verdict = "marginal"
    else:
        verdict = "unstable"
    closed = None
    if theta.size > 0 and np.all(theta == theta[0]) and spec.has_unit_ratios():
        closed = closed_form_eigs(float(theta[0]), n)
    return StabilityReport(
        n=n,
        theta=theta,
        eigenvalues=eigs,
        min_real=min_real,
        bound=stability_bound(n),
        verdict=verdict,
        closed_form=closed,
    )
