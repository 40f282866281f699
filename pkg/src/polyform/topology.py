"""Daisy-chain topologies and their incidence-matrix algebra.

Agents carry 1-based labels; edge k connects agent k (tail) to agent k+1
(head), so the sensed relative position on edge k is p_k - p_{k+1}.
Stacked 2D vectors interleave coordinates as (x1, y1, x2, y2, ...).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Topology",
    "build_daisy_chain",
    "incidence_matrix",
    "angle_incidence_matrix",
    "kron2",
    "relative_positions",
    "as_stacked",
]


@dataclass(frozen=True)
class Topology:
    """Open chain of ``n`` agents with the n-1 directed edges (k, k+1)."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("at least three agents required")
        expected = tuple((k, k + 1) for k in range(1, self.n))
        if tuple(self.edges) != expected:
            raise ValueError("edges must form the open chain 1-2-...-n")

    @property
    def n_edges(self) -> int:
        return self.n - 1


def build_daisy_chain(n: int) -> Topology:
    """Chain 1-2-...-n. Rejects n < 3 (no interior agent to steer)."""
    if n < 3:
        raise ValueError("at least three agents required")
    return Topology(n=n, edges=tuple((k, k + 1) for k in range(1, n)))


def _chain_incidence(rows: int) -> np.ndarray:
    cols = rows - 1
    b = np.zeros((rows, cols))
    idx = np.arange(cols)
    b[idx, idx] = 1.0      # tails
    b[idx + 1, idx] = -1.0  # heads
    return b


def incidence_matrix(top: Topology) -> np.ndarray:
    """Vertex-by-edge incidence matrix, shape (n, n-1).

    Column k holds +1 at the tail (agent k) and -1 at the head (agent k+1).
    """
    return _chain_incidence(top.n)


def angle_incidence_matrix(top: Topology) -> np.ndarray:
    """Edge-by-corner incidence matrix, shape (n-1, n-2).

    Same chain pattern one level up: column k couples edge k with edge k+1,
    which is the pair of relative positions meeting at agent k+1.
    """
    return _chain_incidence(top.n - 1)


def kron2(m: np.ndarray) -> np.ndarray:
    """Expand a node/edge matrix to act on stacked 2D vectors (M ⊗ I2)."""
    return np.kron(np.asarray(m, dtype=float), np.eye(2))


def as_stacked(p, n: int | None = None) -> np.ndarray:
    """Coerce positions to a flat float array (x1, y1, ..., xn, yn)."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.size % 2 != 0:
        raise ValueError(f"stacked 2D vector must have even length, got {arr.size}")
    if n is not None and arr.size != 2 * n:
        raise ValueError(f"expected {2 * n} entries for {n} agents, got {arr.size}")
    return arr


def relative_positions(top: Topology, p) -> np.ndarray:
    """Stacked relative positions z, with z_k = p_k - p_{k+1} per edge."""
    pts = as_stacked(p, top.n).reshape(-1, 2)
    return (pts[:-1] - pts[1:]).reshape(-1)
