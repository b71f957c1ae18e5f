"""The consensus subspace, its projector, and the disagreement projector.

The consensus subspace is the line of constant vectors; the projector onto
it has all entries 1/n, and the disagreement projector is its orthogonal
complement.  The complement is materialized as a dense matrix for the
operator-algebra checks and applied via the O(n) closed form (subtract the
coordinate mean) in hot paths; the two must agree to 1e-12.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Projector onto the constant-vector line and its orthogonal complement."""

    n: int
    pi: np.ndarray
    pi_perp: np.ndarray
    v0: np.ndarray


def make_projections(n: int) -> ProjectionPair:
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    pi = np.full((n, n), 1.0 / n)
    pi_perp = np.eye(n) - pi
    v0 = np.full(n, 1.0 / np.sqrt(n))
    for arr in (pi, pi_perp, v0):
        arr.setflags(write=False)
    return ProjectionPair(n=n, pi=pi, pi_perp=pi_perp, v0=v0)


def disagreement(x: np.ndarray, proj: ProjectionPair) -> np.ndarray:
    """Project x onto the zero-sum complement: subtract the coordinate mean."""
    x = np.asarray(x, dtype=float)
    if x.shape != (proj.n,):
        raise ValueError(f"expected vector of length {proj.n}, got shape {x.shape}")
    return x - x.mean()


def diameter(x: np.ndarray) -> float:
    """Largest pairwise coordinate difference: max minus min."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"expected nonempty vector, got shape {x.shape}")
    return float(x.max() - x.min())
