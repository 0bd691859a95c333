"""Walk spectrum, stationary distribution, lazification, and mixing length.

The walk matrix A = D^{-1} C shares its spectrum with the symmetric matrix
D^{-1/2} C D^{-1/2}, which is what gets eigensolved. Adding a self-loop of
capacity d_x at every vertex halves and shifts the spectrum ((1 + w)/2) and
removes the bipartite -1 eigenvalue; the stationary distribution is unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import GraphInputError
from .graph import Graph
from .validation import check_connected


def stationary_distribution(graph: Graph) -> np.ndarray:
    """pi_x = d_x / sum_y d_y; the left fixed point of the walk matrix."""
    d = graph.degree_array
    total = d.sum()
    if total <= 0:
        raise GraphInputError("graph has no capacity; stationary distribution undefined")
    if (d <= 0).any():
        raise GraphInputError("isolated vertex: stationary distribution undefined")
    return d / total


@dataclass(frozen=True)
class SpectralProfile:
    """Walk spectrum summary for one graph, plus the routing walk length k.

    lambda_value = max(lambda2, |lambda_n|) for the graph itself; lambda_bar is the
    value after the lazify-or-not choice (equal to lambda_value of the chosen graph).
    k is None until a mixing length has been assigned.
    """

    pi: np.ndarray
    pi_min: float
    pi_max: float
    lambda2: float
    lambda_n: float
    lambda_value: float
    lambda_bar: float
    lazified: bool
    k: int | None = None

    def to_json(self) -> dict:
        return {
            "lambda2": self.lambda2,
            "lambdaN": self.lambda_n,
            "lambda": self.lambda_value,
            "lambda_bar": self.lambda_bar,
            "lazified": self.lazified,
            "pi_min": self.pi_min,
            "pi_max": self.pi_max,
            "k": self.k,
        }


def walk_eigenvalues(graph: Graph) -> np.ndarray:
    """All eigenvalues of the walk matrix, ascending, clipped to [-1, 1]."""
    d = graph.degree_array
    if (d <= 0).any():
        raise GraphInputError("walk spectrum needs positive degrees")
    inv_sqrt = 1.0 / np.sqrt(d)
    sym = inv_sqrt[:, None] * graph.capacity_matrix * inv_sqrt[None, :]
    w = scipy.linalg.eigh(sym, eigvals_only=True)
    return np.clip(w, -1.0, 1.0)


def spectral(graph: Graph) -> SpectralProfile:
    """Spectral profile of a connected graph with at least two vertices."""
    if graph.n < 2:
        raise GraphInputError("spectral profile needs n >= 2")
    check_connected(graph)
    pi = stationary_distribution(graph)
    w = walk_eigenvalues(graph)
    lambda2 = float(w[-2])
    lambda_n = float(w[0])
    lam = max(lambda2, abs(lambda_n))
    return SpectralProfile(
        pi=pi,
        pi_min=float(pi.min()),
        pi_max=float(pi.max()),
        lambda2=lambda2,
        lambda_n=lambda_n,
        lambda_value=lam,
        lambda_bar=lam,
        lazified=False,
        k=None,
    )


def lazify(graph: Graph) -> Graph:
    """Attach a self-loop of capacity d_x at every vertex (walk matrix becomes (I+A)/2)."""
    if graph.has_loops:
        raise GraphInputError("graph already carries self-loops")
    return graph.with_loops(graph.degrees)


def lazify_if_needed(graph: Graph) -> tuple[Graph, SpectralProfile]:
    """Return the graph (original or lazified) with the strictly smaller lambda_value.

    Ties keep the original. For a connected graph the winner always has
    lambda_bar < 1, since the lazy spectrum is nonnegative with lambda2' < 1.
    """
    base = spectral(graph)
    lazy_graph = lazify(graph)
    lazy = spectral(lazy_graph)
    if lazy.lambda_value < base.lambda_value:
        return lazy_graph, replace(lazy, lazified=True)
    return graph, base


def mixing_steps(lambda_bar: float, pi_min: float) -> int:
    """Smallest integer k >= 1 with lambda_bar**k <= pi_min / 2."""
    if not (0.0 < pi_min <= 1.0):
        raise GraphInputError(f"pi_min must lie in (0, 1], got {pi_min}")
    if lambda_bar >= 1.0:
        raise GraphInputError("lambda_bar must be below 1 (connected graph, lazified if bipartite)")
    if lambda_bar < 0.0:
        raise GraphInputError("lambda_bar is a magnitude and cannot be negative")
    if lambda_bar == 0.0:
        return 1
    quotient = math.log(pi_min / 2.0) / math.log(lambda_bar)
    # nudge guards against 4.0000000000000004-style float noise before ceil
    return max(1, math.ceil(quotient - 1e-9))


def routing_profile(graph: Graph) -> tuple[Graph, SpectralProfile]:
    """Lazify if that shrinks the spectrum, then fix the walk length k."""
    routed, profile = lazify_if_needed(graph)
    k = mixing_steps(profile.lambda_bar, profile.pi_min)
    return routed, replace(profile, k=k)


def walk_power(v, A, steps: int) -> np.ndarray:
    """Distribution after `steps` walk steps: v A^steps."""
    vec = np.asarray(v, dtype=float)
    mat = np.asarray(A, dtype=float)
    if vec.ndim != 1 or mat.shape != (vec.size, vec.size):
        raise ValueError("walk_power expects v of length n and an n x n matrix")
    if steps < 0:
        raise ValueError("step count must be nonnegative")
    for _ in range(steps):
        vec = vec @ mat
    return vec
