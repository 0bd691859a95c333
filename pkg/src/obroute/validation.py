"""Input validation helpers shared by estimators, simulators and the CLI."""

from __future__ import annotations

from typing import Any

import numpy as np

from .errors import DemandError, DisconnectedGraphError, SimulationError


def check_connected(graph) -> None:
    if not graph.is_connected:
        raise DisconnectedGraphError("graph must be connected")


def check_square_matrix(M: Any, n: int | None = None, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DemandError(f"{name} must be square, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DemandError(f"{name} has {arr.shape[0]} rows, expected {n}")
    if not np.isfinite(arr).all():
        raise DemandError(f"{name} contains non-finite entries")
    return arr


def check_demands(D: Any, n: int) -> np.ndarray:
    """Validate an n x n demand matrix: nonnegative, finite, zero diagonal."""
    arr = check_square_matrix(D, n, name="demand matrix")
    if (arr < 0).any():
        raise DemandError("demand matrix has negative entries")
    if np.diagonal(arr).any():
        raise DemandError("demand matrix must have a zero diagonal")
    return arr


def check_nonnegative_vector(v: Any, n: int, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise ValueError(f"{name} must be finite and nonnegative")
    return arr


def check_probability_vector(v: Any, n: int, tol: float = 1e-9) -> np.ndarray:
    arr = check_nonnegative_vector(v, n, name="probability vector")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"probability vector sums to {total}, expected 1 within {tol}")
    return arr


def check_permutation(sigma: Any, n: int) -> np.ndarray:
    arr = np.asarray(sigma)
    if arr.shape != (n,) or not np.issubdtype(arr.dtype, np.integer):
        try:
            arr = np.asarray(sigma, dtype=int)
        except (TypeError, ValueError) as exc:
            raise SimulationError("permutation must be a length-n integer sequence") from exc
    if arr.shape != (n,):
        raise SimulationError(f"permutation must have length {n}, got {arr.shape}")
    if sorted(arr.tolist()) != list(range(n)):
        raise SimulationError("permutation is not a bijection on [0, n)")
    return arr.astype(int)


def check_seed(seed: Any) -> int:
    if seed is None:
        raise ValueError("a seed is required for randomized operations")
    value = int(seed)
    if value < 0:
        raise ValueError("seed must be a non-negative integer")
    return value
