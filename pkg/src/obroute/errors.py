"""Domain exceptions raised across the package."""


class GraphInputError(ValueError):
    """Malformed graph input: bad vertex ids, nonpositive capacity, self-edges, parse errors."""


class DisconnectedGraphError(ValueError):
    """Operation requires a connected graph."""


class DemandError(ValueError):
    """Malformed demand matrix: wrong shape, negative entries, nonzero diagonal."""


class BudgetExceededError(RuntimeError):
    """Instance exceeds the exact-solver size budget."""


class SimulationError(ValueError):
    """Invalid packet-routing input: non-bijective permutation or paths not valid in the graph."""
