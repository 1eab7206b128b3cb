"""Traffic network representation: validated demand/travel-time matrices.

A network is a directed graph over ``N`` locations.  An arc (i, j) exists
exactly where the demand matrix is positive.  Travel times are read only on
arcs; entries elsewhere are ignored.  All objects here are immutable after
construction and safe to share across workers.
"""

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class NetworkValidationError(ValueError):
    """Base class for structured rejections of raw network input."""


class NegativeDemand(NetworkValidationError):
    pass


class NonPositiveTravelTimeOnArc(NetworkValidationError):
    pass


class SelfLoopDemand(NetworkValidationError):
    pass


class Disconnected(NetworkValidationError):
    pass


class CostOutOfRange(NetworkValidationError):
    pass


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TrafficNetwork:
    """Directed traffic network over ``n_locations`` locations.

    Attributes:
        n_locations: number of locations N (>= 2).
        demand: (N, N) non-negative user mass per time slot; zero diagonal.
            Positive entries define the arc set.
        travel_time: (N, N) travel time in slots; must be positive and finite
            on arcs, ignored elsewhere.
        unit_cost: per-user per-slot service cost, in [0, 1).
    """

    n_locations: int
    demand: np.ndarray
    travel_time: np.ndarray
    unit_cost: float
    arcs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        n = self.n_locations
        demand = _frozen_array(self.demand)
        travel_time = _frozen_array(self.travel_time)
        if demand.ndim != 2 or demand.shape != (n, n):
            raise NetworkValidationError(
                f"demand must be ({n}, {n}), got {demand.shape}")
        if travel_time.shape != (n, n):
            raise NetworkValidationError(
                f"travel_time must be ({n}, {n}), got {travel_time.shape}")
        if n < 2:
            raise NetworkValidationError("need at least 2 locations")
        if not np.all(np.isfinite(demand)):
            raise NetworkValidationError("demand entries must be finite")
        if np.any(demand < 0):
            bad = np.argwhere(demand < 0)[0]
            raise NegativeDemand(
                f"demand[{bad[0]}, {bad[1]}] = {demand[bad[0], bad[1]]} < 0")
        if np.any(np.diag(demand) != 0):
            i = int(np.argmax(np.diag(demand) != 0))
            raise SelfLoopDemand(f"demand[{i}, {i}] must be 0")
        cost = float(self.unit_cost)
        if not np.isfinite(cost) or cost < 0 or cost >= 1:
            raise CostOutOfRange(f"unit_cost must lie in [0, 1), got {cost}")

        arc_mask = demand > 0
        if not arc_mask.any():
            raise Disconnected("network has no arcs")
        on_arcs = travel_time[arc_mask]
        if np.any(~np.isfinite(on_arcs)) or np.any(on_arcs <= 0):
            bad = [tuple(ij) for ij in np.argwhere(arc_mask)
                   if not (np.isfinite(travel_time[tuple(ij)])
                           and travel_time[tuple(ij)] > 0)][0]
            raise NonPositiveTravelTimeOnArc(
                f"travel_time{bad} must be positive and finite on arc {bad}")

        weights = projection_weights(demand, travel_time)
        if not _is_connected(weights):
            raise Disconnected(
                "induced graph is not weakly connected; "
                "split into components and solve each separately")

        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "travel_time", travel_time)
        object.__setattr__(self, "unit_cost", cost)
        arcs = tuple((int(i), int(j)) for i, j in np.argwhere(arc_mask))
        object.__setattr__(self, "arcs", arcs)

    @property
    def arc_array(self) -> np.ndarray:
        """(M, 2) int array of arcs in lexicographic order."""
        return np.array(self.arcs, dtype=int)

    @property
    def arc_demand(self) -> np.ndarray:
        idx = self.arc_array
        return self.demand[idx[:, 0], idx[:, 1]]

    @property
    def arc_time(self) -> np.ndarray:
        idx = self.arc_array
        return self.travel_time[idx[:, 0], idx[:, 1]]

    def has_arc(self, i: int, j: int) -> bool:
        return self.demand[i, j] > 0

    def on_arcs(self, matrix: np.ndarray) -> np.ndarray:
        """Extract per-arc values from an (N, N) matrix, arc order."""
        idx = self.arc_array
        return np.asarray(matrix)[idx[:, 0], idx[:, 1]]


def validate_network(demand, travel_time, unit_cost: float) -> TrafficNetwork:
    """Validate raw matrices and build a TrafficNetwork.

    Raises a :class:`NetworkValidationError` subclass naming the violated
    invariant (NegativeDemand, NonPositiveTravelTimeOnArc, SelfLoopDemand,
    Disconnected, CostOutOfRange).
    """
    demand = np.asarray(demand, dtype=float)
    if demand.ndim != 2 or demand.shape[0] != demand.shape[1]:
        raise NetworkValidationError("demand must be a square matrix")
    return TrafficNetwork(
        n_locations=demand.shape[0],
        demand=demand,
        travel_time=np.asarray(travel_time, dtype=float),
        unit_cost=unit_cost,
    )


def projection_weights(demand: np.ndarray,
                       travel_time: np.ndarray,
                       arc_mask: np.ndarray | None = None) -> np.ndarray:
    """Symmetric edge-weight matrix of the undirected projection.

    Weight(i, j) = demand[i, j] / time[i, j] + demand[j, i] / time[j, i],
    with absent arcs contributing zero.  ``arc_mask`` optionally zeroes
    out arcs (used for masked electrical networks).
    """
    demand = np.asarray(demand, dtype=float)
    if arc_mask is not None:
        demand = np.where(arc_mask, demand, 0.0)
    ratio = np.zeros_like(demand)
    live = demand > 0
    ratio[live] = demand[live] / np.asarray(travel_time, dtype=float)[live]
    return ratio + ratio.T


def undirected_projection(net: TrafficNetwork) -> np.ndarray:
    """Edge weights of the undirected projection of a validated network.

    Entry (i, j) is positive iff at least one of the arcs (i, j), (j, i)
    carries demand; the matrix is symmetric with zero diagonal.
    """
    return projection_weights(net.demand, net.travel_time)


def _adjacency_lists(weights: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(weights[i] > 0) for i in range(weights.shape[0])]


def _is_connected(weights: np.ndarray) -> bool:
    n = weights.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    adj = _adjacency_lists(weights)
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                stack.append(int(w))
    return bool(seen.all())


def connected_components(weights: np.ndarray) -> list[np.ndarray]:
    """Connected components (sorted node arrays) of a weight matrix."""
    n = weights.shape[0]
    seen = np.zeros(n, dtype=bool)
    adj = _adjacency_lists(weights)
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    comp.append(int(w))
                    stack.append(int(w))
        comps.append(np.array(sorted(comp), dtype=int))
    return comps


def find_cut_vertices(net: TrafficNetwork) -> set[int]:
    """Articulation points of the undirected projection.

    Iterative Hopcroft-Tarjan DFS; a vertex is returned exactly when its
    removal disconnects the projection.
    """
    weights = undirected_projection(net)
    n = net.n_locations
    adj = _adjacency_lists(weights)
    disc = np.full(n, -1, dtype=int)
    low = np.zeros(n, dtype=int)
    parent = np.full(n, -1, dtype=int)
    cut: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        root_children = 0
        stack: list[tuple[int, int]] = [(root, 0)]
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            u, ptr = stack[-1]
            if ptr < len(adj[u]):
                stack[-1] = (u, ptr + 1)
                w = int(adj[u][ptr])
                if disc[w] == -1:
                    parent[w] = u
                    disc[w] = low[w] = timer
                    timer += 1
                    if u == root:
                        root_children += 1
                    stack.append((w, 0))
                elif w != parent[u]:
                    low[u] = min(low[u], disc[w])
            else:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    low[p] = min(low[p], low[u])
                    if p != root and low[u] >= disc[p]:
                        cut.add(p)
        if root_children > 1:
            cut.add(root)
    return cut


@dataclass(frozen=True)
class AdRevenueVector:
    """Per-arc unit ad revenue (dollars per user per slot).

    Values live in an (N, N) matrix that must be zero off the arc set of
    ``network`` and non-negative on it.
    """

    network: TrafficNetwork
    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values)
        n = self.network.n_locations
        if values.shape != (n, n):
            raise ValueError(f"ad revenue matrix must be ({n}, {n})")
        if not np.all(np.isfinite(values)):
            raise ValueError("ad revenues must be finite")
        arc_mask = self.network.demand > 0
        if np.any(values[~arc_mask] != 0):
            raise ValueError("ad revenue defined off the arc set")
        if np.any(values[arc_mask] < 0):
            raise ValueError("ad revenues must be non-negative")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, net: TrafficNetwork) -> "AdRevenueVector":
        return cls(net, np.zeros((net.n_locations, net.n_locations)))

    @classmethod
    def from_arcs(cls, net: TrafficNetwork,
                  entries: Mapping[tuple[int, int], float]) -> "AdRevenueVector":
        values = np.zeros((net.n_locations, net.n_locations))
        for (i, j), val in entries.items():
            if not net.has_arc(i, j):
                raise ValueError(f"({i}, {j}) is not an arc")
            values[i, j] = val
        return cls(net, values)


def ad_matrix(net: TrafficNetwork, a) -> np.ndarray:
    """Coerce an ad-revenue argument to a plain (N, N) array.

    Accepts an AdRevenueVector, an (N, N) array, or None (all zeros).
    Only shape is checked here; sign/off-arc validation belongs to
    AdRevenueVector construction.
    """
    n = net.n_locations
    if a is None:
        return np.zeros((n, n))
    if isinstance(a, AdRevenueVector):
        return a.values
    arr = np.asarray(a, dtype=float)
    if arr.shape != (n, n):
        raise ValueError(f"ad revenue matrix must be ({n}, {n})")
    return arr
