import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resistive_pricing import (
    AdRevenueVector,
    CostOutOfRange,
    Disconnected,
    NegativeDemand,
    NonPositiveTravelTimeOnArc,
    SelfLoopDemand,
    find_cut_vertices,
    undirected_projection,
    validate_network,
)

from gen import random_connected_network


def three_cycle(cost=0.6):
    demand = np.array([[0, 1.0, 0], [0, 0, 1.0], [1.0, 0, 0]])
    return validate_network(demand, np.ones((3, 3)), cost)


class TestValidation:
    def test_minimal_cycle_is_valid(self):
        net = three_cycle()
        assert net.arcs == ((0, 1), (1, 2), (2, 0))

    def test_two_disjoint_cycles_rejected(self):
        demand = np.zeros((4, 4))
        demand[0, 1] = demand[1, 0] = 1.0
        demand[2, 3] = demand[3, 2] = 1.0
        with pytest.raises(Disconnected):
            validate_network(demand, np.ones((4, 4)), 0.6)

    def test_self_loop_rejected(self):
        demand = np.array([[0.5, 1.0], [1.0, 0]])
        with pytest.raises(SelfLoopDemand):
            validate_network(demand, np.ones((2, 2)), 0.6)

    def test_negative_demand_rejected(self):
        demand = np.array([[0, -1.0], [1.0, 0]])
        with pytest.raises(NegativeDemand):
            validate_network(demand, np.ones((2, 2)), 0.6)

    def test_bad_travel_time_on_arc_rejected(self):
        demand = np.array([[0, 1.0], [1.0, 0]])
        travel = np.array([[1.0, 0.0], [1.0, 1.0]])
        with pytest.raises(NonPositiveTravelTimeOnArc):
            validate_network(demand, travel, 0.6)

    def test_travel_time_off_arc_ignored(self):
        demand = np.array([[0, 1.0], [0, 0]])
        travel = np.array([[1.0, 2.0], [-5.0, np.nan]])
        net = validate_network(demand, travel, 0.6)
        assert net.arcs == ((0, 1),)

    @pytest.mark.parametrize("cost", [-0.1, 1.0, 1.5])
    def test_cost_out_of_range(self, cost):
        demand = np.array([[0, 1.0], [1.0, 0]])
        with pytest.raises(CostOutOfRange):
            validate_network(demand, np.ones((2, 2)), cost)

    def test_immutable(self):
        net = three_cycle()
        with pytest.raises(ValueError):
            net.demand[0, 1] = 5.0


class TestProjection:
    def test_figure_style_projection(self):
        # arcs (1,2),(2,1),(1,3),(3,2) in one-based labels
        demand = np.zeros((3, 3))
        demand[0, 1] = 2.0
        demand[1, 0] = 3.0
        demand[0, 2] = 1.5
        demand[2, 1] = 0.5
        travel = np.ones((3, 3))
        travel[0, 1] = 2.0
        travel[1, 0] = 1.0
        travel[0, 2] = 3.0
        travel[2, 1] = 4.0
        net = validate_network(demand, travel, 0.6)
        w = undirected_projection(net)
        assert w[0, 1] == pytest.approx(2.0 / 2.0 + 3.0 / 1.0)
        assert w[0, 2] == pytest.approx(1.5 / 3.0)
        assert w[1, 2] == pytest.approx(0.5 / 4.0)
        assert np.allclose(w, w.T)

    def test_one_directional_arc_weight(self):
        demand = np.array([[0, 2.0], [0, 0]])
        travel = np.array([[1.0, 4.0], [1.0, 1.0]])
        net = validate_network(demand, travel, 0.6)
        assert undirected_projection(net)[0, 1] == pytest.approx(0.5)

    def test_symmetric_pair_weight(self):
        demand = np.array([[0, 1.0], [1.0, 0]])
        net = validate_network(demand, np.ones((2, 2)), 0.6)
        assert undirected_projection(net)[0, 1] == pytest.approx(2.0)

    @settings(max_examples=30, deadline=None, derandomize=True)
    @given(st.integers(0, 10 ** 6))
    def test_projection_symmetric_positive(self, seed):
        net = random_connected_network(np.random.default_rng(seed))
        w = undirected_projection(net)
        assert np.allclose(w, w.T)
        for i, j in net.arcs:
            assert w[i, j] > 0

    @settings(max_examples=30, deadline=None, derandomize=True)
    @given(st.integers(0, 10 ** 6))
    def test_swap_invariance_with_equal_times(self, seed):
        """Swapping opposing demands leaves the projection unchanged when
        the two travel times agree."""
        rng = np.random.default_rng(seed)
        net = random_connected_network(rng)
        demand = net.demand.copy()
        travel = net.travel_time.copy()
        swapped = False
        for i, j in net.arcs:
            if j > i and demand[j, i] > 0:
                travel[j, i] = travel[i, j]
                demand[i, j], demand[j, i] = demand[j, i], demand[i, j]
                swapped = True
        if not swapped:
            return
        base = validate_network(net.demand, travel, net.unit_cost)
        flipped = validate_network(demand, travel, net.unit_cost)
        assert np.allclose(undirected_projection(base),
                           undirected_projection(flipped))


class TestCutVertices:
    def test_two_triangles_sharing_a_vertex(self):
        demand = np.zeros((5, 5))
        for i, j in [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]:
            demand[i, j] = demand[j, i] = 1.0
        net = validate_network(demand, np.ones((5, 5)), 0.6)
        assert find_cut_vertices(net) == {2}

    def test_complete_graph_has_none(self):
        demand = np.ones((4, 4)) - np.eye(4)
        net = validate_network(demand, np.ones((4, 4)), 0.6)
        assert find_cut_vertices(net) == set()

    def test_path_interior(self):
        demand = np.zeros((3, 3))
        demand[0, 1] = demand[1, 0] = 1.0
        demand[1, 2] = demand[2, 1] = 1.0
        net = validate_network(demand, np.ones((3, 3)), 0.6)
        assert find_cut_vertices(net) == {1}

    @settings(max_examples=25, deadline=None, derandomize=True)
    @given(st.integers(0, 10 ** 6))
    def test_matches_removal_definition(self, seed):
        net = random_connected_network(np.random.default_rng(seed),
                                       n_min=3, n_max=7)
        w = undirected_projection(net)
        n = net.n_locations
        expected = set()
        for v in range(n):
            keep = [u for u in range(n) if u != v]
            sub = w[np.ix_(keep, keep)]
            seen = np.zeros(n - 1, dtype=bool)
            stack = [0]
            seen[0] = True
            while stack:
                u = stack.pop()
                for t in np.flatnonzero(sub[u] > 0):
                    if not seen[t]:
                        seen[t] = True
                        stack.append(int(t))
            if not seen.all():
                expected.add(v)
        assert find_cut_vertices(net) == expected


class TestAdRevenueVector:
    def test_rejects_off_arc_entries(self):
        net = three_cycle()
        values = np.zeros((3, 3))
        values[1, 0] = 0.2  # not an arc
        with pytest.raises(ValueError):
            AdRevenueVector(net, values)

    def test_rejects_negative(self):
        net = three_cycle()
        values = np.zeros((3, 3))
        values[0, 1] = -0.2
        with pytest.raises(ValueError):
            AdRevenueVector(net, values)

    def test_from_arcs(self):
        net = three_cycle()
        a = AdRevenueVector.from_arcs(net, {(0, 1): 0.2})
        assert a.values[0, 1] == 0.2
        with pytest.raises(ValueError):
            AdRevenueVector.from_arcs(net, {(1, 0): 0.2})
