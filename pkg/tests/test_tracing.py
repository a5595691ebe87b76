"""Backward-characteristic point evaluation against the exact evolutions."""

import random
from fractions import Fraction as F

import pytest

import oracles
from netflow import (
    MetricGraph,
    NetworkState,
    SparseVector,
    VelocityProfile,
    build_adjacency,
    evolve_rational,
    evolve_unit,
    sample,
    trace_samples,
    trace_value,
)


def g2():
    return MetricGraph.finite(
        [(1, 1, 2), (2, 2, 1)], {(1, 2): F(1), (2, 1): F(1)}, name="g2"
    )


def g5():
    edges = [(1, 1, 2), (2, 2, 3), (3, 2, 4), (4, 3, 1), (5, 4, 1)]
    weights = {
        (2, 1): F(1, 2), (3, 1): F(1, 2),
        (4, 2): F(1), (5, 3): F(1),
        (1, 4): F(1), (1, 5): F(1),
    }
    return MetricGraph.finite(edges, weights, name="g5")


def random_state(rng, edges, pieces=5):
    cuts = sorted({F(rng.randrange(1, 36), 36) for _ in range(pieces - 1)})
    bps = [F(0)] + cuts + [F(1)]
    vals = [
        SparseVector({j: F(rng.randrange(-6, 7), 3) for j in edges})
        for _ in range(len(bps) - 1)
    ]
    return NetworkState(bps, vals)


class TestTraceValue:
    def test_short_time_is_a_shift(self):
        f = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({1: F(2)}), SparseVector({1: F(5)})],
        )
        vel = VelocityProfile({1: F(1), 2: F(1)})
        assert trace_value(g2(), vel, f, 1, F(1, 4), F(1, 8)) == 2
        assert trace_value(g2(), vel, f, 1, F(1, 4), F(3, 8)) == 5

    def test_vertex_routing(self):
        # after crossing, the value comes from the feeder's head history
        f = NetworkState.constant(SparseVector({1: F(1)}))
        vel = VelocityProfile({1: F(1), 2: F(1)})
        assert trace_value(g2(), vel, f, 2, F(3, 4), F(1, 2)) == 1
        assert trace_value(g2(), vel, f, 2, F(1, 4), F(1, 2)) == 0

    def test_velocity_conjugated_weights(self):
        # crossing into a slower edge scales the value by c_feeder / c_edge
        f = NetworkState.constant(SparseVector({1: F(1)}))
        vel = VelocityProfile({1: F(2), 2: F(1)})
        assert trace_value(g2(), vel, f, 2, F(7, 8), F(1, 4)) == 2

    def test_seam_sides(self):
        f = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({1: F(1)}), SparseVector({1: F(3)})],
        )
        vel = VelocityProfile({1: F(1), 2: F(1)})
        # backward foot lands exactly on the interior breakpoint
        assert trace_value(g2(), vel, f, 1, F(1, 4), F(1, 4)) == 3
        assert trace_value(g2(), vel, f, 1, F(1, 4), F(1, 4), side="left") == 1

    def test_domain_checks(self):
        f = NetworkState.constant(SparseVector({1: F(1)}))
        vel = VelocityProfile({1: F(1), 2: F(1)})
        with pytest.raises(ValueError):
            trace_value(g2(), vel, f, 1, F(1, 2), F(-1))
        with pytest.raises(ValueError):
            trace_value(g2(), vel, f, 1, F(3, 2), F(1))
        with pytest.raises(ValueError):
            trace_value(g2(), vel, f, 1, F(1, 2), F(1), side="middle")

    def test_agrees_with_independent_crawler(self):
        g = g5()
        vel = VelocityProfile({1: F(2), 2: F(1), 3: F(1, 2), 4: F(3, 2), 5: F(1)})
        f = random_state(random.Random(2), (1, 2, 3, 4, 5))
        for j in g.edge_ids:
            for k in range(7):
                x = F(2 * k + 1, 14)
                assert trace_value(g, vel, f, j, x, F(5, 4)) == oracles.crawl(
                    g, vel, f, j, x, F(5, 4)
                )

    def test_irrational_velocity_accepted(self):
        vel = VelocityProfile({1: 2 ** 0.5, 2: 3 ** 0.5})
        f = NetworkState.constant(SparseVector({1: F(1)}))
        v = trace_value(g2(), vel, f, 2, 0.9, 0.1)
        # the crossing happened: value scaled by c1/c2
        assert v == pytest.approx((2 / 3) ** 0.5)


class TestTraceSamples:
    def test_matches_unit_evolution_on_grid(self):
        g = g5()
        vel = VelocityProfile({j: F(1) for j in g.edge_ids})
        f = random_state(random.Random(7), (1, 2, 3, 4, 5))
        t = F(3, 4)
        exact = sample(evolve_unit(build_adjacency(g), f, t), 60)
        traced = trace_samples(g, vel, f, t, 60)
        assert traced.distance(exact) == 0

    def test_matches_rational_evolution_on_grid(self):
        g = g2()
        vel = VelocityProfile({1: F(2), 2: F(1)})
        f = random_state(random.Random(8), (1, 2))
        for t in (F(0), F(1, 3), F(7, 6)):
            exact = sample(evolve_rational(g, vel, f, t), 48)
            traced = trace_samples(g, vel, f, t, 48)
            assert traced.distance(exact) == 0

    def test_edge_subset(self):
        g = g5()
        vel = VelocityProfile({j: F(1) for j in g.edge_ids})
        f = NetworkState.constant(SparseVector({1: F(1)}))
        traced = trace_samples(g, vel, f, F(1, 2), 10, edges=[2])
        assert traced.support() <= {2}

    def test_grid_check(self):
        vel = VelocityProfile({1: F(1), 2: F(1)})
        with pytest.raises(ValueError):
            trace_samples(g2(), vel, NetworkState.zero(), F(1), 0)
