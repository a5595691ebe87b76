"""Exact transport evolution: unit, subdivided rational, and absorbing."""

import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from netflow import (
    AbsorptionProfile,
    MetricGraph,
    NetworkState,
    PrecisionError,
    SparseVector,
    VelocityProfile,
    WidthOverflowError,
    WrongOperatorError,
    build_adjacency,
    common_multiplier,
    evolve_absorbing,
    evolve_rational,
    evolve_unit,
    lift_state,
    project_state,
    sample,
    subdivide,
    sup_norm,
    total_mass,
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


def pulse_e1():
    return NetworkState.constant(SparseVector({1: F(1)}))


def random_state(rng, edges, pieces=6):
    cuts = sorted({F(rng.randrange(1, 48), 48) for _ in range(pieces - 1)})
    bps = [F(0)] + cuts + [F(1)]
    vals = [
        SparseVector({j: F(rng.randrange(-6, 7), 3) for j in edges})
        for _ in range(len(bps) - 1)
    ]
    return NetworkState(bps, vals)


rational_times = st.fractions(min_value=0, max_value=3, max_denominator=12)


class TestEvolveUnit:
    def test_time_one_is_routing(self):
        out = evolve_unit(build_adjacency(g2()), pulse_e1(), F(1))
        assert out == NetworkState.constant(SparseVector({2: F(1)}))

    def test_half_step_splits(self):
        out = evolve_unit(build_adjacency(g2()), pulse_e1(), F(1, 2))
        want = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({1: F(1)}), SparseVector({2: F(1)})],
        )
        assert out == want

    def test_identity_at_zero(self):
        rng = random.Random(3)
        f = random_state(rng, (1, 2, 3, 4, 5))
        assert evolve_unit(build_adjacency(g5()), f, F(0)) == f

    @given(rational_times, rational_times, st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_semigroup_law(self, t, s, seed):
        op = build_adjacency(g5())
        f = random_state(random.Random(seed), (1, 2, 3, 4, 5), pieces=4)
        two_step = evolve_unit(op, evolve_unit(op, f, s), t)
        assert two_step == evolve_unit(op, f, t + s)

    @given(rational_times, st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_contraction_and_mass(self, t, seed):
        op = build_adjacency(g5())
        f = random_state(random.Random(seed), (1, 2, 3, 4, 5), pieces=4)
        out = evolve_unit(op, f, t)
        assert sup_norm(out) <= sup_norm(f)
        if f.is_nonnegative():
            assert total_mass(out) == total_mass(f)

    def test_positive_mass_conserved_exactly(self):
        op = build_adjacency(g5())
        f = NetworkState(
            [F(0), F(1, 3), F(1)],
            [SparseVector({1: F(2), 3: F(1, 7)}), SparseVector({4: F(5, 3)})],
        )
        out = evolve_unit(op, f, F(7, 5))
        assert total_mass(out) == total_mass(f)
        assert out.is_nonnegative()

    def test_scaled_operator_refused(self):
        op = build_adjacency(g2(), VelocityProfile({1: F(2), 2: F(1)}))
        with pytest.raises(WrongOperatorError):
            evolve_unit(op, pulse_e1(), F(1))

    def test_float_time_refused(self):
        with pytest.raises(PrecisionError):
            evolve_unit(build_adjacency(g2()), pulse_e1(), 0.5)

    def test_matches_tracing_oracle_pointwise(self):
        g = g5()
        vel = VelocityProfile({j: F(1) for j in g.edge_ids})
        f = pulse_e1()
        out = evolve_unit(build_adjacency(g), f, F(3, 4))
        for j in g.edge_ids:
            for k in range(12):
                x = F(2 * k + 1, 24)
                assert out.value_at(x).get(j) == oracles.crawl(g, vel, f, j, x, F(3, 4))

    def test_finite_propagation_on_lazy_path(self):
        path = MetricGraph.lazy(
            column_fn=lambda j: [(j + 1, F(1))],
            endpoints_fn=lambda j: (j, j + 1),
            name="path",
        )
        f = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({0: F(1)}), SparseVector({0: F(2)})],
        )
        out = evolve_unit(build_adjacency(path), f, F(5, 2))
        assert out.support() <= {2, 3}
        # pure translate: s on edge 2 came from s + 1/2 on edge 0,
        # s on edge 3 from s - 1/2 on edge 0
        want = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({2: F(2)}), SparseVector({3: F(1)})],
        )
        assert out == want


class TestCommonMultiplier:
    def test_unit_profile(self):
        c, ell = common_multiplier(VelocityProfile({1: F(1), 2: F(1)}))
        assert c == 1 and ell == {1: 1, 2: 1}

    def test_integer_lcm(self):
        c, ell = common_multiplier(VelocityProfile({1: F(2), 2: F(3)}))
        assert c == 6 and ell == {1: 3, 2: 2}

    def test_fractional_speeds(self):
        c, ell = common_multiplier(VelocityProfile({1: F(1, 2), 2: F(1, 3)}))
        assert c == 1 and ell == {1: 2, 2: 3}
        assert oracles.brute_common_multiplier([F(1, 2), F(1, 3)]) == 1

    def test_minimality_against_brute_force(self):
        rng = random.Random(23)
        for _ in range(20):
            cs = [
                F(rng.randrange(1, 9), rng.randrange(1, 9)) for _ in range(3)
            ]
            vel = VelocityProfile(dict(enumerate(cs)))
            c, ell = common_multiplier(vel)
            assert c == oracles.brute_common_multiplier(cs)
            for j, cj in enumerate(cs):
                assert c == ell[j] * cj

    def test_width_cap(self):
        vel = VelocityProfile({1: F(2 ** 40), 2: F(3 ** 40)})
        with pytest.raises(WidthOverflowError) as err:
            common_multiplier(vel)
        assert err.value.edges

    def test_subedge_cap(self):
        vel = VelocityProfile({1: F(1), 2: F(1, 3_000_000)})
        with pytest.raises(WidthOverflowError):
            common_multiplier(vel)


class TestSubdivide:
    def test_identity_plan(self):
        plan = subdivide(g2(), VelocityProfile({1: F(1), 2: F(1)}))
        assert plan.is_identity
        assert plan.graph is plan.source

    def test_two_cycle_splits_into_three(self):
        plan = subdivide(g2(), VelocityProfile({1: F(1, 2), 2: F(1)}))
        assert plan.c == 1 and plan.ell == {1: 2, 2: 1}
        assert plan.sub_edges() == 3 and len(plan.graph) == 3
        head_sub, tail_sub = plan.sub_edge_map[1]
        (e2,) = plan.sub_edge_map[2]
        # one directed 3-cycle: e2 -> tail sub-edge -> head sub-edge -> e2
        assert dict(plan.graph.column(e2).items()) == {tail_sub: F(2)}
        assert dict(plan.graph.column(tail_sub).items()) == {head_sub: F(1)}
        assert dict(plan.graph.column(head_sub).items()) == {e2: F(1, 2)}

    def test_five_edge_insertion(self):
        vel = VelocityProfile({1: F(1), 2: F(1), 3: F(1), 4: F(1), 5: F(1, 2)})
        plan = subdivide(g5(), vel)
        assert plan.sub_edges() == 6
        head_sub, tail_sub = plan.sub_edge_map[5]
        assert dict(plan.graph.column(tail_sub).items()) == {head_sub: F(1)}

    def test_plan_invariants(self):
        vel = VelocityProfile({1: F(2), 2: F(1), 3: F(1, 2), 4: F(3, 2), 5: F(1)})
        plan = subdivide(g5(), vel)
        for j, l in plan.ell.items():
            assert l >= 1 and plan.c == l * vel.velocity(j)
        assert plan.sub_edges() == sum(plan.ell.values())
        # inserted vertices pass mass straight through
        for j, subs in plan.sub_edge_map.items():
            for k in range(len(subs) - 1):
                col = plan.graph.column(subs[k + 1])
                assert dict(col.items()) == {subs[k]: F(1)}


class TestLiftProject:
    def test_identity_plan_round_trip(self):
        plan = subdivide(g2(), VelocityProfile({1: F(1), 2: F(1)}))
        f = pulse_e1()
        assert lift_state(plan, f) == f
        assert project_state(plan, f) == f

    def test_constant_splits_to_constants(self):
        plan = subdivide(g2(), VelocityProfile({1: F(1, 2), 2: F(1)}))
        lifted = lift_state(plan, pulse_e1())
        a, b = plan.sub_edge_map[1]
        assert lifted == NetworkState.constant(SparseVector({a: F(1), b: F(1)}))

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_exact(self, seed):
        vel = VelocityProfile({1: F(2), 2: F(1), 3: F(1, 2), 4: F(3, 2), 5: F(1)})
        plan = subdivide(g5(), vel)
        f = random_state(random.Random(seed), (1, 2, 3, 4, 5), pieces=8)
        assert project_state(plan, lift_state(plan, f)) == f


class TestEvolveRational:
    def test_unit_velocities_match_evolve_unit(self):
        g = g5()
        vel = VelocityProfile({j: F(1) for j in g.edge_ids})
        f = random_state(random.Random(9), (1, 2, 3, 4, 5))
        for t in (F(0), F(1, 3), F(2)):
            assert evolve_rational(g, vel, f, t) == evolve_unit(build_adjacency(g), f, t)

    def test_uniform_speed_rescales_time(self):
        g = g2()
        vel = VelocityProfile({1: F(2), 2: F(2)})
        f = random_state(random.Random(10), (1, 2))
        assert evolve_rational(g, vel, f, F(1, 4)) == evolve_unit(
            build_adjacency(g), f, F(1, 2)
        )

    def test_matches_tracing_oracle(self):
        g = g2()
        vel = VelocityProfile({1: F(2), 2: F(1)})
        f = pulse_e1()
        out = evolve_rational(g, vel, f, F(1, 2))
        for j in g.edge_ids:
            for k in range(30):
                x = F(2 * k + 1, 60)
                assert out.value_at(x).get(j) == oracles.crawl(g, vel, f, j, x, F(1, 2))

    def test_positivity(self):
        g = g5()
        vel = VelocityProfile({1: F(2), 2: F(1), 3: F(1, 2), 4: F(3, 2), 5: F(1)})
        f = pulse_e1()
        out = evolve_rational(g, vel, f, F(7, 8))
        assert out.is_nonnegative()

    @given(
        st.fractions(min_value=0, max_value=1, max_denominator=8),
        st.fractions(min_value=0, max_value=1, max_denominator=8),
    )
    @settings(max_examples=20, deadline=None)
    def test_semigroup_law(self, t, s):
        g = g2()
        vel = VelocityProfile({1: F(2), 2: F(1)})
        plan = subdivide(g, vel)
        f = random_state(random.Random(4), (1, 2), pieces=3)
        one = evolve_rational(g, vel, f, t + s, plan=plan)
        two = evolve_rational(g, vel, evolve_rational(g, vel, f, s, plan=plan), t, plan=plan)
        assert one == two

    def test_plain_mass_conserved_at_equal_ell(self):
        g = g2()
        vel = VelocityProfile({1: F(1, 2), 2: F(1, 2)})
        f = NetworkState(
            [F(0), F(1, 4), F(1)],
            [SparseVector({1: F(3)}), SparseVector({2: F(1, 5)})],
        )
        out = evolve_rational(g, vel, f, F(5, 7))
        assert total_mass(out) == total_mass(f)

    def test_weighted_mass_conserved_on_subdivided_graph(self):
        g = g2()
        vel = VelocityProfile({1: F(1, 2), 2: F(1)})
        plan = subdivide(g, vel)
        f = NetworkState(
            [F(0), F(2, 5), F(1)],
            [SparseVector({1: F(1)}), SparseVector({2: F(3, 2)})],
        )
        lifted = lift_state(plan, f)
        before = plan.weighted_mass(lifted)
        for t in (F(1, 8), F(1, 2), F(9, 4)):
            evolved = evolve_unit(plan.operator, lifted, plan.c * t)
            assert plan.weighted_mass(evolved) == before


class TestEvolveAbsorbing:
    def setup_g2(self):
        g = g2()
        vel = VelocityProfile({1: F(1), 2: F(1)})
        f = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({1: F(1)}), SparseVector({1: F(1, 2), 2: F(1, 4)})],
        )
        return g, vel, f

    def test_zero_rates_reduce_to_transport(self):
        g, vel, f = self.setup_g2()
        res = evolve_absorbing(g, vel, AbsorptionProfile.zero(), f, F(1, 3),
                               order=4, quad_steps=16, grid=24)
        exact = sample(evolve_rational(g, vel, f, F(1, 3)), 24)
        assert res.state.distance(exact) == 0
        assert res.tail_bound == 0 and res.quad_bound == 0

    def test_constant_rate_is_scalar_growth(self):
        import math

        g, vel, f = self.setup_g2()
        q0 = F(1, 4)
        q = AbsorptionProfile.constant({1: q0, 2: q0})
        t = F(1, 2)
        res = evolve_absorbing(g, vel, q, f, t, order=8, quad_steps=128, grid=64)
        ref = sample(evolve_rational(g, vel, f, t), 64)
        scaled = ref.scale(math.exp(float(q0) * float(t)))
        d = res.state.distance(scaled)
        assert d <= res.error_bound
        assert res.error_bound < 1e-6

    def test_nonconstant_rates_match_finite_volume_oracle(self):
        g, vel, f = self.setup_g2()
        q_state = NetworkState(
            [F(0), F(1, 2), F(1)],
            [SparseVector({1: F(1, 2), 2: F(1, 4)}), SparseVector({1: F(1, 8)})],
        )
        q = AbsorptionProfile(
            {j: (q_state.breakpoints, [v.get(j) for v in q_state.values])
             for j in (1, 2)}
        )
        res = evolve_absorbing(g, vel, q, f, F(1, 2), order=6, quad_steps=64, grid=128)
        cells = 3200
        ref = oracles.fv_absorb(g, q_state, f, F(1, 2), cells)
        stride = cells // 128
        worst = 0.0
        for m in range(129):
            cell = m * stride if m < 128 else cells - 1
            got = sum(abs(res.state.samples[m].get(j) - ref[j][cell]) for j in (1, 2))
            worst = max(worst, got)
        assert worst <= 1e-3

    def test_tail_bound_shrinks_with_order(self):
        g, vel, f = self.setup_g2()
        q = AbsorptionProfile.constant({1: F(1, 2), 2: F(1, 2)})
        bounds = [
            evolve_absorbing(g, vel, q, f, F(1, 2), order=k, quad_steps=8, grid=16).tail_bound
            for k in (0, 2, 4, 6)
        ]
        assert all(b > 0 for b in bounds)
        assert bounds == sorted(bounds, reverse=True)
        assert bounds[-1] < 1e-6 * bounds[0]

    def test_order_zero_with_rates_reports_large_tail(self):
        g, vel, f = self.setup_g2()
        q = AbsorptionProfile.constant({1: F(1), 2: F(1)})
        res = evolve_absorbing(g, vel, q, f, F(1), order=0, quad_steps=4, grid=8)
        assert res.tail_bound > 1

    def test_bad_arguments(self):
        g, vel, f = self.setup_g2()
        q = AbsorptionProfile.zero()
        with pytest.raises(ValueError):
            evolve_absorbing(g, vel, q, f, F(1), quad_steps=0)
        with pytest.raises(ValueError):
            evolve_absorbing(g, vel, q, f, F(1), order=-1)
        with pytest.raises(ValueError):
            evolve_absorbing(g, vel, q, f, F(-1))

    def test_mixed_velocities_constant_rate_growth(self):
        # a constant rate commutes with the transport at any velocities
        import math

        g = g2()
        vel = VelocityProfile({1: F(2), 2: F(1)})
        f = pulse_e1()
        q0 = F(1, 3)
        q = AbsorptionProfile.constant({1: q0, 2: q0})
        t = F(1, 2)
        res = evolve_absorbing(g, vel, q, f, t, order=8, quad_steps=128, grid=64)
        ref = sample(evolve_rational(g, vel, f, t), 64).scale(
            math.exp(float(q0) * float(t))
        )
        assert res.state.distance(ref) <= res.error_bound
        assert res.error_bound < 1e-5
