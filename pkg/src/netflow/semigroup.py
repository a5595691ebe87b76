"""Exact transport semigroups on the edge bundle.

The unit-velocity flow has a closed form: shift the profile toward the
head by t, and every time the argument would leave [0,1) route it through
the adjacency operator.  Concretely, with B the routing matrix,

    (T(t) f)(s) = B^n f(t + s - n)   where n <= t + s < n + 1.

Everything here is arranged so this formula is evaluated in exact rational
arithmetic: breakpoints shift by exact amounts, values pass through B with
Fraction weights, and two evolutions compose to exactly the evolution of
the summed time.

Rational velocity profiles reduce to the unit case by subdividing every
edge j into ell_j pieces of equal traversal time 1/c, where c is the
smallest rational making every ell_j = c / c_j a whole number.  Traversing
a sub-edge then always takes time 1/c, so running the unit flow on the
subdivided graph for time c*t and mapping back reproduces the original
dynamics.  The vertex coupling of the subdivided graph must be the
velocity-conjugated matrix (entries (c_j / c_i) w_ij), because that is
what couples the traces of the original system; inserted vertices just
pass values through with weight one.  The subdivided columns then no
longer sum to one when speeds differ, which is expected: the conserved
functional picks up the weights 1/ell_j (see weighted_mass below).

Absorption enters through a pointwise multiplier q.  The perturbed flow
is summed as an iterated-integral series

    S_0(t) = T(t),   S_{k+1}(t) f = integral_0^t T(t-s) M_q S_k(s) f ds,

truncated at a requested order, each level integrated by composite
midpoint quadrature.  Midpoint nodes are deliberate: with rational data
the integrand is piecewise constant in s with jumps on the panel lattice,
so sampling panel midpoints never reads a value straddling a jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    MalformedGraphError,
    NotRationalError,
    WidthOverflowError,
    WrongOperatorError,
)
from .exact import as_exact, as_exact_time, frac_part
from .graph import (
    AdjacencyOperator,
    MetricGraph,
    SparseVector,
    VelocityProfile,
    build_adjacency,
)
from .states import NetworkState, SampledState, sample

__all__ = [
    "evolve_unit",
    "common_multiplier",
    "SubdivisionPlan",
    "subdivide",
    "lift_state",
    "project_state",
    "evolve_rational",
    "AbsorptionProfile",
    "AbsorbingResult",
    "evolve_absorbing",
]

# Guard rails for runaway subdivisions.
MAX_WIDTH = 2**63
MAX_SUBEDGES = 2_000_000


def evolve_unit(op: AdjacencyOperator, f: NetworkState, t) -> NetworkState:
    """Exact unit-velocity evolution T(t) f.

    `op` must be unscaled: the unit flow belongs to the plain routing
    matrix, and passing a velocity-conjugated operator here silently
    computes the wrong dynamics, hence the hard error.  `t` must be an
    exact rational; floats raise PrecisionError rather than quietly
    contaminating the grid.
    """
    if op.scaled:
        raise WrongOperatorError(
            "evolve_unit needs the unscaled routing operator; "
            "use evolve_rational for velocity profiles"
        )
    t = as_exact_time(t, "evolution time")
    if t < 0:
        raise ValueError(f"evolution time must be nonnegative, got {t}")
    n0 = t.numerator // t.denominator
    theta = t - n0

    base = list(f.values)
    for _ in range(n0):
        base = [op.apply(v) for v in base]
    if theta == 0:
        return NetworkState(f.breakpoints, base)

    bps = f.breakpoints
    out_bps = [Fraction(0)]
    out_vals = []
    # s in [0, 1-theta): argument t+s stays below n0+1, shift only.
    for m, v in enumerate(base):
        hi = bps[m + 1]
        if hi > theta:
            out_vals.append(v)
            out_bps.append(hi - theta)
    # s in [1-theta, 1): argument wrapped once more through the routing.
    for m, v in enumerate(base):
        lo, hi = bps[m], min(bps[m + 1], theta)
        if lo < hi:
            out_vals.append(op.apply(v))
            out_bps.append(hi + 1 - theta)
    return NetworkState(out_bps, out_vals)


def common_multiplier(vel: VelocityProfile, edges: Sequence | None = None):
    """Smallest rational c with c / c_j a whole number for every edge.

    For c_j = p_j / q_j in lowest terms this is lcm(p_j) / gcd(q_j).
    Returns (c, {edge: ell_j}) with ell_j = c / c_j.  Velocities must be
    exact rationals; the lcm is capped so a pathological profile fails
    loudly, naming the edges that blew the width, instead of allocating
    a graph that cannot exist.
    """
    if edges is None:
        edges = sorted(vel.values)
    speeds = {}
    for j in edges:
        c_j = vel.exact(j)  # raises NotRationalError on floats
        speeds[j] = c_j
    if not speeds:
        raise MalformedGraphError("no edges to subdivide")

    num = 1
    den = 0
    culprits: list = []
    for j, c_j in speeds.items():
        num = num * c_j.numerator // math.gcd(num, c_j.numerator)
        den = math.gcd(den, c_j.denominator)
        culprits.append(j)
        if num > MAX_WIDTH:
            raise WidthOverflowError(
                f"common multiplier exceeds configured width {MAX_WIDTH}",
                edges=culprits,
            )
    c = Fraction(num, den)
    ell = {}
    for j, c_j in speeds.items():
        r = c / c_j
        assert r.denominator == 1, "common multiplier failed to clear a denominator"
        ell[j] = r.numerator
    if sum(ell.values()) > MAX_SUBEDGES:
        worst = sorted(ell, key=ell.get, reverse=True)[:4]
        raise WidthOverflowError(
            f"subdivision would create {sum(ell.values())} edges",
            edges=worst,
        )
    return c, ell


@dataclass
class SubdivisionPlan:
    """Everything needed to move between a graph and its subdivided twin.

    `sub_edge_map[j]` lists the ell_j sub-edge ids of edge j ordered from
    the head side: the first sub-edge covers [0, 1/ell_j) of the original
    parameter and contains the head, the last contains the tail.  The
    `graph` carries pass-through weight one at inserted vertices and the
    velocity-conjugated weights at original vertices; its `operator` is
    deliberately unscaled (the scaling already lives in the weights).
    """

    source: MetricGraph
    velocities: VelocityProfile
    c: Fraction
    ell: dict
    sub_edge_map: dict
    graph: MetricGraph
    operator: AdjacencyOperator
    owner: dict = field(default_factory=dict)

    @property
    def is_identity(self) -> bool:
        return self.graph is self.source

    def sub_edges(self) -> int:
        return sum(self.ell.values()) if self.ell else len(self.source)

    def piece_weight(self, sub_edge) -> Fraction:
        """Weight 1/ell_j of a sub-edge in the conserved mass functional."""
        if self.is_identity:
            return Fraction(1)
        return Fraction(1, self.ell[self.owner[sub_edge]])

    def weighted_mass(self, h: NetworkState):
        """The functional sum_e (1/ell) * integral h_e; conserved by the unit flow."""
        total = 0
        for b1, b2, v in h.pieces():
            total += (b2 - b1) * sum(self.piece_weight(e) * x for e, x in v.items())
        return total

    def weighted_sup_norm(self, h: NetworkState):
        """Sup over s of sum_e (1/ell) |h_e(s)|; the norm the subdivided flow contracts."""
        best = 0
        for v in h.values:
            n = sum(self.piece_weight(e) * abs(x) for e, x in v.items())
            if n > best:
                best = n
        return best


def subdivide(g: MetricGraph, vel: VelocityProfile) -> SubdivisionPlan:
    """Build the equal-traversal-time subdivision for a rational profile.

    Lazy graphs are supported only at a uniform velocity (the plan is then
    the identity and evolution is a pure time rescale); cutting an
    infinite graph edge-by-edge would need a renumbering scheme nothing
    currently requires.
    """
    if not vel.is_rational():
        raise NotRationalError("subdivision needs exact rational velocities")

    if not g.is_finite:
        pool = set(Fraction(v) for v in vel.values.values())
        if vel.default is not None:
            pool.add(Fraction(vel.default))
        if not pool:
            raise MalformedGraphError("velocity profile carries no speeds")
        if len(pool) != 1:
            raise MalformedGraphError(
                "a lazy graph can only be subdivided at a uniform velocity"
            )
        c = pool.pop()
        return SubdivisionPlan(
            source=g,
            velocities=vel,
            c=c,
            ell={},
            sub_edge_map={},
            graph=g,
            operator=build_adjacency(g),
            owner={},
        )

    ids = g.edge_ids
    c, ell = common_multiplier(vel, ids)

    if all(L == 1 for L in ell.values()):
        # uniform speed: same graph, same coupling, time runs c times faster
        return SubdivisionPlan(
            source=g,
            velocities=vel,
            c=c,
            ell=ell,
            sub_edge_map={j: (j,) for j in ids},
            graph=g,
            operator=build_adjacency(g),
            owner={j: j for j in ids},
        )

    int_ids = [e for e in ids if isinstance(e, int)]
    next_id = max(int_ids) + 1 if int_ids else 0
    sub_map: dict = {}
    owner: dict = {}
    edges = []
    for j in ids:
        tail, head = g.endpoints(j)
        L = ell[j]
        if L == 1:
            sub_ids = (j,)
        else:
            sub_ids = tuple(range(next_id, next_id + L))
            next_id += L
        sub_map[j] = sub_ids
        inserted = [("sub", j, k) for k in range(1, L)]
        for k in range(1, L + 1):
            t_k = inserted[k - 1] if k < L else tail
            h_k = inserted[k - 2] if k > 1 else head
            edges.append((sub_ids[k - 1], t_k, h_k))
        for e in sub_ids:
            owner[e] = j

    weights: dict = {}
    stochastic = True
    for j in ids:
        for k in range(1, ell[j]):
            weights[(sub_map[j][k - 1], sub_map[j][k])] = Fraction(1)
        c_j = vel.exact(j)
        col_sum = Fraction(0)
        for i, w_ij in g.column(j).items():
            w = w_ij * c_j / vel.exact(i)
            weights[(sub_map[i][-1], sub_map[j][0])] = w
            col_sum += w
        if col_sum != 1:
            stochastic = False

    name = f"{g.name}~{c}" if g.name else f"subdivided~{c}"
    gt = MetricGraph.finite(edges, weights, name=name, stochastic=stochastic)
    return SubdivisionPlan(
        source=g,
        velocities=vel,
        c=c,
        ell=ell,
        sub_edge_map=sub_map,
        graph=gt,
        operator=build_adjacency(gt),
        owner=owner,
    )


def lift_state(plan: SubdivisionPlan, f: NetworkState) -> NetworkState:
    """Cut f along the plan: sub-edge k of edge j carries f_j restricted to
    [(k-1)/ell_j, k/ell_j), stretched to [0,1).  Values are copied, not
    rescaled; the mass functional picks up the 1/ell weights instead."""
    if plan.is_identity:
        return f
    support = sorted(j for j in f.support() if j in plan.ell)
    grid = {Fraction(0), Fraction(1)}
    for b in f.breakpoints[1:-1]:
        for j in support:
            grid.add(frac_part(plan.ell[j] * b))
    bps = sorted(grid)
    pieces = []
    for m in range(len(bps) - 1):
        beta = bps[m]
        vec = {}
        for j in support:
            L = plan.ell[j]
            sub_ids = plan.sub_edge_map[j]
            for k in range(L):
                x = (k + beta) / L
                val = f.value_at(x).get(j)
                if val != 0:
                    vec[sub_ids[k]] = val
        pieces.append(SparseVector(vec))
    return NetworkState(bps, pieces)


def project_state(plan: SubdivisionPlan, h: NetworkState) -> NetworkState:
    """Inverse of lift_state: reassemble sub-edge profiles onto the original
    edges.  Exact round trip: project(lift(f)) == f canonically."""
    if plan.is_identity:
        return h
    edges = sorted({plan.owner[e] for e in h.support() if e in plan.owner})
    grid = {Fraction(0), Fraction(1)}
    for j in edges:
        L = plan.ell[j]
        for beta in h.breakpoints:
            for k in range(L):
                grid.add((k + beta) / L)
    bps = sorted(b for b in grid if 0 <= b <= 1)
    pieces = []
    for m in range(len(bps) - 1):
        a = bps[m]
        vec = {}
        for j in edges:
            L = plan.ell[j]
            pos = L * a
            k = pos.numerator // pos.denominator
            local = pos - k
            val = h.value_at(local).get(plan.sub_edge_map[j][k])
            if val != 0:
                vec[j] = val
        pieces.append(SparseVector(vec))
    return NetworkState(bps, pieces)


def evolve_rational(
    g: MetricGraph,
    vel: VelocityProfile,
    f: NetworkState,
    t,
    plan: SubdivisionPlan | None = None,
) -> NetworkState:
    """Exact evolution at rational velocities via the subdivided unit flow.

    Computes project(T~(c t) lift(f)): lift, run the unit semigroup on the
    subdivided graph for the rescaled time, map back.  Passing a
    precomputed `plan` skips rebuilding the subdivision.
    """
    t = as_exact_time(t, "evolution time")
    if plan is None:
        plan = subdivide(g, vel)
    lifted = lift_state(plan, f)
    evolved = evolve_unit(plan.operator, lifted, plan.c * t)
    return project_state(plan, evolved)


class AbsorptionProfile:
    """Per-edge absorption rates as step functions of the edge parameter.

    Breakpoints must be exact rationals (they join the evolution lattice);
    values may be any reals.  Edges not listed absorb nothing.
    """

    def __init__(self, profiles: Mapping):
        states = []
        for j, (bps, vals) in sorted(profiles.items(), key=lambda kv: repr(kv[0])):
            bps = [as_exact(b, what=f"absorption breakpoint on edge {j!r}") for b in bps]
            if len(vals) != len(bps) - 1:
                raise MalformedGraphError(
                    f"absorption profile on edge {j!r}: {len(bps)} breakpoints "
                    f"need {len(bps) - 1} values"
                )
            states.append(
                NetworkState(bps, [SparseVector({j: v}) for v in vals])
            )
        if states:
            merged = states[0]
            for s in states[1:]:
                merged = merged + s
        else:
            merged = NetworkState.zero()
        self._state = merged
        self.sup_bound = max(
            (abs(x) for v in merged.values for _, x in v.items()), default=0
        )

    @classmethod
    def constant(cls, rates: Mapping) -> "AbsorptionProfile":
        return cls({j: ([Fraction(0), Fraction(1)], [r]) for j, r in rates.items()})

    @classmethod
    def zero(cls) -> "AbsorptionProfile":
        return cls({})

    def as_state(self) -> NetworkState:
        return self._state

    def __repr__(self):
        return f"AbsorptionProfile({len(self._state.support())} edges, bound {self.sup_bound})"


@dataclass
class AbsorbingResult:
    """Sampled perturbed evolution plus the bounds that qualify it.

    `tail_bound` dominates the dropped series orders; `quad_bound` is a
    step-halving estimate of the quadrature error (zero when the panel
    lattice makes the midpoint rule exact).  The truncation error of what
    was returned is at most their sum.
    """

    state: SampledState
    tail_bound: float
    quad_bound: float
    order: int
    quad_steps: int

    @property
    def error_bound(self) -> float:
        return self.tail_bound + self.quad_bound


def _absorb_series(plan: SubdivisionPlan, f_l: NetworkState, q_l: NetworkState,
                   t: Fraction, order: int, quad_steps: int) -> NetworkState:
    """Truncated perturbation series on the subdivided graph, lifted states in,
    lifted state out.  Midpoint panels, one shared node lattice per level."""
    op = plan.operator
    c = plan.c
    P = quad_steps
    h = t / P  # panel width in original time; subdivided steps are c*h

    total = evolve_unit(op, f_l, c * t)
    if order == 0 or q_l.is_zero():
        return total

    nodes = []
    v = evolve_unit(op, f_l, c * h / 2)
    nodes.append(v)
    for _ in range(1, P):
        v = evolve_unit(op, v, c * h)
        nodes.append(v)

    zero = NetworkState.zero()
    for _ in range(1, order + 1):
        gs = [node.hadamard(q_l) for node in nodes]
        acc = zero
        new_nodes = []
        for p in range(P):
            # value at node p: full panels below it plus its own half panel
            new_nodes.append(acc.scale(h) + gs[p].scale(h / 2))
            if p < P - 1:
                acc = evolve_unit(op, acc + gs[p], c * h)
            else:
                final = evolve_unit(op, acc + gs[p], c * h / 2).scale(h)
        total = total + final
        nodes = new_nodes
    return total


def evolve_absorbing(
    g: MetricGraph,
    vel: VelocityProfile,
    q: AbsorptionProfile,
    f: NetworkState,
    t,
    order: int = 6,
    quad_steps: int = 64,
    grid: int = 128,
) -> AbsorbingResult:
    """Transport with pointwise absorption, as a truncated iterated series.

    Returns samples of sum_{k<=order} S_k(t) f on the uniform grid.  The
    reported tail bound is

        (sum_j ell_j) * (|q| t)^{K+1} / (K+1)! * (geometric tail factor) * |f|

    measured in the norm the subdivided flow actually contracts; at a
    uniform velocity the leading factor is 1 and this reduces to the
    familiar series remainder.  The quadrature bound comes from halving
    quad_steps and comparing, doubled for safety, so exact-on-the-lattice
    runs report zero.
    """
    t = as_exact_time(t, "evolution time")
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    if order < 0:
        raise ValueError(f"series order must be >= 0, got {order}")
    if quad_steps < 1:
        raise ValueError(f"quad_steps must be >= 1, got {quad_steps}")
    if grid < 1:
        raise ValueError(f"output grid must be >= 1, got {grid}")

    plan = subdivide(g, vel)
    f_l = lift_state(plan, f)
    q_l = lift_state(plan, q.as_state())

    full = _absorb_series(plan, f_l, q_l, t, order, quad_steps)
    out = sample(project_state(plan, full), grid)

    if quad_steps >= 2 and not q_l.is_zero() and t > 0:
        half = _absorb_series(plan, f_l, q_l, t, order, quad_steps // 2)
        out_half = sample(project_state(plan, half), grid)
        quad_bound = 2.0 * float(out.distance(out_half))
    else:
        quad_bound = 0.0

    x = float(q.sup_bound) * float(t)
    k1 = order + 1
    lead = x**k1 / math.factorial(k1)
    corr = 1.0 / (1.0 - x / (k1 + 1)) if x < k1 + 1 else math.exp(x)
    equiv = 1.0 if plan.is_identity else float(plan.sub_edges())
    tail_bound = equiv * lead * corr * float(plan.weighted_sup_norm(f_l))

    return AbsorbingResult(out, tail_bound, quad_bound, order, quad_steps)
