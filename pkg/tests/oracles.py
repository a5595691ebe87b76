"""Independent reference implementations the tests compare against.

Everything here works on plain Python/numpy structures and deliberately
avoids the library's own evolution, subdivision and series code, so an
agreement between the two routes actually means something.  Keep these
dumb and slow; clarity beats speed.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def dense_matrix(g, edges=None) -> tuple:
    """Dense routing matrix of a finite graph as (numpy array, id list)."""
    ids = list(edges if edges is not None else g.edge_ids)
    pos = {j: k for k, j in enumerate(ids)}
    B = np.zeros((len(ids), len(ids)))
    for j in ids:
        for i, w in g.column(j).items():
            B[pos[i], pos[j]] = float(w)
    return B, ids


def dense_power_apply(B: np.ndarray, ids, vec, n: int) -> dict:
    """B^n applied to a sparse vector, via dense floating arithmetic."""
    x = np.array([float(vec.get(j)) for j in ids])
    out = np.linalg.matrix_power(B, n) @ x
    return {j: out[k] for k, j in enumerate(ids)}


def brute_common_multiplier(cs, search_bound: int = 400) -> Fraction:
    """Smallest positive rational c with c/c_j a natural number for all j,
    found by scanning c = k/d over a denominator/numerator box instead of
    using any lcm/gcd identity."""
    cs = [Fraction(c) for c in cs]
    dens = sorted({c.denominator for c in cs}, reverse=True)
    best = None
    for d in range(1, search_bound + 1):
        for k in range(1, search_bound + 1):
            c = Fraction(k, d)
            if best is not None and c >= best:
                break
            if all((c / cj).denominator == 1 for cj in cs):
                best = c
    if best is None:
        raise AssertionError(f"no common multiplier below {search_bound} for {cs}")
    return best


def riemann_pair(f, g, n: int = 4000):
    """Midpoint Riemann sum of sum_j f_j * g_j over [0,1].

    Approximate (error O(1/n) near breakpoints); use with a tolerance.
    """
    total = 0.0
    for m in range(n):
        s = Fraction(2 * m + 1, 2 * n)
        fv = f.value_at(s)
        total += sum(float(fv.get(j)) * float(w) for j, w in g.value_at(s).items())
    return total / n


def crawl(g, vel, f, edge, x, t):
    """Backward characteristic evaluation, written against the raw graph
    callbacks only (feeders computed here, exact rational arithmetic)."""
    rows: dict = {}
    for j in g.edge_ids:
        for i, w in g.column(j).items():
            rows.setdefault(i, []).append((j, w))

    def head_value(j, rem):
        c = vel.velocity(j)
        y = c * rem
        if y < 1:
            return f.value_at(y).get(j)
        return tail_value(j, rem - Fraction(1) / c)

    def tail_value(j, rem):
        c = vel.velocity(j)
        acc = 0
        for k, w in rows.get(j, ()):
            v = head_value(k, rem)
            if v:
                acc += (vel.velocity(k) / c) * w * v
        return acc

    c = vel.velocity(edge)
    y = x + c * t
    if y < 1:
        return f.value_at(y).get(edge)
    return tail_value(edge, t - (1 - x) / c)


def fv_absorb(g, q_state, f_state, t: Fraction, cells: int) -> dict:
    """Upwind finite-volume run of du/dt = d/ds u + q u with the vertex
    coupling, unit velocities, CFL exactly 1.

    With dt = ds = 1/cells the advection part is an exact one-cell shift,
    so the only errors are operator splitting and any breakpoints of q or
    f that fall inside cells.  Returns edge -> numpy array of cell values,
    cell i covering [i/cells, (i+1)/cells).
    """
    t = Fraction(t)
    steps = t * cells
    if steps.denominator != 1:
        raise AssertionError(f"t={t} is not a multiple of 1/{cells}")
    steps = int(steps)
    ids = list(g.edge_ids)
    mid = [Fraction(2 * i + 1, 2 * cells) for i in range(cells)]
    u = {j: np.array([float(f_state.value_at(s).get(j)) for s in mid]) for j in ids}
    growth = {
        j: np.exp(np.array([float(q_state.value_at(s).get(j)) for s in mid]) / cells)
        for j in ids
    }
    cols = {j: {i: float(w) for i, w in g.column(j).items()} for j in ids}
    for _ in range(steps):
        outflow = {j: u[j][0] for j in ids}
        for j in ids:
            u[j][:-1] = u[j][1:]
            u[j][-1] = 0.0
        for j in ids:
            for i, w in cols[j].items():
                u[i][-1] += w * outflow[j]
        for j in ids:
            u[j] *= growth[j]
    return u
