"""Directed metric graphs with column-stochastic edge routing.

Each edge is a copy of [0,1] parametrized against the direction of travel:
the tail sits at parameter 1, the head at parameter 0, and material moves
toward 0.  Mass leaving edge j at its head is split among the edges whose
tail is that vertex; the share routed into edge i is the weight w(i, j).
Stacking these weights gives an edge-to-edge matrix whose column j lists
where edge j's output goes, and conservation of mass is exactly the
statement that every column sums to one.  Weights are `fractions.Fraction`
throughout so that column sums, and everything downstream that depends on
them, can be tested for equality instead of closeness.

Graphs come in two flavours.  Finite graphs hold their edges and weights
in dictionaries and validate structure eagerly.  Lazy graphs describe a
possibly infinite edge set through two callbacks and validate each column
on first access, which is the only moment an infinite object can be
checked at all.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import (
    MalformedGraphError,
    MissingVelocityError,
    NotRationalError,
)
from .exact import as_exact, is_rational

__all__ = [
    "SparseVector",
    "MetricGraph",
    "VelocityProfile",
    "AdjacencyOperator",
    "ValidationReport",
    "validate_graph",
    "build_adjacency",
    "apply_adjacency",
]

# Lazy columns longer than this are treated as a runaway callback.
MAX_LAZY_COLUMN = 100_000


class SparseVector:
    """Finitely supported edge-id -> value map.

    Zero entries are dropped at construction, so two vectors are equal
    exactly when their dictionaries are.  Values may be Fraction, int,
    float or complex; exactness is a property of what you put in.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping | Iterable | None = None):
        if entries is None:
            entries = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._entries = {j: v for j, v in items if v != 0}

    @classmethod
    def unit(cls, j) -> "SparseVector":
        return cls({j: Fraction(1)})

    def get(self, j, default=0):
        return self._entries.get(j, default)

    def items(self):
        return self._entries.items()

    def support(self):
        return self._entries.keys()

    def to_dict(self) -> dict:
        return dict(self._entries)

    def is_zero(self) -> bool:
        return not self._entries

    def l1(self):
        """The l1 norm, sum of absolute values over the support."""
        return sum(abs(v) for v in self._entries.values())

    def total(self):
        """Signed sum of the entries (the mass functional on vectors)."""
        return sum(self._entries.values())

    def scale(self, a) -> "SparseVector":
        if a == 0:
            return SparseVector()
        return SparseVector({j: a * v for j, v in self._entries.items()})

    def __add__(self, other: "SparseVector") -> "SparseVector":
        out = dict(self._entries)
        for j, v in other._entries.items():
            out[j] = out.get(j, 0) + v
        return SparseVector(out)

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        out = dict(self._entries)
        for j, v in other._entries.items():
            out[j] = out.get(j, 0) - v
        return SparseVector(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __repr__(self):
        inner = ", ".join(f"{j}: {v}" for j, v in sorted(self._entries.items(), key=lambda kv: repr(kv[0])))
        return f"SparseVector({{{inner}}})"


class MetricGraph:
    """A directed graph of unit-interval edges with routing weights.

    Use :meth:`finite` or :meth:`lazy` to construct.  Finite graphs check
    eagerly that weights only connect adjacent edge pairs (head of the
    source is tail of the receiver), that weights are nonnegative exact
    rationals, and that no head vertex is a sink.  Column sums are *not*
    enforced at construction; `validate_graph` reports them, which keeps
    broken inputs inspectable.
    """

    def __init__(self, *_, **__):
        raise TypeError("use MetricGraph.finite(...) or MetricGraph.lazy(...)")

    @classmethod
    def finite(
        cls,
        edges: Iterable[tuple],
        weights: Mapping[tuple, object],
        *,
        name: str = "",
        allow_sinks: bool = False,
        stochastic: bool = True,
    ) -> "MetricGraph":
        """Build a finite graph from (id, tail, head) triples and a weight map.

        `weights` maps (receiver, source) edge-id pairs to exact rationals.
        `allow_sinks` exists for diagnostic construction only, so that
        validate_graph can flag sinks instead of never seeing one.
        `stochastic=False` marks graphs whose columns intentionally do not
        sum to one (velocity-rescaled subdivisions); validation reports
        them as such but operator application proceeds.
        """
        self = object.__new__(cls)
        self.name = name
        self._lazy = False
        self.stochastic = stochastic
        self._edges = {}
        for eid, tail, head in edges:
            if eid in self._edges:
                raise MalformedGraphError(f"duplicate edge id {eid!r}")
            self._edges[eid] = (tail, head)
        self._weights = {}
        for (i, j), w in weights.items():
            if i not in self._edges or j not in self._edges:
                raise MalformedGraphError(f"weight ({i!r}, {j!r}) names an unknown edge")
            if self._edges[j][1] != self._edges[i][0]:
                raise MalformedGraphError(
                    f"weight ({i!r}, {j!r}) connects non-adjacent edges: "
                    f"head of {j!r} is not tail of {i!r}"
                )
            w = as_exact(w, what=f"weight ({i!r}, {j!r})")
            if w < 0:
                raise MalformedGraphError(f"weight ({i!r}, {j!r}) is negative")
            if w != 0:
                self._weights[(i, j)] = w
        tails = {t for (t, _) in self._edges.values()}
        if not allow_sinks:
            for eid, (_, head) in self._edges.items():
                if head not in tails:
                    raise MalformedGraphError(
                        f"vertex {head!r} (head of edge {eid!r}) has no outgoing edge"
                    )
        self._columns = {j: {} for j in self._edges}
        for (i, j), w in self._weights.items():
            self._columns[j][i] = w
        self._rows = None
        return self

    @classmethod
    def lazy(
        cls,
        column_fn: Callable[[object], Iterable[tuple]],
        endpoints_fn: Callable[[object], tuple],
        *,
        name: str = "",
        stochastic: bool = True,
    ) -> "MetricGraph":
        """Build a lazily-described (possibly infinite) graph.

        `column_fn(j)` must return the finite column of the adjacency
        matrix for source edge j as (receiver, weight) pairs sorted by
        receiver id; `endpoints_fn(j)` returns (tail, head).  Each column
        is checked on first access: it must be an explicit finite
        sequence, sorted, nonempty (no sinks) and, unless `stochastic`
        is false, sum to exactly one.
        """
        self = object.__new__(cls)
        self.name = name
        self._lazy = True
        self.stochastic = stochastic
        self._column_fn = column_fn
        self._endpoints_fn = endpoints_fn
        self._columns = {}
        self._rows = None
        self._lock = threading.Lock()
        return self

    # -- shared interface ------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return not self._lazy

    @property
    def edge_ids(self):
        """Sorted edge ids; finite graphs only."""
        self._require_finite("edge_ids")
        return sorted(self._edges)

    def __len__(self):
        self._require_finite("len")
        return len(self._edges)

    def endpoints(self, j) -> tuple:
        """(tail, head) of edge j."""
        if self._lazy:
            pair = self._endpoints_fn(j)
            if not isinstance(pair, tuple) or len(pair) != 2:
                raise MalformedGraphError(f"endpoints callback returned {pair!r} for edge {j!r}")
            return pair
        try:
            return self._edges[j]
        except KeyError:
            raise MalformedGraphError(f"unknown edge {j!r}") from None

    def column(self, j) -> dict:
        """Column j of the routing matrix: receiver id -> weight."""
        if not self._lazy:
            try:
                return self._columns[j]
            except KeyError:
                raise MalformedGraphError(f"unknown edge {j!r}") from None
        with self._lock:
            cached = self._columns.get(j)
            if cached is None:
                cached = self._check_lazy_column(j, self._column_fn(j))
                self._columns[j] = cached
            return cached

    def raw_column(self, j) -> dict:
        """Column j without the lazy-access checks; for diagnostics."""
        if not self._lazy:
            return self.column(j)
        col = self._column_fn(j)
        if not isinstance(col, (list, tuple)):
            raise MalformedGraphError(
                f"lazy column for edge {j!r} is not an explicit sequence"
            )
        return {i: as_exact(w, what=f"weight ({i!r}, {j!r})") for i, w in col}

    def feeders(self, i) -> dict:
        """Row i of the routing matrix: source id -> weight; finite graphs only."""
        self._require_finite("feeders")
        if self._rows is None:
            rows = {j: {} for j in self._edges}
            for (r, s), w in self._weights.items():
                rows[r][s] = w
            self._rows = rows
        try:
            return self._rows[i]
        except KeyError:
            raise MalformedGraphError(f"unknown edge {i!r}") from None

    def _check_lazy_column(self, j, col) -> dict:
        if not isinstance(col, (list, tuple)):
            raise MalformedGraphError(
                f"lazy column for edge {j!r} is not an explicit sequence; "
                f"refusing a possibly infinite column"
            )
        if len(col) > MAX_LAZY_COLUMN:
            raise MalformedGraphError(f"lazy column for edge {j!r} has runaway length")
        if not col:
            raise MalformedGraphError(f"edge {j!r} has an empty column (sink)")
        ids = [i for i, _ in col]
        if any(ids[k] >= ids[k + 1] for k in range(len(ids) - 1)):
            raise MalformedGraphError(f"lazy column for edge {j!r} is not sorted")
        out = {}
        for i, w in col:
            w = as_exact(w, what=f"weight ({i!r}, {j!r})")
            if w < 0:
                raise MalformedGraphError(f"weight ({i!r}, {j!r}) is negative")
            if w != 0:
                out[i] = w
        if self.stochastic and sum(out.values()) != 1:
            raise MalformedGraphError(
                f"column of edge {j!r} sums to {sum(out.values())}, expected 1"
            )
        return out

    def _require_finite(self, op: str):
        if self._lazy:
            raise MalformedGraphError(f"{op} is not available on a lazy graph")

    def __repr__(self):
        if self._lazy:
            return f"MetricGraph(lazy, name={self.name!r})"
        return f"MetricGraph({len(self._edges)} edges, name={self.name!r})"


class VelocityProfile:
    """Per-edge transport speeds.

    Speeds are stored as given: `Fraction` values keep the exact paths
    exact, floats are accepted for the approximation machinery.  For lazy
    graphs a `default` speed covers the edges not listed explicitly; the
    bounds must then be supplied or derivable.
    """

    def __init__(self, values: Mapping, *, default=None, bounds: tuple | None = None):
        self.values = dict(values)
        self.default = default
        pool = list(self.values.values()) + ([default] if default is not None else [])
        if not pool and bounds is None:
            raise MissingVelocityError("velocity profile is empty and has no bounds")
        for c in pool:
            if c <= 0:
                raise MalformedGraphError(f"velocity {c} is not positive")
        if bounds is None:
            bounds = (min(pool), max(pool))
        self.c_min, self.c_max = bounds
        if not (0 < self.c_min <= self.c_max):
            raise MalformedGraphError(f"velocity bounds {bounds} are not ordered positives")

    def velocity(self, j):
        if j in self.values:
            return self.values[j]
        if self.default is not None:
            return self.default
        raise MissingVelocityError(f"no velocity for edge {j!r}")

    def is_rational(self) -> bool:
        pool = list(self.values.values()) + ([self.default] if self.default is not None else [])
        return all(is_rational(c) for c in pool)

    def exact(self, j) -> Fraction:
        c = self.velocity(j)
        if not is_rational(c):
            raise NotRationalError(f"velocity of edge {j!r} is not an exact rational: {c!r}")
        return Fraction(c)

    def items(self):
        return self.values.items()

    def __repr__(self):
        body = ", ".join(f"{j}: {c}" for j, c in sorted(self.values.items(), key=lambda kv: repr(kv[0])))
        tail = f", default={self.default}" if self.default is not None else ""
        return f"VelocityProfile({{{body}}}{tail})"


class AdjacencyOperator:
    """The routing matrix as an operator, optionally velocity-conjugated.

    Unscaled, entry (i, j) is the weight w(i, j).  With a velocity profile
    attached the entry becomes (c_j / c_i) * w(i, j), which is the matrix
    that couples edge traces when speeds differ.  Columns are finitely
    supported and cached; the cache is lock-protected because callers may
    share one operator across threads.
    """

    def __init__(self, graph: MetricGraph, scaling: VelocityProfile | None = None):
        self.graph = graph
        self.scaling = scaling
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def scaled(self) -> bool:
        return self.scaling is not None

    def column(self, j) -> SparseVector:
        with self._lock:
            col = self._cache.get(j)
        if col is not None:
            return col
        raw = self.graph.column(j)
        if self.scaling is None:
            col = SparseVector(raw)
        else:
            c_j = self.scaling.velocity(j)
            col = SparseVector({i: w * c_j / self.scaling.velocity(i) for i, w in raw.items()})
        with self._lock:
            self._cache[j] = col
        return col

    def entry(self, i, j):
        return self.column(j).get(i, 0)

    def apply(self, v: SparseVector) -> SparseVector:
        """Matrix-vector product; touches only the columns in v's support."""
        out: dict = {}
        for j, a in v.items():
            for i, w in self.column(j).items():
                out[i] = out.get(i, 0) + w * a
        return SparseVector(out)

    def apply_power(self, v: SparseVector, n: int) -> SparseVector:
        if n < 0:
            raise ValueError("negative matrix power")
        for _ in range(n):
            if v.is_zero():
                break
            v = self.apply(v)
        return v

    def __repr__(self):
        kind = "scaled" if self.scaled else "unscaled"
        return f"AdjacencyOperator({self.graph!r}, {kind})"


@dataclass
class ValidationReport:
    """Outcome of validate_graph.

    `column_sums` and `column_ok` cover the probed edges; pass means the
    sum is exactly one.  Structural flags list what was found, and `ok`
    is the conjunction of everything.
    """

    probed: tuple
    column_sums: dict
    column_ok: dict
    loops: list = field(default_factory=list)
    duplicates: list = field(default_factory=list)
    sinks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            all(self.column_ok.values())
            and not self.loops
            and not self.duplicates
            and not self.sinks
        )

    def failures(self) -> list:
        return [j for j, good in self.column_ok.items() if not good]

    def summary(self) -> str:
        lines = []
        for j in self.probed:
            s = self.column_sums[j]
            flag = "ok" if self.column_ok[j] else "FAIL"
            lines.append(f"edge {j}: column sum {s} [{flag}]")
        if self.loops:
            lines.append(f"loops: {self.loops}")
        if self.duplicates:
            lines.append(f"duplicate edges: {self.duplicates}")
        if self.sinks:
            lines.append(f"sinks: {self.sinks}")
        lines.append("graph ok" if self.ok else "graph INVALID")
        return "\n".join(lines)


def validate_graph(g: MetricGraph, probe: Iterable | None = None) -> ValidationReport:
    """Check routing weights and structure, reporting instead of raising.

    Finite graphs are probed in full by default; lazy graphs need an
    explicit finite probe set.  A pass for edge j means column j sums to
    exactly one.
    """
    if probe is None:
        g._require_finite("validate_graph without a probe set")
        probe = g.edge_ids
    probe = tuple(probe)

    sums, ok = {}, {}
    for j in probe:
        col = g.raw_column(j)
        s = sum(col.values(), Fraction(0))
        sums[j] = s
        ok[j] = s == 1

    loops, dupes, sinks = [], [], []
    seen_pairs: dict = {}
    for j in probe:
        tail, head = g.endpoints(j)
        if tail == head:
            loops.append(j)
        seen_pairs.setdefault((tail, head), []).append(j)
    for pair, ids in seen_pairs.items():
        if len(ids) > 1:
            dupes.append(tuple(ids))

    if g.is_finite:
        tails = {t for (t, _) in (g.endpoints(j) for j in g.edge_ids)}
        for j in probe:
            head = g.endpoints(j)[1]
            if head not in tails and head not in sinks:
                sinks.append(head)
    else:
        for j in probe:
            if not g.raw_column(j):
                head = g.endpoints(j)[1]
                if head not in sinks:
                    sinks.append(head)

    return ValidationReport(probe, sums, ok, loops, dupes, sinks)


def build_adjacency(g: MetricGraph, scaling: VelocityProfile | None = None) -> AdjacencyOperator:
    """Wrap a graph (and optional velocity profile) as an operator.

    On finite graphs a scaling must cover every edge; the gap is reported
    up front instead of surfacing mid-computation.
    """
    if scaling is not None and g.is_finite:
        missing = [j for j in g.edge_ids if j not in scaling.values and scaling.default is None]
        if missing:
            raise MissingVelocityError(f"no velocity for edges {missing}")
    return AdjacencyOperator(g, scaling)


def apply_adjacency(op: AdjacencyOperator, v: SparseVector) -> SparseVector:
    """Apply the routing operator once: w_i = sum_j op(i, j) v_j."""
    return op.apply(v)
