"""Agent state evolution under the consensus protocol and the disagreement objective.

All state arithmetic uses exact rationals. Equal utilities along different solver
branches must compare equal, which float summation order would break; Fraction keeps
every trace and tie-break bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .network import Edge, Graph, Partition

State = tuple[Fraction, ...]


def as_fraction(value) -> Fraction:
    """Coerce ints, floats, strings like '3/2', and Fractions to exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numeric values here")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact number")


def make_state(values) -> State:
    return tuple(as_fraction(v) for v in values)


@dataclass(frozen=True)
class Weights:
    """Symmetric consensus weights a_ij on the base graph's edges.

    Positive weight only on base edges; every row sum stays strictly below 1 so
    the update is a contraction toward agreement on any surviving subgraph.
    """

    n: int
    by_edge: dict[Edge, Fraction]

    def __post_init__(self) -> None:
        row_sums = {i: Fraction(0) for i in range(1, self.n + 1)}
        for (i, j), a in self.by_edge.items():
            if not (1 <= i < j <= self.n):
                raise ValueError(f"weight on non-canonical edge ({i}, {j})")
            if a <= 0:
                raise ValueError(f"weight on edge ({i}, {j}) must be positive, got {a}")
            row_sums[i] += a
            row_sums[j] += a
        for i, s in row_sums.items():
            if s >= 1:
                raise ValueError(f"row {i} weight sum {s} is not strictly below 1")

    @classmethod
    def uniform(cls, g: Graph, value=None) -> Weights:
        """Equal weight on every base edge; default value 1/n."""
        a = Fraction(1, g.n) if value is None else as_fraction(value)
        return cls(g.n, {e: a for e in g.sorted_edges})

    @classmethod
    def from_matrix(cls, g: Graph, matrix) -> Weights:
        """Build from a full n x n matrix; entries must be symmetric and sit on base edges."""
        n = g.n
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ValueError(f"weight matrix must be {n}x{n}")
        by_edge: dict[Edge, Fraction] = {}
        for i in range(1, n + 1):
            if as_fraction(matrix[i - 1][i - 1]) != 0:
                raise ValueError(f"diagonal entry ({i}, {i}) must be zero")
            for j in range(i + 1, n + 1):
                a_ij = as_fraction(matrix[i - 1][j - 1])
                a_ji = as_fraction(matrix[j - 1][i - 1])
                if a_ij != a_ji:
                    raise ValueError(f"weights must be symmetric, a[{i}][{j}] != a[{j}][{i}]")
                if a_ij == 0:
                    continue
                if (i, j) not in g.edges:
                    raise ValueError(f"positive weight on non-edge ({i}, {j})")
                by_edge[(i, j)] = a_ij
        return cls(n, by_edge)

    def get(self, e: Edge) -> Fraction:
        return self.by_edge.get(e, Fraction(0))


def consensus_step(x: State, g: Graph, w: Weights) -> State:
    """One synchronous update x_i += sum over surviving neighbors of a_ij (x_j - x_i)."""
    if len(x) != g.n or w.n != g.n:
        raise ValueError("state, graph, and weights must agree on agent count")
    deltas = [Fraction(0)] * g.n
    for (i, j) in g.edges:
        a = w.get((i, j))
        if a == 0:
            continue
        diff = a * (x[j - 1] - x[i - 1])
        deltas[i - 1] += diff
        deltas[j - 1] -= diff
    return tuple(x[i] + deltas[i] for i in range(g.n))


def state_difference(x: State) -> Fraction:
    """Total pairwise disagreement sum over i<j of (x_i - x_j)^2; 0 iff all equal."""
    n = len(x)
    total = Fraction(0)
    for i in range(n):
        for j in range(i + 1, n):
            d = x[i] - x[j]
            total += d * d
    return total


def detect_clusters(x: State, tol) -> Partition:
    """Group agents by single linkage on sorted states: a gap > tol splits clusters."""
    tol = as_fraction(tol)
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    order = sorted(range(len(x)), key=lambda i: (x[i], i))
    groups: list[list[int]] = []
    prev = None
    for idx in order:
        if prev is None or x[idx] - prev > tol:
            groups.append([idx + 1])
        else:
            groups[-1].append(idx + 1)
        prev = x[idx]
    groups.sort(key=min)
    return Partition(tuple(frozenset(g) for g in groups))
