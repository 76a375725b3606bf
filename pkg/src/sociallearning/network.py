"""Directed weighted communication network: validation and spectral structure.

Edge convention: ``W[i, j] > 0`` means node j sends to node i (j is an
in-neighbor of i), and each row of W sums to 1.  The transpose convention is a
common bug; every function in this module assumes rows index receivers.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import gcd

import numpy as np

ROW_SUM_TOL = 1e-9
EIGEN_RESIDUAL_TOL = 1e-10


class NegativeWeight(ValueError):
    """A weight entry is negative."""


class RowSumViolation(ValueError):
    """A row of the weight matrix deviates from sum 1 beyond tolerance."""


class NotStronglyConnected(ValueError):
    """Operation requires a strongly connected network."""


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic weight matrix over n nodes.

    w[i, j] is the confidence node i places on messages from node j.
    Construct through :func:`validate_stochastic`.
    """
    w: np.ndarray

    @property
    def n(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class CentralityVector:
    """Normalized left eigenvector of W at eigenvalue 1 (all entries > 0)."""
    v: np.ndarray


@dataclass(frozen=True)
class GraphStructure:
    """Connectivity, period d and the cyclic classes (A_1, ..., A_d).

    cyclic_classes[r-1] holds the nodes whose directed paths to the reference
    node have length congruent to r modulo d (the reference node itself sits
    in the last cell, path length 0 mod d).
    """
    strongly_connected: bool
    period: int
    cyclic_classes: tuple[tuple[int, ...], ...]


def validate_stochastic(w) -> StochasticMatrix:
    """Validate a raw square matrix as row-stochastic and freeze it.

    Rows within ``ROW_SUM_TOL`` of 1 are renormalized exactly; anything
    further off raises ``RowSumViolation``.
    """
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError("need at least one node")
    if (arr < 0).any():
        i, j = np.argwhere(arr < 0)[0]
        raise NegativeWeight(f"W[{i},{j}] = {arr[i, j]} is negative")
    sums = arr.sum(axis=1)
    bad = np.abs(sums - 1.0) > ROW_SUM_TOL
    if bad.any():
        i = int(np.argmax(bad))
        raise RowSumViolation(f"row {i} sums to {sums[i]}, expected 1")
    arr = arr / sums[:, None]
    arr.setflags(write=False)
    return StochasticMatrix(w=arr)


def _successors(m: StochasticMatrix) -> list[list[int]]:
    """succ[u] = receivers of u's messages, i.e. {i : W[i, u] > 0}."""
    return [list(np.nonzero(m.w[:, u])[0]) for u in range(m.n)]


def _predecessors(m: StochasticMatrix) -> list[list[int]]:
    """pred[i] = senders to i, i.e. {j : W[i, j] > 0}."""
    return [list(np.nonzero(m.w[i, :])[0]) for i in range(m.n)]


def _bfs_reach(adj: list[list[int]], start: int) -> np.ndarray:
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for vtx in adj[u]:
            if not seen[vtx]:
                seen[vtx] = True
                queue.append(vtx)
    return seen


def is_strongly_connected(m: StochasticMatrix) -> bool:
    """True iff every ordered node pair is joined by a positive-weight path."""
    if m.n == 1:
        return True
    return bool(_bfs_reach(_successors(m), 0).all()
                and _bfs_reach(_predecessors(m), 0).all())


def _bfs_levels(adj: list[list[int]], start: int) -> np.ndarray:
    level = np.full(len(adj), -1, dtype=np.int64)
    level[start] = 0
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for vtx in adj[u]:
            if level[vtx] < 0:
                level[vtx] = level[u] + 1
                queue.append(vtx)
    return level


def period(m: StochasticMatrix) -> int:
    """Period of the chain: gcd of directed cycle lengths.

    BFS level sets give it exactly: every edge u -> v contributes
    gcd(level(u) + 1 - level(v)); O(n + edges), no matrix powers.
    """
    if not is_strongly_connected(m):
        raise NotStronglyConnected("period is undefined for disconnected networks")
    succ = _successors(m)
    level = _bfs_levels(succ, 0)
    d = 0
    for u in range(m.n):
        for vtx in succ[u]:
            d = gcd(d, int(level[u] + 1 - level[vtx]))
    return abs(d) if d else 1


def cyclic_classes(m: StochasticMatrix, ref_node: int = 0) -> GraphStructure:
    """Partition nodes by path-length-to-reference modulo the period.

    Node j lands in cell r (1-based) when its directed paths to ``ref_node``
    have length = r mod d.  With d = 1 there is a single cell.
    """
    if not 0 <= ref_node < m.n:
        raise ValueError(f"ref_node {ref_node} out of range for n={m.n}")
    if not is_strongly_connected(m):
        raise NotStronglyConnected("cyclic classes require strong connectivity")
    d = period(m)
    # distance j -> ref equals BFS level of j when edges are walked backwards
    dist_to_ref = _bfs_levels(_predecessors(m), ref_node)
    cells: list[list[int]] = [[] for _ in range(d)]
    for j in range(m.n):
        r = int(dist_to_ref[j]) % d          # 0 stands for the class of ref
        cells[(r - 1) % d].append(j)
    return GraphStructure(
        strongly_connected=True,
        period=d,
        cyclic_classes=tuple(tuple(c) for c in cells),
    )


def stationary_distribution(m: StochasticMatrix) -> CentralityVector:
    """Unique v with v = vW, sum 1, all entries positive.

    Direct least-squares solve of (W^T - I)v = 0 stacked with the
    normalization row.  Power iteration is deliberately avoided: it diverges
    on periodic chains, which this protocol supports.
    """
    if not is_strongly_connected(m):
        raise NotStronglyConnected("stationary distribution requires irreducibility")
    n = m.n
    a = np.vstack([m.w.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(a, b, rcond=None)
    v = v / v.sum()
    residual = np.max(np.abs(v @ m.w - v))
    if residual > EIGEN_RESIDUAL_TOL:
        raise ArithmeticError(f"eigenvector residual {residual} above tolerance")
    if (v <= 0).any():
        raise ArithmeticError("stationary vector has a nonpositive entry")
    v.setflags(write=False)
    return CentralityVector(v=v)
