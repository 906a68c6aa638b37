"""Weighted digraphs, directed spanning trees and the edge-state coordinates.

Vertex ids are 1-based throughout, as in the usual graph notation.  A
:class:`SpanningTree` keeps external ids (the rows of ``W``) and carries a
permutation ``perm`` to internal ids in which every parent has a larger id
than its children and the root is ``N``.  Matrices built here (incidence,
information flow) are always laid out in internal order: row/column ``q``
belongs to internal vertex ``q`` and fundamental edge ``q`` is the tree edge
entering internal vertex ``q``.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import NoSpanningTree

__all__ = [
    "Protocol",
    "Topology",
    "SpanningTree",
    "find_roots",
    "extract_dst",
    "renumber",
    "incidence_matrix",
    "gamma_vector",
    "info_flow_matrix",
    "weighted_flow",
    "root_path",
]


class Protocol(str, Enum):
    """Which neighbor information each agent feeds back."""

    FULL_NEIGHBOR = "full-neighbor"
    DST_ONLY = "dst-only"
    DST_ROOT_FEEDBACK = "dst-root-feedback"


@dataclass(frozen=True, eq=False)
class Topology:
    """Weighted directed communication graph.

    ``W[i-1, j-1] > 0`` means agent ``j`` sends information to agent ``i``
    (edge ``(j, i)``); entries equal to zero are absent edges.
    """

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {W.shape}")
        if W.shape[0] < 2:
            raise ValueError("a topology needs at least two agents")
        if not np.all(np.isfinite(W)):
            raise ValueError("adjacency weights must be finite")
        if np.any(W < 0):
            raise ValueError("adjacency weights must be non-negative")
        if np.any(np.diag(W) != 0):
            raise ValueError("self-loops (nonzero diagonal weights) are not allowed")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @property
    def N(self):
        return self.W.shape[0]

    def weight(self, i, j):
        """Weight ``w_ij`` of the edge from ``j`` into ``i``."""
        return float(self.W[i - 1, j - 1])

    def neighbors(self, i):
        """In-neighbors of ``i``: the agents ``i`` receives information from."""
        return [int(j) + 1 for j in np.flatnonzero(self.W[i - 1] > 0)]

    def out_neighbors(self, j):
        return [int(i) + 1 for i in np.flatnonzero(self.W[:, j - 1] > 0)]


@dataclass(frozen=True)
class SpanningTree:
    """Directed spanning tree given by a parent map in external ids."""

    root: int
    parent: dict
    edge_weight: dict
    perm: dict = field(default=None)

    def __post_init__(self):
        n = len(self.parent) + 1
        if self.perm is None:
            object.__setattr__(self, "perm", {v: v for v in range(1, n + 1)})
        if sorted(self.perm) != list(range(1, n + 1)) or sorted(
            self.perm.values()
        ) != list(range(1, n + 1)):
            raise ValueError("perm must be a bijection on 1..N")
        for v in self.parent:
            # reachability from the root by walking parents
            seen = set()
            u = v
            while u != self.root:
                if u in seen or u not in self.parent:
                    raise ValueError(f"vertex {v} is not connected to root {self.root}")
                seen.add(u)
                u = self.parent[u]

    @property
    def N(self):
        return len(self.parent) + 1

    @property
    def inverse_perm(self):
        """Internal id -> external id."""
        return {q: v for v, q in self.perm.items()}

    def children(self, v):
        return sorted(c for c, p in self.parent.items() if p == v)

    def edges(self):
        """Fundamental edges ``(parent, child)`` in external ids, internal edge order."""
        inv = self.inverse_perm
        return [(self.parent[inv[q]], inv[q]) for q in range(1, self.N)]

    def is_conforming(self):
        return self.perm[self.root] == self.N and all(
            self.perm[p] > self.perm[c] for c, p in self.parent.items()
        )

    def depth(self, v):
        d = 0
        while v != self.root:
            v = self.parent[v]
            d += 1
        return d


def _reachable(topo, start):
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in topo.out_neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def find_roots(topo):
    """All vertices from which every other vertex is reachable."""
    return [r for r in range(1, topo.N + 1) if len(_reachable(topo, r)) == topo.N]


def extract_dst(topo, root=None):
    """Breadth-first spanning tree, ties broken by ascending vertex id.

    Raises
    ------
    NoSpanningTree
        If no vertex reaches all others, or ``root`` does not.
    """
    if root is None:
        roots = find_roots(topo)
        if not roots:
            raise NoSpanningTree("the topology has no directed spanning tree")
        root = roots[0]
    if not 1 <= root <= topo.N:
        raise ValueError(f"root {root} outside 1..{topo.N}")

    parent = {}
    seen = {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in topo.out_neighbors(u):
            if v not in seen:
                seen.add(v)
                parent[v] = u
                queue.append(v)
    if len(seen) != topo.N:
        missing = sorted(set(range(1, topo.N + 1)) - seen)
        raise NoSpanningTree(f"vertices {missing} are unreachable from root {root}")
    weights = {v: topo.weight(v, p) for v, p in parent.items()}
    return SpanningTree(root=root, parent=parent, edge_weight=weights)


def renumber(tree):
    """Return a tree whose ``perm`` puts every parent after its children.

    A tree that already conforms is returned unchanged.  Otherwise internal
    ids follow the reverse of a breadth-first order from the root (children
    visited in ascending external id), so the root becomes ``N``.
    """
    if tree.is_conforming():
        return tree
    order = [tree.root]
    queue = deque([tree.root])
    while queue:
        u = queue.popleft()
        for c in tree.children(u):
            order.append(c)
            queue.append(c)
    perm = {v: tree.N - k for k, v in enumerate(order)}
    return SpanningTree(tree.root, dict(tree.parent), dict(tree.edge_weight), perm)


def _require_conforming(tree):
    if not tree.is_conforming():
        raise ValueError("tree must be renumbered first (see renumber)")


def incidence_matrix(tree):
    """Node-by-fundamental-edge incidence matrix ``P0`` in internal order.

    ``+1`` marks the parent (tail) of an edge, ``-1`` its child (head).
    """
    _require_conforming(tree)
    N = tree.N
    P0 = np.zeros((N, N - 1), dtype=int)
    for c, p in tree.parent.items():
        q = tree.perm[c] - 1
        P0[q, q] = -1
        P0[tree.perm[p] - 1, q] = 1
    return P0


def _path_indicator(tree, v):
    # edges on the tree path from the root down to v, as an internal-order 0/1 vector
    ind = np.zeros(tree.N - 1, dtype=int)
    while v != tree.root:
        ind[tree.perm[v] - 1] = 1
        v = tree.parent[v]
    return ind


def gamma_vector(tree, j, i):
    """Row vector ``g`` with ``x_j - x_i = (g kron I_n) y``.

    Since ``x_root - x_v`` is the sum of the edge states on the root-to-``v``
    path, ``g`` is the path indicator of ``i`` minus that of ``j``; the edges
    above the lowest common ancestor cancel.
    """
    _require_conforming(tree)
    if i == j:
        raise ValueError("gamma_vector needs two distinct vertices")
    return _path_indicator(tree, i) - _path_indicator(tree, j)


def root_path(tree, v):
    """Vertices ``n_1, ..., n_l = v`` on the tree path from the root to ``v``."""
    path = []
    while v != tree.root:
        path.append(v)
        v = tree.parent[v]
    return path[::-1]


def info_flow_matrix(topo, tree, i, mode=Protocol.FULL_NEIGHBOR, root_neighbor=None):
    """Information flow matrix of agent ``i`` (external id), rows in internal order.

    ``DST_ROOT_FEEDBACK`` behaves like ``DST_ONLY`` except that the root keeps
    the single row of its chosen in-neighbor ``root_neighbor``.
    """
    _require_conforming(tree)
    mode = Protocol(mode)
    N = tree.N
    if topo.N != N:
        raise ValueError(f"topology has {topo.N} agents, tree has {N}")
    G = np.zeros((N, N - 1), dtype=int)
    if mode is Protocol.FULL_NEIGHBOR:
        for j in topo.neighbors(i):
            G[tree.perm[j] - 1] = gamma_vector(tree, j, i)
    elif i != tree.root:
        G[tree.perm[tree.parent[i]] - 1, tree.perm[i] - 1] = 1
    elif mode is Protocol.DST_ROOT_FEEDBACK:
        if root_neighbor is None:
            raise ValueError("root feedback needs a root_neighbor")
        G[tree.perm[root_neighbor] - 1] = gamma_vector(tree, root_neighbor, i)
    return G


def weighted_flow(topo, tree, i, mode=Protocol.FULL_NEIGHBOR, root_neighbor=None):
    """Row vector ``w_i Gamma_i``: agent ``i``'s measurement in edge coordinates."""
    G = info_flow_matrix(topo, tree, i, mode, root_neighbor)
    inv = tree.inverse_perm
    w = np.array([topo.weight(i, inv[q]) for q in range(1, tree.N + 1)])
    return w @ G
