"""Edge-state transformation of the multi-agent system and closed-loop assembly.

With fundamental edge states ``y_q = x_{k_q} - x_q`` the agents' consensus
problem becomes decentralized output stabilization of

    dy/dt = Astar y + sum_i B_i u_i,    z_i = C_i y,    u_i = K_i z_i

where ``Astar = I_{N-1} kron A``, ``B_i = p_i kron B`` and
``C_i = (w_i Gamma_i) kron I_n``.  Block orderings follow the internal ids of
the renumbered tree (see :mod:`consensus_forge.graph`); gain lists are always
indexed by external agent id.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .exceptions import DimensionMismatch, MissingRootPath
from .graph import Protocol, incidence_matrix, info_flow_matrix, root_path, weighted_flow

__all__ = [
    "AgentDynamics",
    "TransformedSystem",
    "GainSet",
    "build_transformed_system",
    "assemble_closed_loop",
    "closed_loop_product",
    "assemble_dst_closed_loop",
    "agent_to_edge",
    "dst_gains",
]


@dataclass(frozen=True, eq=False)
class AgentDynamics:
    """Common agent model ``dx/dt = A x + B u``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("A and B must be finite")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass
class GainSet:
    """Per-agent feedback gains ``K[i-1]`` (m x n) for agent ``i``.

    For ``DST_ROOT_FEEDBACK`` the root measures ``x_{n_l} - x_root`` where
    ``root_path = [n_1, ..., n_l]`` is the tree path from the root to its
    chosen in-neighbor ``n_l`` and ``root_neighbor_weight = w_{root, n_l}``.
    """

    K: list
    mode: Protocol = Protocol.DST_ONLY
    root_path: list = None
    root_neighbor_weight: float = None
    provenance: str = "injected"

    def __post_init__(self):
        self.mode = Protocol(self.mode)
        self.K = [np.atleast_2d(np.array(k, dtype=float)) for k in self.K]
        if not all(np.all(np.isfinite(k)) for k in self.K):
            raise ValueError("gains must be finite")
        shapes = {k.shape for k in self.K}
        if len(shapes) > 1:
            raise DimensionMismatch(f"gain matrices have mixed shapes {sorted(shapes)}")
        if self.mode is Protocol.DST_ROOT_FEEDBACK:
            if not self.root_path:
                raise MissingRootPath("root feedback gains need a root_path")
        elif self.root_path:
            raise ValueError(f"root_path is only meaningful for {Protocol.DST_ROOT_FEEDBACK.value}")

    @property
    def N(self):
        return len(self.K)

    @property
    def root_neighbor(self):
        return self.root_path[-1] if self.root_path else None

    def check_dims(self, dyn, N):
        if self.N != N:
            raise DimensionMismatch(f"expected {N} gain matrices, got {self.N}")
        if self.K[0].shape != (dyn.m, dyn.n):
            raise DimensionMismatch(
                f"gain matrices must be {dyn.m}x{dyn.n}, got {self.K[0].shape}"
            )


def dst_gains(topo, tree, K, root_neighbor=None, provenance="injected"):
    """GainSet for the tree-only protocol, with root feedback when ``root_neighbor`` is given."""
    if root_neighbor is None:
        return GainSet(K, Protocol.DST_ONLY, provenance=provenance)
    if topo.weight(tree.root, root_neighbor) <= 0:
        raise ValueError(f"vertex {root_neighbor} is not an in-neighbor of root {tree.root}")
    return GainSet(
        K,
        Protocol.DST_ROOT_FEEDBACK,
        root_path=root_path(tree, root_neighbor),
        root_neighbor_weight=topo.weight(tree.root, root_neighbor),
        provenance=provenance,
    )


@dataclass(eq=False)
class TransformedSystem:
    Astar: np.ndarray
    Bstar: np.ndarray
    C_blocks: list
    P0: np.ndarray
    gammas: list
    flows: np.ndarray
    tree: object
    mode: Protocol
    B: np.ndarray
    root_neighbor: int = field(default=None)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def Cstar(self):
        return np.vstack(self.C_blocks)

    def B_block(self, q):
        """Input block of internal agent ``q`` (1-based)."""
        return self.Bstar[:, (q - 1) * self.m : q * self.m]


def build_transformed_system(dyn, topo, tree, mode=Protocol.FULL_NEIGHBOR, root_neighbor=None):
    """Kronecker-structured triple ``(Cstar, Astar, Bstar)`` for ``tree``.

    Lists (``C_blocks``, ``gammas``) and the rows of ``flows`` are in internal
    order, i.e. entry ``q-1`` belongs to external agent ``tree.inverse_perm[q]``.
    """
    if topo.N != tree.N:
        raise DimensionMismatch(f"topology has {topo.N} agents, tree has {tree.N}")
    mode = Protocol(mode)
    N, n = tree.N, dyn.n
    P0 = incidence_matrix(tree)
    inv = tree.inverse_perm
    gammas = [info_flow_matrix(topo, tree, inv[q], mode, root_neighbor) for q in range(1, N + 1)]
    flows = np.array(
        [weighted_flow(topo, tree, inv[q], mode, root_neighbor) for q in range(1, N + 1)]
    )
    In = np.eye(n)
    return TransformedSystem(
        Astar=np.kron(np.eye(N - 1), dyn.A),
        Bstar=np.kron(P0.T, dyn.B),
        C_blocks=[np.kron(flows[q][None, :], In) for q in range(N)],
        P0=P0,
        gammas=gammas,
        flows=flows,
        tree=tree,
        mode=mode,
        B=dyn.B,
        root_neighbor=root_neighbor,
    )


def _internal_gains(ts, gains):
    if gains.N != ts.tree.N:
        raise DimensionMismatch(f"expected {ts.tree.N} gain matrices, got {gains.N}")
    if gains.K[0].shape != (ts.m, ts.n):
        raise DimensionMismatch(f"gain matrices must be {ts.m}x{ts.n}, got {gains.K[0].shape}")
    inv = ts.tree.inverse_perm
    return [gains.K[inv[q] - 1] for q in range(1, ts.tree.N + 1)]


def assemble_closed_loop(ts, gains):
    """``Astar + sum_i (p_i w_i Gamma_i) kron (B K_i)``."""
    Ks = _internal_gains(ts, gains)
    M = ts.Astar.copy()
    for q, K in enumerate(Ks):
        if ts.flows[q].any():
            M += np.kron(np.outer(ts.P0[q], ts.flows[q]), ts.B @ K)
    return M


def closed_loop_product(ts, gains):
    """Same matrix as :func:`assemble_closed_loop` via ``Astar + Bstar K_D Cstar``."""
    KD = block_diag(*_internal_gains(ts, gains))
    return ts.Astar + ts.Bstar @ KD @ ts.Cstar


def assemble_dst_closed_loop(dyn, topo, tree, gains):
    """Edge-state closed loop of the tree-only protocols, built block row by block row.

    Row ``j`` (fundamental edge into internal vertex ``j``) collects, in this
    order: its own diagonal ``A - w_{j,k_j} B K_j``, the parent term
    ``+w_{k_j,k(k_j)} B K_{k_j}`` when the parent is not the root, and, under
    root feedback, ``-w_{N,n_l} B K_N`` at every path column ``n_1..n_l`` when the
    parent is the root.
    """
    mode = Protocol(gains.mode)
    if mode is Protocol.FULL_NEIGHBOR:
        raise ValueError("assemble_dst_closed_loop handles the tree-only protocols")
    if topo.N != tree.N:
        raise DimensionMismatch(f"topology has {topo.N} agents, tree has {tree.N}")
    gains.check_dims(dyn, tree.N)
    if mode is Protocol.DST_ROOT_FEEDBACK and not gains.root_path:
        raise MissingRootPath("root feedback gains need a root_path")
    if not tree.is_conforming():
        raise ValueError("tree must be renumbered first (see renumber)")

    A, B, n = dyn.A, dyn.B, dyn.n
    N = tree.N
    M = np.zeros(((N - 1) * n, (N - 1) * n))

    def blk(r, c):
        return (slice((r - 1) * n, r * n), slice((c - 1) * n, c * n))

    BK = {v: B @ gains.K[v - 1] for v in range(1, N + 1)}
    for c, p in tree.parent.items():
        j = tree.perm[c]
        M[blk(j, j)] += A - tree.edge_weight[c] * BK[c]
        if p != tree.root:
            M[blk(j, tree.perm[p])] += tree.edge_weight[p] * BK[p]
        elif mode is Protocol.DST_ROOT_FEEDBACK:
            for v in gains.root_path:
                M[blk(j, tree.perm[v])] -= gains.root_neighbor_weight * BK[tree.root]
    return M


def agent_to_edge(tree, X):
    """Stack fundamental edge states ``x_{k_q} - x_q`` in internal edge order.

    ``X`` has shape ``(..., N, n)`` with agents in external order; the result
    has shape ``(..., (N-1) n)``.
    """
    X = np.asarray(X, dtype=float)
    inv = tree.inverse_perm
    children = [inv[q] - 1 for q in range(1, tree.N)]
    parents = [tree.parent[c + 1] - 1 for c in children]
    Y = X[..., parents, :] - X[..., children, :]
    return Y.reshape(*X.shape[:-2], -1)
