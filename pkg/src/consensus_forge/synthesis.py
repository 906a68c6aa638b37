"""Gain synthesis for the tree-only consensus protocols.

Two designs are provided:

* :func:`design_theorem2` -- the tree root receives nothing, so the edge-state
  closed loop is block triangular and each agent only has to make
  ``A - w_{i,k_i} B K_i`` Hurwitz (done here by eigenvalue assignment).
* :func:`design_theorem3` -- the root feeds back the state of one of its
  in-neighbors.  Gains are chosen agent by agent from the root outwards until
  every block row passes a block-Gershgorin test; the assembled matrix's
  spectrum is the final certificate.

:func:`gershgorin_check` evaluates each block row two ways: the row-sum
surrogate (the smallest absolute row sum of ``M_jj - i w I``) and the rigorous
bound ``1 / ||(M_jj - i w I)^{-1}||_inf``.  Both are minimized over a frequency
grid on the imaginary axis.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import (
    BadTargets,
    NonSquareBlocks,
    RootHasNeighbors,
    RootHasNoNeighbors,
    SynthesisFailed,
    Uncontrollable,
)
from .graph import Protocol
from .transform import GainSet, assemble_dst_closed_loop, dst_gains

__all__ = [
    "GershgorinRow",
    "GershgorinReport",
    "controllability_matrix",
    "place_poles",
    "default_targets",
    "design_theorem2",
    "gershgorin_check",
    "design_theorem3",
    "spectral_abscissa",
]

OMEGA_POINTS = 2001


def controllability_matrix(A, B):
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def spectral_abscissa(M):
    if M.size == 0:
        return -math.inf
    return float(np.max(np.linalg.eigvals(M).real))


def _check_targets(targets, n):
    targets = np.asarray(targets, dtype=complex).ravel()
    if targets.size != n:
        raise BadTargets(f"need {n} target poles, got {targets.size}")
    if np.any(targets.real >= 0):
        raise BadTargets("target poles must have strictly negative real parts")
    scale = 1.0 + np.max(np.abs(targets))
    conj = np.sort_complex(np.conj(targets))
    if np.max(np.abs(np.sort_complex(targets) - conj)) > 1e-9 * scale:
        raise BadTargets("target poles must be closed under complex conjugation")
    return targets


def _ackermann(A, b, targets):
    n = A.shape[0]
    coeffs = np.real(np.poly(targets))
    phi = np.zeros_like(A)
    for c in coeffs:
        phi = phi @ A + c * np.eye(n)
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    row = np.linalg.solve(controllability_matrix(A, b).T, e_n)
    return (row @ phi)[None, :]


def place_poles(A, B, targets, seed=0):
    """Gain ``K`` with ``eig(A - B K) == targets``.

    Single-input pairs use Ackermann's formula.  Multi-input pairs are reduced
    to a single input ``B v`` (``v`` random, seeded); if no such ``v`` gives a
    controllable pair, a random pre-feedback ``F`` is applied first so that
    ``A - B F`` is cyclic, and ``K = F + v k``.

    Raises
    ------
    Uncontrollable
        If ``(A, B)`` is not controllable.
    BadTargets
        If the targets are not conjugate-closed or not strictly stable.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    n, m = B.shape
    targets = _check_targets(targets, n)
    if np.linalg.matrix_rank(controllability_matrix(A, B)) < n:
        raise Uncontrollable("the pair (A, B) is not controllable")
    if m == 1:
        return _ackermann(A, B, targets)

    rng = np.random.default_rng(seed)
    F = np.zeros((m, n))
    for attempt in range(50):
        v = rng.uniform(-1, 1, m)
        v /= np.linalg.norm(v)
        Af = A - B @ F
        b = (B @ v)[:, None]
        if np.linalg.matrix_rank(controllability_matrix(Af, b)) == n:
            return F + np.outer(v, _ackermann(Af, b, targets))
        F = rng.standard_normal((m, n))
    raise Uncontrollable("could not reduce (A, B) to a controllable single-input pair")


def default_targets(A, depth=1.0):
    """Stable pole pattern used when the caller gives none.

    Pairs ``-depth (1 + q/2) +/- i w_q`` for ``q = 0 .. ceil(n/2)-1``, where
    ``w_q`` are the imaginary parts of ``A``'s eigenvalues in decreasing order.
    Where ``A`` runs out of oscillatory modes the pair is replaced by two
    distinct real poles; odd ``n`` ends with a single real pole.
    """
    n = A.shape[0]
    omegas = sorted((lam.imag for lam in np.linalg.eigvals(A) if lam.imag > 1e-12), reverse=True)
    poles = []
    for q in range(math.ceil(n / 2)):
        re = -depth * (1 + 0.5 * q)
        if n - len(poles) == 1:
            poles.append(complex(re))
        elif q < len(omegas):
            poles += [complex(re, omegas[q]), complex(re, -omegas[q])]
        else:
            poles += [complex(re), complex(re - 0.25 * depth)]
    return poles


def design_theorem2(dyn, topo, tree, target_poles=None, seed=0):
    """Tree-only gains for a root that receives no information.

    ``target_poles`` maps external agent id to its ``n`` desired closed-loop
    poles; agents without an entry get :func:`default_targets`.  The root's
    gain is zero.
    """
    if topo.neighbors(tree.root):
        raise RootHasNeighbors(
            f"root {tree.root} receives from {topo.neighbors(tree.root)}; use design_theorem3"
        )
    target_poles = target_poles or {}
    K = [np.zeros((dyn.m, dyn.n)) for _ in range(tree.N)]
    for c in sorted(tree.parent):
        targets = target_poles.get(c)
        if targets is None:
            targets = default_targets(dyn.A)
        K[c - 1] = place_poles(dyn.A, tree.edge_weight[c] * dyn.B, targets, seed=seed)
    return GainSet(K, Protocol.DST_ONLY, provenance="theorem2")


@dataclass
class GershgorinRow:
    block: int
    radius: float
    hurwitz: bool
    surrogate_value: float
    surrogate_pass: bool
    resolvent_value: float
    resolvent_pass: bool
    omega_min: float
    omega_bound: float
    grid_points: int


@dataclass
class GershgorinReport:
    rows: list
    surrogate_all: bool
    resolvent_all: bool
    eigenvalue_certificate: bool
    spectral_abscissa: float
    iterations: int = field(default=None)


def _inf_norm(M):
    return float(np.max(np.sum(np.abs(M), axis=-1))) if M.size else 0.0


def _surrogate(D, omegas):
    shifted = D[None, :, :] - 1j * omegas[:, None, None] * np.eye(D.shape[0])
    return np.min(np.sum(np.abs(shifted), axis=2), axis=1)


def _resolvent(D, omegas):
    shifted = D[None, :, :] - 1j * omegas[:, None, None] * np.eye(D.shape[0])
    out = np.zeros(len(omegas))
    # a singular shift means an eigenvalue on the axis: bound 0
    ok = np.abs(np.linalg.det(shifted)) > 0
    if ok.any():
        inv = np.linalg.inv(shifted[ok])
        out[ok] = 1.0 / np.max(np.sum(np.abs(inv), axis=2), axis=1)
    return out


def _grid_min(fn, D, bound, points, refine):
    omegas = np.linspace(-bound, bound, points)
    values = fn(D, omegas)
    k = int(np.argmin(values))
    best, where = float(values[k]), float(omegas[k])
    if refine and 0 < k < points - 1:
        res = minimize_scalar(
            lambda w: float(fn(D, np.array([w]))[0]),
            bounds=(omegas[k - 1], omegas[k + 1]),
            method="bounded",
            options={"xatol": 1e-10},
        )
        if res.fun < best:
            best, where = float(res.fun), float(res.x)
    return best, where


def _row_check(D, radius, block=0, points=OMEGA_POINTS, refine=True):
    hurwitz = spectral_abscissa(D) < 0
    bound = _inf_norm(D) + radius + 1.0
    s_val, _ = _grid_min(_surrogate, D, bound, points, refine)
    r_val, w_min = _grid_min(_resolvent, D, bound, points, refine)
    return GershgorinRow(
        block=block,
        radius=radius,
        hurwitz=hurwitz,
        surrogate_value=s_val,
        surrogate_pass=bool(hurwitz and s_val > radius),
        resolvent_value=r_val,
        resolvent_pass=bool(hurwitz and r_val > radius),
        omega_min=w_min,
        omega_bound=bound,
        grid_points=points,
    )


def gershgorin_check(M, n, points=OMEGA_POINTS, refine=True):
    """Block-Gershgorin report for ``M`` partitioned into ``n x n`` blocks.

    Row ``j``'s radius is the sum of ``||M_jk||_inf`` over ``k != j``.  A row
    passes when its diagonal block is Hurwitz and the bound (surrogate or
    resolvent) stays above the radius along the sampled imaginary axis
    ``|w| <= ||M_jj||_inf + r_j + 1``; beyond that range the resolvent bound
    exceeds ``|w| - ||M_jj||_inf > r_j`` automatically.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or n <= 0 or M.shape[0] % n:
        raise NonSquareBlocks(f"cannot split shape {M.shape} into {n}x{n} blocks")
    nb = M.shape[0] // n
    rows = []
    for j in range(nb):
        band = M[j * n : (j + 1) * n]
        D = band[:, j * n : (j + 1) * n]
        radius = sum(_inf_norm(band[:, k * n : (k + 1) * n]) for k in range(nb) if k != j)
        rows.append(_row_check(D, radius, j + 1, points, refine))
    abscissa = spectral_abscissa(M)
    return GershgorinReport(
        rows=rows,
        surrogate_all=all(r.surrogate_pass for r in rows),
        resolvent_all=all(r.resolvent_pass for r in rows),
        eigenvalue_certificate=abscissa < 0,
        spectral_abscissa=abscissa,
    )


def _pick_root_neighbor(topo, tree):
    candidates = topo.neighbors(tree.root)
    if not candidates:
        raise RootHasNoNeighbors(f"root {tree.root} has no in-neighbor to feed back")
    return min(candidates, key=lambda v: (tree.depth(v), v))


def design_theorem3(
    dyn,
    topo,
    tree,
    root_neighbor=None,
    initial_depth=0.05,
    root_depth=None,
    growth=1.25,
    max_iter=60,
    mode="resolvent",
    seed=0,
    points=OMEGA_POINTS,
):
    """Root-feedback gains designed agent by agent from the root outwards.

    1. The root gain ``K_N`` is placed shallowly (poles at depth
       ``root_depth``, default ``initial_depth``) for the pair
       ``(A, w_{N,n_l} B)``.
    2. Agents are then visited in breadth-first order.  Each agent's row
       radius depends only on gains already fixed (its parent's, or ``K_N``
       for children of the root), so its pole depth starts at
       ``initial_depth`` and is multiplied by ``growth`` until the row passes
       the ``mode`` test (``"resolvent"`` or ``"surrogate"``).  The child of
       the root lying on the feedback path is placed against
       ``A - w_{N,n_l} B K_N``, which is what its diagonal block contains.
    3. The assembled matrix must be Hurwitz; otherwise the design fails.

    An ``initial_depth`` of 0 starts every agent from the zero gain.

    Returns
    -------
    (GainSet, GershgorinReport)

    Raises
    ------
    SynthesisFailed
        When some row cannot pass within ``max_iter`` deepenings, or the
        certificate fails.  ``exc.report`` is the last report.
    """
    if mode not in ("resolvent", "surrogate"):
        raise ValueError(f"mode must be 'resolvent' or 'surrogate', got {mode!r}")
    if root_neighbor is None:
        root_neighbor = _pick_root_neighbor(topo, tree)
    elif topo.weight(tree.root, root_neighbor) <= 0:
        raise RootHasNoNeighbors(f"{root_neighbor} is not an in-neighbor of root {tree.root}")
    A, B = dyn.A, dyn.B
    root = tree.root
    w_root = topo.weight(root, root_neighbor)
    K = [np.zeros((dyn.m, dyn.n)) for _ in range(tree.N)]

    def gains_at(depth, Abase, Bc):
        if depth == 0:
            return np.zeros((dyn.m, dyn.n))
        return place_poles(Abase, Bc, default_targets(A, depth), seed=seed)

    K[root - 1] = gains_at(initial_depth if root_depth is None else root_depth, A, w_root * B)
    gains = dst_gains(topo, tree, K, root_neighbor, provenance="theorem3")
    path = gains.root_path
    BKroot = w_root * B @ K[root - 1]

    order = []
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for c in tree.children(u):
                order.append(c)
                nxt.append(c)
        frontier = nxt

    passes = "resolvent_pass" if mode == "resolvent" else "surrogate_pass"
    iterations = 0
    for c in order:
        p = tree.parent[c]
        Bc = tree.edge_weight[c] * B
        if p == root:
            Abase = A - BKroot if c in path else A
            radius = _inf_norm(BKroot) * sum(1 for v in path if v != c)
        else:
            Abase = A
            radius = _inf_norm(tree.edge_weight[p] * B @ K[p - 1])
        depth = initial_depth
        for tries in range(max_iter + 1):
            K[c - 1] = gains_at(depth, Abase, Bc)
            row = _row_check(Abase - Bc @ K[c - 1], radius, tree.perm[c], points)
            if getattr(row, passes):
                break
            depth = depth * growth if depth else 0.05
        else:
            gains.K = K
            M = assemble_dst_closed_loop(dyn, topo, tree, gains)
            raise SynthesisFailed(
                f"agent {c}: {mode} circle test still fails after {max_iter} deepenings",
                report=gershgorin_check(M, dyn.n, points),
                gains=gains,
            )
        iterations = max(iterations, tries)

    gains.K = K
    M = assemble_dst_closed_loop(dyn, topo, tree, gains)
    report = gershgorin_check(M, dyn.n, points)
    report.iterations = iterations
    if not report.eigenvalue_certificate:
        raise SynthesisFailed("assembled closed loop is not Hurwitz", report=report, gains=gains)
    return gains, report
