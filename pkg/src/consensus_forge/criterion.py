"""Decentralized-fixed-mode consensus criterion.

The rank test sweeps every unstable eigenvalue ``lam`` of ``A`` and every
split ``(alpha, beta)`` of the vertex set, checking

    rank [ I_{N-1} kron (lam I - A)   P_alpha kron B ]
         [ Phi_beta kron I_n          0              ]  >=  (N-1) n.

:func:`dfm_sample` is an independent randomized estimate of the fixed modes
(eigenvalues shared by every block-diagonal closed loop) used as a cross-check.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Protocol
from .transform import build_transformed_system

__all__ = [
    "CriterionVerdict",
    "unstable_modes",
    "rank_test",
    "criterion",
    "dfm_sample",
    "numerical_rank",
]

log = logging.getLogger(__name__)

THREADS_ENV = "CONSENSUS_FORGE_THREADS"


@dataclass
class CriterionVerdict:
    consensus_achievable: bool
    tested_modes: list
    failures: list = field(default_factory=list)
    bipartitions_checked: int = 0
    exhaustive: bool = True


def unstable_modes(A, tol=1e-9):
    """Eigenvalues of ``A`` with real part ``>= -tol``, duplicates within 1e-8 merged."""
    modes = []
    for lam in np.linalg.eigvals(np.asarray(A, dtype=float)):
        if lam.real >= -tol and all(abs(lam - mu) > 1e-8 for mu in modes):
            modes.append(complex(lam))
    return sorted(modes, key=lambda z: (z.real, z.imag))


def numerical_rank(M):
    """Rank from singular values above ``max(shape) * eps * sigma_max``."""
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > max(M.shape) * np.finfo(float).eps * s[0]))


def rank_test(dyn, P0, flows, lam, alpha):
    """Rank of the consensus-criterion block matrix for one mode and one split.

    Parameters
    ----------
    dyn : AgentDynamics
    P0 : (N, N-1) incidence matrix (internal order)
    flows : (N, N-1) array whose row ``q`` is ``w_q Gamma_q`` (internal order)
    lam : complex
    alpha : iterable of internal vertex ids (1-based) supplying inputs;
        the complement supplies outputs.

    Returns
    -------
    (rank, passes)
    """
    A, B = dyn.A, dyn.B
    n, m = dyn.n, dyn.m
    N = P0.shape[0]
    alpha = sorted(set(alpha))
    beta = [q for q in range(1, N + 1) if q not in alpha]
    P_alpha = P0[[q - 1 for q in alpha]].T.reshape(N - 1, len(alpha))
    Phi_beta = flows[[q - 1 for q in beta]].reshape(len(beta), N - 1)
    top = np.hstack([np.kron(np.eye(N - 1), lam * np.eye(n) - A), np.kron(P_alpha, B)])
    bottom = np.hstack(
        [np.kron(Phi_beta, np.eye(n)), np.zeros((len(beta) * n, len(alpha) * m))]
    )
    M = np.vstack([top, bottom]).astype(complex)
    r = numerical_rank(M)
    return r, r >= (N - 1) * n


def _thread_count():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1


def criterion(dyn, topo, tree, exhaustive=True, tol=1e-9):
    """Run the rank test for all unstable modes and all ``2**N`` splits.

    Modes are deduplicated up to conjugation (the rank is conjugation
    invariant for real data).  With ``exhaustive=False`` the sweep stops at
    the first failing split.  Failure witnesses report ``alpha`` in
    external vertex ids.
    """
    ts = build_transformed_system(dyn, topo, tree, Protocol.FULL_NEIGHBOR)
    N = tree.N
    inv = tree.inverse_perm
    modes = [lam for lam in unstable_modes(dyn.A, tol) if lam.imag >= -1e-12]
    verdict = CriterionVerdict(True, modes, exhaustive=exhaustive)
    if not modes:
        return verdict

    def split(mask):
        return [q for q in range(1, N + 1) if mask >> (q - 1) & 1]

    threads = _thread_count()
    for lam in modes:
        def run(mask, lam=lam):
            return mask, rank_test(dyn, ts.P0, ts.flows, lam, split(mask))

        masks = range(2**N)
        if threads > 1 and exhaustive:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(run, masks))
        else:
            results = []
            for mask in masks:
                results.append(run(mask))
                if not exhaustive and not results[-1][1][1]:
                    break
        verdict.bipartitions_checked = max(verdict.bipartitions_checked, len(results))
        for mask, (r, ok) in results:
            if not ok:
                alpha = sorted(inv[q] for q in split(mask))
                verdict.failures.append((lam, alpha, r))
        if verdict.failures and not exhaustive:
            break
    verdict.consensus_achievable = not verdict.failures
    return verdict


def _persistent(base, spectrum, tol):
    # greedy nearest-neighbor pairing of candidates against one closed-loop spectrum
    remaining = list(spectrum)
    kept = []
    for lam in base:
        if not remaining:
            break
        d = np.abs(np.array(remaining) - lam)
        k = int(np.argmin(d))
        if d[k] <= tol:
            kept.append(lam)
            remaining.pop(k)
    return kept


def dfm_sample(ts, trials=8, seed=0, tol=1e-6):
    """Eigenvalues of ``Astar`` that survive ``trials`` random block-diagonal feedbacks.

    Each trial draws every ``K_i`` uniformly from ``[-1, 1]``; the candidate
    set is intersected with each closed-loop spectrum in turn (including
    ``K = 0``).  Multiplicities are respected.
    """
    if trials < 2:
        raise ValueError("dfm_sample needs at least two trials")
    rng = np.random.default_rng(seed)
    N = ts.tree.N
    Cstar = ts.Cstar
    candidates = list(np.linalg.eigvals(ts.Astar))
    for _ in range(trials):
        KD = np.zeros((N * ts.m, N * ts.n))
        for q in range(N):
            KD[q * ts.m : (q + 1) * ts.m, q * ts.n : (q + 1) * ts.n] = rng.uniform(
                -1, 1, (ts.m, ts.n)
            )
        closed = np.linalg.eigvals(ts.Astar + ts.Bstar @ KD @ Cstar)
        candidates = _persistent(candidates, closed, tol)
        if not candidates:
            break
    return sorted((complex(z) for z in candidates), key=lambda z: (z.real, z.imag))
