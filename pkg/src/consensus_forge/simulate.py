"""Fixed-step RK4 simulation in agent and edge coordinates."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, NonFiniteState
from .graph import Protocol
from .transform import agent_to_edge

__all__ = [
    "SimulationResult",
    "rk4",
    "protocol_weights",
    "agent_closed_loop",
    "integrate_agents",
    "integrate_edges",
    "consensus_error",
    "consensus_verdict",
]

DIVERGENCE_LIMIT = 1e12


def _steps(dt, T):
    if dt <= 0 or T < dt:
        raise ValueError(f"need dt > 0 and T >= dt, got dt={dt}, T={T}")
    return int(math.floor(T / dt + 1e-9))


def rk4(f, x0, dt, steps):
    """Classical fourth-order Runge-Kutta for ``dx/dt = f(t, x)``.

    Returns the ``(steps + 1, len(x0))`` array of samples at ``t = k dt``.
    """
    x = np.array(x0, dtype=float)
    out = np.empty((steps + 1, x.size))
    out[0] = x
    t = 0.0
    for k in range(1, steps + 1):
        k1 = f(t, x)
        k2 = f(t + dt / 2, x + dt / 2 * k1)
        k3 = f(t + dt / 2, x + dt / 2 * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.abs(x) <= DIVERGENCE_LIMIT):
            raise NonFiniteState(f"state left |x| <= {DIVERGENCE_LIMIT:g} at t = {k * dt:g}")
        out[k] = x
        t = k * dt
    return out


def protocol_weights(topo, tree, gains):
    """``C[i-1, j-1]``: weight agent ``i`` puts on ``x_j - x_i`` under ``gains.mode``."""
    N = topo.N
    mode = Protocol(gains.mode)
    if mode is Protocol.FULL_NEIGHBOR:
        return np.array(topo.W)
    C = np.zeros((N, N))
    for c, p in tree.parent.items():
        C[c - 1, p - 1] = tree.edge_weight[c]
    if mode is Protocol.DST_ROOT_FEEDBACK:
        C[tree.root - 1, gains.root_neighbor - 1] = gains.root_neighbor_weight
    return C


def agent_closed_loop(dyn, topo, tree, gains):
    """``(F, G)`` with ``dx/dt = F x`` and ``u = G x`` for the stacked agent state."""
    gains.check_dims(dyn, topo.N)
    N, n = topo.N, dyn.n
    C = protocol_weights(topo, tree, gains)
    G = np.zeros((N * dyn.m, N * n))
    for i in range(N):
        K = gains.K[i]
        rows = slice(i * dyn.m, (i + 1) * dyn.m)
        for j in np.flatnonzero(C[i]):
            G[rows, j * n : (j + 1) * n] += C[i, j] * K
        G[rows, i * n : (i + 1) * n] -= C[i].sum() * K
    F = np.kron(np.eye(N), dyn.A) + np.kron(np.eye(N), dyn.B) @ G
    return F, G


@dataclass
class SimulationResult:
    """Sampled trajectories; agents are in external order, edges in internal order.

    ``agents`` has shape ``(S, N, n)``, ``edges`` ``(S, N-1, n)``, ``controls``
    ``(S, N, m)`` and ``consensus_error`` ``(S,)``.
    """

    times: np.ndarray
    agents: np.ndarray
    edges: np.ndarray
    controls: np.ndarray
    consensus_error: np.ndarray

    def verdict(self, tol):
        return consensus_verdict(self.consensus_error, tol)


def integrate_agents(dyn, topo, tree, gains, x0, dt=0.01, T=15.0):
    """Simulate all agents under the protocol selected by ``gains.mode``."""
    x0 = np.asarray(x0, dtype=float)
    N, n = topo.N, dyn.n
    if x0.size != N * n:
        raise DimensionMismatch(f"x0 needs {N * n} entries, got {x0.size}")
    if not np.all(np.isfinite(x0)):
        raise NonFiniteState("initial state is not finite")
    F, G = agent_closed_loop(dyn, topo, tree, gains)
    steps = _steps(dt, T)
    X = rk4(lambda t, x: F @ x, x0.ravel(), dt, steps)
    agents = X.reshape(steps + 1, N, n)
    return SimulationResult(
        times=np.arange(steps + 1) * dt,
        agents=agents,
        edges=agent_to_edge(tree, agents).reshape(steps + 1, N - 1, n),
        controls=(X @ G.T).reshape(steps + 1, N, dyn.m),
        consensus_error=consensus_error(agents),
    )


def integrate_edges(M, y0, dt=0.01, T=15.0):
    """RK4 on ``dy/dt = M y``; returns ``(times, Y)`` with ``Y`` of shape ``(S, len(y0))``."""
    M = np.asarray(M, dtype=float)
    steps = _steps(dt, T)
    Y = rk4(lambda t, y: M @ y, np.asarray(y0, dtype=float).ravel(), dt, steps)
    return np.arange(steps + 1) * dt, Y


def consensus_error(agents):
    """Largest pairwise distance ``max_ij ||x_i - x_j||`` at each sample."""
    agents = np.asarray(agents, dtype=float)
    diff = agents[..., :, None, :] - agents[..., None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1)).max(axis=(-2, -1))


def consensus_verdict(eps, tol):
    """True when the final error is at most ``tol * (1 + eps[0])``."""
    eps = np.asarray(eps)
    return bool(eps[-1] <= tol * (1 + eps[0]))
