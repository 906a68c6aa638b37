"""Built-in scenarios: the two published four- and six-agent examples.

Both use the oscillator ``A = [[0, 1], [-1, 0]]``, ``B = [1, 1]^T`` and unit
edge weights.  The six-agent topology contains only the tree edges plus the
single edge ``1 -> 6`` into the root.
"""

import numpy as np

from .graph import Protocol, Topology
from .scenario import DesignSettings, Scenario, ScenarioGains, SimSettings
from .transform import AgentDynamics

__all__ = ["oscillator", "example1", "example2", "example2_k6zero", "FIXTURES"]


def oscillator():
    return AgentDynamics([[0.0, 1.0], [-1.0, 0.0]], [[1.0], [1.0]])


def _adjacency(N, edges):
    # edges as (receiver i, sender j) pairs, i.e. w_ij = 1
    W = np.zeros((N, N))
    for i, j in edges:
        W[i - 1, j - 1] = 1.0
    return Topology(W)


def example1():
    return Scenario(
        name="example1",
        dynamics=oscillator(),
        topology=_adjacency(4, [(1, 2), (1, 3), (2, 1), (2, 3), (3, 4)]),
        root=4,
        gains=ScenarioGains(
            [[[1.5, 0.5]], [[4.0, 0.0]], [[2.625, 0.375]], [[0.0, 0.0]]],
            Protocol.DST_ONLY,
        ),
        sim=SimSettings(
            dt=0.01,
            T=15.0,
            tol=1e-4,
            x0=np.array([[7.5, 13.8], [14.0, 9.0], [0.0, 6.5], [8.0, 5.4]]),
        ),
        design=DesignSettings(
            "theorem2",
            {1: [-1 + 1j, -1 - 1j], 2: [-2 + 1j, -2 - 1j], 3: [-1.5 + 1j, -1.5 - 1j]},
        ),
    )


def _example2_topology():
    return _adjacency(6, [(1, 5), (2, 5), (3, 4), (4, 6), (5, 6), (6, 1)])


_EXAMPLE2_GAINS = [[[4.0, 0.0]], [[2.625, 0.375]], [[2.5, 0.5]], [[2.5, 0.5]], [[1.5, 0.5]]]


def example2():
    return Scenario(
        name="example2",
        dynamics=oscillator(),
        topology=_example2_topology(),
        root=6,
        gains=ScenarioGains(_EXAMPLE2_GAINS + [[[1.0, 0.0]]], Protocol.DST_ROOT_FEEDBACK, 1),
        sim=SimSettings(
            dt=0.01,
            T=20.0,
            tol=1e-3,
            x0=np.array(
                [[7.8, 4.0], [10.0, 7.0], [19.0, 18.0], [1.0, 15.0], [5.5, 8.2], [11.0, 19.0]]
            ),
        ),
        design=DesignSettings("theorem3"),
    )


def example2_k6zero():
    """Six-agent example with the root's feedback switched off (root tracking)."""
    return Scenario(
        name="example2-k6zero",
        dynamics=oscillator(),
        topology=_example2_topology(),
        root=6,
        gains=ScenarioGains(_EXAMPLE2_GAINS + [[[0.0, 0.0]]], Protocol.DST_ONLY),
        sim=SimSettings(
            dt=0.01,
            T=20.0,
            tol=1e-3,
            x0=np.array(
                [[13.0, 13.5], [12.8, 19.0], [4.2, 14.0], [4.8, 2.0], [12.0, 9.0], [9.1, 13.0]]
            ),
        ),
        notes="root tracking: u_6 = 0, every agent converges to the root's free motion",
    )


FIXTURES = {
    "example1": example1,
    "example2": example2,
    "example2-k6zero": example2_k6zero,
}
