import numpy as np
import pytest

from consensus_forge.exceptions import DimensionMismatch, MissingRootPath
from consensus_forge.graph import Protocol, Topology, renumber
from consensus_forge.transform import (
    AgentDynamics,
    GainSet,
    agent_to_edge,
    assemble_closed_loop,
    assemble_dst_closed_loop,
    build_transformed_system,
    closed_loop_product,
    dst_gains,
)

from conftest import random_tree, topology_with_tree


def blocks(M, n):
    k = M.shape[0] // n
    return [[M[r * n : (r + 1) * n, c * n : (c + 1) * n] for c in range(k)] for r in range(k)]


def random_instance(rng, N=None, n=None, m=None):
    N = N or int(rng.integers(2, 6))
    n = n or int(rng.integers(1, 4))
    m = m or int(rng.integers(1, 3))
    tree = renumber(random_tree(rng, N))
    topo = topology_with_tree(rng, tree)
    dyn = AgentDynamics(rng.standard_normal((n, n)), rng.standard_normal((n, m)))
    K = [rng.standard_normal((m, n)) for _ in range(N)]
    return dyn, topo, tree, K


def test_astar_and_output_blocks(ex1, osc):
    sc, tree = ex1
    ts = build_transformed_system(osc, sc.topology, tree, Protocol.FULL_NEIGHBOR)
    assert ts.Astar.shape == (6, 6)
    for r, row in enumerate(blocks(ts.Astar, 2)):
        for c, b in enumerate(row):
            np.testing.assert_array_equal(b, osc.A if r == c else 0)
    np.testing.assert_array_equal(ts.C_blocks[0], np.kron([[2, -1, 0]], np.eye(2)))
    np.testing.assert_array_equal(ts.Bstar, np.kron(ts.P0.T, osc.B))


def test_dst_only_output_blocks(ex2, osc):
    sc, tree = ex2
    ts = build_transformed_system(osc, sc.topology, tree, Protocol.DST_ONLY)
    assert not ts.C_blocks[5].any()
    np.testing.assert_array_equal(ts.C_blocks[4], np.kron([[0, 0, 0, 0, 1]], np.eye(2)))


def test_dimension_mismatch(ex1, ex2, osc):
    sc1, _ = ex1
    _, t2 = ex2
    with pytest.raises(DimensionMismatch):
        build_transformed_system(osc, sc1.topology, t2)
    with pytest.raises(DimensionMismatch):
        AgentDynamics(np.eye(2), np.ones((3, 1)))


def test_zero_gains_give_astar(ex1, osc):
    sc, tree = ex1
    ts = build_transformed_system(osc, sc.topology, tree)
    zero = GainSet([np.zeros((1, 2))] * 4, Protocol.FULL_NEIGHBOR)
    np.testing.assert_array_equal(assemble_closed_loop(ts, zero), ts.Astar)
    with pytest.raises(DimensionMismatch):
        assemble_closed_loop(ts, GainSet([np.zeros((1, 2))] * 3, Protocol.FULL_NEIGHBOR))


def test_example1_triangular(ex1, osc):
    sc, tree = ex1
    gains = sc.gains.to_gainset(sc.topology, tree)
    ts = build_transformed_system(osc, sc.topology, tree, Protocol.DST_ONLY)
    M = assemble_closed_loop(ts, gains)
    b = blocks(M, 2)
    for j in range(3):
        np.testing.assert_allclose(b[j][j], osc.A - osc.B @ gains.K[j], atol=1e-15)
        for k in range(j):
            assert not b[j][k].any()
    np.testing.assert_array_equal(M, assemble_dst_closed_loop(osc, sc.topology, tree, gains))


def test_example2_displayed_matrix(ex2, osc):
    sc, tree = ex2
    gains = sc.gains.to_gainset(sc.topology, tree)
    assert gains.root_path == [5, 1]
    M = assemble_dst_closed_loop(osc, sc.topology, tree, gains)
    A = osc.A
    BK = {i: osc.B @ gains.K[i - 1] for i in range(1, 7)}
    Z = np.zeros((2, 2))
    expected = np.block(
        [
            [A - BK[1], Z, Z, Z, BK[5]],
            [Z, A - BK[2], Z, Z, BK[5]],
            [Z, Z, A - BK[3], BK[4], Z],
            [-BK[6], Z, Z, A - BK[4], -BK[6]],
            [-BK[6], Z, Z, Z, A - BK[5] - BK[6]],
        ]
    )
    np.testing.assert_array_equal(M, expected)
    # the general assembly with the root's single measurement gives the same matrix
    ts = build_transformed_system(osc, sc.topology, tree, Protocol.DST_ROOT_FEEDBACK, root_neighbor=1)
    np.testing.assert_allclose(assemble_closed_loop(ts, gains), M, atol=1e-14)


def test_root_feedback_with_zero_root_gain(ex2, osc):
    sc, tree = ex2
    K = [k.copy() for k in sc.gains.K]
    K[5] = np.zeros((1, 2))
    with_root = dst_gains(sc.topology, tree, K, root_neighbor=1)
    without = dst_gains(sc.topology, tree, K)
    np.testing.assert_array_equal(
        assemble_dst_closed_loop(osc, sc.topology, tree, with_root),
        assemble_dst_closed_loop(osc, sc.topology, tree, without),
    )


def test_missing_root_path():
    with pytest.raises(MissingRootPath):
        GainSet([np.zeros((1, 2))] * 3, Protocol.DST_ROOT_FEEDBACK)


def test_agent_to_edge(ex1):
    sc, tree = ex1
    y = agent_to_edge(tree, sc.sim.x0)
    np.testing.assert_allclose(y, [-7.5, -7.3, -14, -2.5, 8, -1.1], atol=1e-12)
    assert not agent_to_edge(tree, np.ones((4, 2)) * 3.0).any()
    from consensus_forge.graph import SpanningTree

    t2 = SpanningTree(root=2, parent={1: 2}, edge_weight={1: 1.0})
    d = np.array([0.3, -1.2])
    x1 = np.array([1.0, 2.0])
    np.testing.assert_allclose(agent_to_edge(t2, [x1, x1 + d]), d)


def test_kronecker_identity():
    rng = np.random.default_rng(4)
    for _ in range(200):
        k, n, m = rng.integers(1, 5, 3)
        p = rng.standard_normal((k, 1))
        g = rng.standard_normal((1, k))
        B = rng.standard_normal((n, m))
        K = rng.standard_normal((m, n))
        lhs = np.kron(p, B) @ K @ np.kron(g, np.eye(n))
        np.testing.assert_allclose(lhs, np.kron(p @ g, B @ K), atol=1e-12)


def test_assembly_routes_agree():
    rng = np.random.default_rng(5)
    modes = [Protocol.FULL_NEIGHBOR, Protocol.DST_ONLY]
    for trial in range(500):
        dyn, topo, tree, K = random_instance(rng)
        mode = modes[trial % 2]
        ts = build_transformed_system(dyn, topo, tree, mode)
        gains = GainSet(K, mode)
        M = assemble_closed_loop(ts, gains)
        assert np.max(np.abs(M - closed_loop_product(ts, gains))) <= 1e-12 * max(1.0, np.abs(M).max())


def test_assembly_random_n4_m1():
    rng = np.random.default_rng(6)
    dyn, topo, tree, K = random_instance(rng, N=4, n=2, m=1)
    ts = build_transformed_system(dyn, topo, tree)
    gains = GainSet(K, Protocol.FULL_NEIGHBOR)
    assert np.max(np.abs(assemble_closed_loop(ts, gains) - closed_loop_product(ts, gains))) <= 1e-12


def test_triangular_spectrum_property():
    rng = np.random.default_rng(7)
    for _ in range(200):
        dyn, topo, tree, K = random_instance(rng)
        gains = GainSet(K, Protocol.DST_ONLY)
        M = assemble_dst_closed_loop(dyn, topo, tree, gains)
        n = dyn.n
        b = blocks(M, n)
        for j in range(len(b)):
            for k in range(j):
                assert not b[j][k].any()
        inv = tree.inverse_perm
        expected = np.concatenate(
            [
                np.linalg.eigvals(dyn.A - tree.edge_weight[inv[q]] * dyn.B @ K[inv[q] - 1])
                for q in range(1, tree.N)
            ]
        )
        got = np.linalg.eigvals(M)
        # match multisets greedily
        remaining = list(got)
        for lam in expected:
            d = np.abs(np.array(remaining) - lam)
            assert d.min() <= 1e-8 * max(1.0, abs(lam))
            remaining.pop(int(d.argmin()))
        ts = build_transformed_system(dyn, topo, tree, Protocol.DST_ONLY)
        np.testing.assert_allclose(M, assemble_closed_loop(ts, gains), atol=1e-12)


def test_root_feedback_routes_agree():
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 100:
        dyn, topo, tree, K = random_instance(rng, N=int(rng.integers(3, 7)))
        ins = topo.neighbors(tree.root)
        if not ins:
            continue
        rn = ins[0]
        gains = dst_gains(topo, tree, K, rn)
        ts = build_transformed_system(dyn, topo, tree, Protocol.DST_ROOT_FEEDBACK, root_neighbor=rn)
        np.testing.assert_allclose(
            assemble_dst_closed_loop(dyn, topo, tree, gains), assemble_closed_loop(ts, gains), atol=1e-12
        )
        checked += 1


def test_topology_tree_mismatch(ex1, osc):
    sc, tree = ex1
    gains = sc.gains.to_gainset(sc.topology, tree)
    with pytest.raises(DimensionMismatch):
        assemble_dst_closed_loop(osc, Topology(np.zeros((3, 3))), tree, gains)
