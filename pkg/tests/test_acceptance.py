"""Acceptance criteria, one test per criterion.

Each test prints ``ACCEPTANCE <k> PASS|FAIL ...`` and records the line for the
terminal summary (see ``conftest.py``), so the verdicts show up even when
pytest captures output. Run just this file with ``pytest tests/test_acceptance.py``.
"""

import functools
import sys
import time

import numpy as np
import pytest

import test_criterion
import test_graph
import test_simulate
import test_synthesis
import test_transform
from consensus_forge.cli import main
from consensus_forge.criterion import criterion, unstable_modes
from consensus_forge.exceptions import NoSpanningTree
from consensus_forge.fixtures import example1, example2, example2_k6zero, oscillator
from consensus_forge.graph import Topology, extract_dst, renumber
from consensus_forge.simulate import integrate_agents
from consensus_forge.synthesis import gershgorin_check, place_poles
from consensus_forge.transform import assemble_dst_closed_loop

from conftest import ACCEPTANCE_LINES, random_tree, topology_with_tree

# closed-loop spectral abscissa of the second fixture with its published gains,
# from an exact characteristic-polynomial factorization evaluated with mpmath
EXAMPLE2_ABSCISSA = -1.18225943609081597


def acceptance(number, title, budget=None):
    """Time the wrapped check, print and record a PASS/FAIL line, re-raise failures."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            detail = ""
            try:
                detail = fn(*args, **kwargs) or ""
                elapsed = time.perf_counter() - start
                if budget is not None:
                    assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
                status = "PASS"
            except BaseException as exc:
                elapsed = time.perf_counter() - start
                status, detail = "FAIL", f"{type(exc).__name__}: {exc}".splitlines()[0]
                raise
            finally:
                line = f"ACCEPTANCE {number} {status} [{elapsed:.2f} s] {title}"
                if detail:
                    line += f" -- {detail}"
                ACCEPTANCE_LINES.append(line)
                print(line)

        return run

    return wrap


def tree_of(sc):
    return renumber(extract_dst(sc.topology, sc.root))


def blocks(M, n):
    k = M.shape[0] // n
    return [[M[r * n : (r + 1) * n, c * n : (c + 1) * n] for c in range(k)] for r in range(k)]


def match_spectrum(got, expected, tol):
    remaining = list(got)
    worst = 0.0
    for lam in expected:
        d = np.abs(np.array(remaining) - lam)
        worst = max(worst, d.min())
        remaining.pop(int(d.argmin()))
    assert worst <= tol, f"spectrum off by {worst:.3g}"
    return worst


@acceptance(1, "first fixture: tree, placed gains, triangular loop, convergence", budget=2.0)
def test_criterion_1_example1():
    sc = example1()
    tree = tree_of(sc)
    assert tree.root == 4
    assert sorted(tree.edges()) == [(3, 1), (3, 2), (4, 3)]

    targets = {1: [-1 + 1j, -1 - 1j], 2: [-2 + 1j, -2 - 1j], 3: [-1.5 + 1j, -1.5 - 1j]}
    published = {1: [1.5, 0.5], 2: [4.0, 0.0], 3: [2.625, 0.375]}
    gain_err = 0.0
    for i, poles in targets.items():
        B = tree.edge_weight[i] * sc.dynamics.B
        K = place_poles(sc.dynamics.A, B, poles)
        gain_err = max(gain_err, np.abs(K - [published[i]]).max())
    assert gain_err <= 1e-9

    gains = sc.gains.to_gainset(sc.topology, tree)
    M = assemble_dst_closed_loop(sc.dynamics, sc.topology, tree, gains)
    b = blocks(M, 2)
    assert all(not b[j][k].any() for j in range(3) for k in range(j))
    spec_err = match_spectrum(np.linalg.eigvals(M), [z for p in targets.values() for z in p], 1e-8)

    res = integrate_agents(sc.dynamics, sc.topology, tree, gains, sc.sim.x0, dt=0.01, T=15.0)
    ratio = res.consensus_error[-1] / res.consensus_error[0]
    assert ratio <= 1e-4
    return f"gain err {gain_err:.1e}, spectrum err {spec_err:.1e}, eps ratio {ratio:.2e}"


@acceptance(2, "second fixture: displayed matrix, certificate, convergence, Gershgorin rows", budget=2.0)
def test_criterion_2_example2():
    sc = example2()
    tree = tree_of(sc)
    gains = sc.gains.to_gainset(sc.topology, tree)
    M = assemble_dst_closed_loop(sc.dynamics, sc.topology, tree, gains)
    A = sc.dynamics.A
    BK = {i: sc.dynamics.B @ gains.K[i - 1] for i in range(1, 7)}
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
    assert np.array_equal(M, expected)

    rep = gershgorin_check(M, 2)
    assert rep.eigenvalue_certificate
    assert abs(rep.spectral_abscissa - EXAMPLE2_ABSCISSA) <= 1e-9
    row4, row5 = rep.rows[3], rep.rows[4]
    assert (row4.radius, row5.radius) == (2.0, 1.0)
    assert abs(row4.surrogate_value - 3.0) <= 1e-12 and abs(row5.surrogate_value - 3.0) <= 1e-12
    assert row4.surrogate_pass and row5.surrogate_pass

    res = integrate_agents(sc.dynamics, sc.topology, tree, gains, sc.sim.x0, dt=0.01, T=20.0)
    ratio = res.consensus_error[-1] / res.consensus_error[0]
    assert ratio <= 1e-3
    resolvent = "all pass" if rep.resolvent_all else (
        "fails on " + ", ".join(str(r.block) for r in rep.rows if not r.resolvent_pass)
    )
    return f"abscissa {rep.spectral_abscissa:.6f}, eps ratio {ratio:.2e}, resolvent {resolvent}"


@acceptance(3, "root-tracking variant: exit 0, agreement, free root motion", budget=2.0)
def test_criterion_3_root_tracking(tmp_path):
    assert main(["demo", "example2-k6zero", "--out", str(tmp_path)]) == 0
    sc = example2_k6zero()
    tree = tree_of(sc)
    gains = sc.gains.to_gainset(sc.topology, tree)
    assert not np.any(gains.K[tree.root - 1])
    res = integrate_agents(sc.dynamics, sc.topology, tree, gains, sc.sim.x0, dt=sc.sim.dt, T=20.0)
    root = res.agents[:, tree.root - 1]
    spread = np.linalg.norm(res.agents[-1] - root[-1], axis=1).max()
    bound = 1e-3 * (1 + res.consensus_error[0])
    assert spread <= bound
    x0 = np.asarray(sc.sim.x0)[tree.root - 1]
    t = res.times
    free = np.stack([np.cos(t) * x0[0] + np.sin(t) * x0[1], -np.sin(t) * x0[0] + np.cos(t) * x0[1]], axis=1)
    track = np.abs(root - free).max()
    assert track <= 1e-6
    return f"spread {spread:.2e} <= {bound:.2e}, root vs rotation {track:.1e}"


@acceptance(4, "rank criterion on both fixtures, disconnected graph, sweep time")
def test_criterion_4_rank_criterion():
    osc = oscillator()
    modes = sorted(unstable_modes(osc.A), key=lambda z: z.imag)
    assert np.allclose(modes, [-1j, 1j], atol=1e-12)
    for make, splits in ((example1, 16), (example2, 64)):
        sc = make()
        v = criterion(sc.dynamics, sc.topology, tree_of(sc))
        assert v.consensus_achievable and v.bipartitions_checked == splits and not v.failures

    W = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0.0]])
    with pytest.raises(NoSpanningTree):
        extract_dst(Topology(W))

    rng = np.random.default_rng(40)
    slowest = 0.0
    for N in range(2, 11):
        tree = renumber(random_tree(rng, N))
        topo = topology_with_tree(rng, tree)
        start = time.perf_counter()
        v = criterion(osc, topo, tree, exhaustive=True)
        slowest = max(slowest, time.perf_counter() - start)
        assert v.bipartitions_checked == 2**N
    assert slowest < 1.0
    return f"slowest full sweep (N <= 10, n = 2) {slowest:.3f} s"


@acceptance(5, "property suites")
def test_criterion_5_property_suites(caplog):
    checks = [
        ("tree reconstruction", test_graph.test_lemma1_reconstruction),
        ("assembly routes", test_transform.test_assembly_routes_agree),
        ("triangular spectrum", test_transform.test_triangular_spectrum_property),
        ("agent/edge consistency", test_simulate.test_agent_edge_consistency_random),
        ("RK4 order", test_simulate.test_rk4_fourth_order),
        ("sampled fixed modes vs criterion", test_criterion.test_dfm_consistency_random),
        ("resolvent pass implies Hurwitz", test_synthesis.test_resolvent_pass_implies_hurwitz),
    ]
    failed = []
    for name, check in checks:
        try:
            check()
        except AssertionError:
            failed.append(name)
    assert not failed, f"failed: {', '.join(failed)}"
    discrepancies = sum("criterion passes" in r.getMessage() for r in caplog.records)
    return f"{len(checks)} suites, {discrepancies} logged discrepancies"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
