"""Command-line entry point: ``consensus-forge <command> ...``.

Exit codes: 0 success, 2 criterion/certificate/consensus failure, 3 input
error, 4 synthesis failure.
"""

import argparse
import os
import sys

import numpy as np

from . import report as rp
from .criterion import criterion, dfm_sample
from .exceptions import (
    BadTargets,
    ConsensusForgeError,
    NoSpanningTree,
    NonFiniteState,
    RootHasNeighbors,
    RootHasNoNeighbors,
    ScenarioError,
    SynthesisFailed,
    Uncontrollable,
)
from .fixtures import FIXTURES
from .graph import Protocol, extract_dst, renumber
from .scenario import load_scenario
from .simulate import integrate_agents
from .synthesis import design_theorem2, design_theorem3, gershgorin_check
from .transform import assemble_closed_loop, assemble_dst_closed_loop, build_transformed_system

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SYNTHESIS = 0, 2, 3, 4

DFM_TRIALS = 8
THEOREM3_PARAMS = {"root_neighbor", "initial_depth", "root_depth", "growth", "max_iter", "mode"}


class _Outcome(Exception):
    def __init__(self, code, exc):
        super().__init__(str(exc))
        self.code = code
        self.exc = exc


def _tree(sc):
    return renumber(extract_dst(sc.topology, sc.root))


def _analyze(sc, tree, args, rep):
    verdict = criterion(sc.dynamics, sc.topology, tree, exhaustive=args.exhaustive)
    ts = build_transformed_system(sc.dynamics, sc.topology, tree, Protocol.FULL_NEIGHBOR)
    fixed = dfm_sample(ts, trials=DFM_TRIALS, seed=args.seed)
    dfm = {
        "trials": DFM_TRIALS,
        "seed": args.seed,
        "persistent_modes": [rp.cplx(z) for z in fixed],
        "unstable_persistent": [rp.cplx(z) for z in fixed if z.real >= 0],
    }
    rep["criterion"] = rp.criterion_section(verdict, dfm)
    return verdict.consensus_achievable


def _closed_loop(sc, tree, gains):
    if gains.mode is Protocol.FULL_NEIGHBOR:
        ts = build_transformed_system(sc.dynamics, sc.topology, tree, Protocol.FULL_NEIGHBOR)
        return assemble_closed_loop(ts, gains)
    return assemble_dst_closed_loop(sc.dynamics, sc.topology, tree, gains)


def _check(sc, tree, gains, rep, gershgorin=None):
    M = _closed_loop(sc, tree, gains)
    rep["gains"] = rp.gains_section(gains, tree)
    rep["closed_loop"] = rp.spectrum_section(M)
    if gershgorin is None:
        gershgorin = gershgorin_check(M, sc.dynamics.n)
    rep["gershgorin"] = rp.gershgorin_section(gershgorin, tree)
    return rep["closed_loop"]["hurwitz"]


def _design(sc, tree, args):
    method = sc.design.method
    if method is None:
        method = "theorem3" if sc.topology.neighbors(tree.root) else "theorem2"
    if method == "theorem2":
        return design_theorem2(sc.dynamics, sc.topology, tree, sc.design.target_poles, seed=args.seed), None
    unknown = set(sc.design.params) - THEOREM3_PARAMS
    if unknown:
        raise ScenarioError(f"unknown parameters {sorted(unknown)}", field="design.params")
    return design_theorem3(sc.dynamics, sc.topology, tree, seed=args.seed, **sc.design.params)


def _injected_gains(sc, tree, provenance="injected"):
    if sc.gains is None:
        raise ScenarioError("scenario has no gains", field="gains")
    return sc.gains.to_gainset(sc.topology, tree, provenance)


def _simulate(sc, tree, gains, args, rep):
    if sc.sim.x0 is None:
        raise ScenarioError("simulation needs initial states", field="sim.x0")
    dt = args.dt if args.dt is not None else sc.sim.dt
    T = args.T if args.T is not None else sc.sim.T
    tol = args.tol if args.tol is not None else sc.sim.tol
    result = integrate_agents(sc.dynamics, sc.topology, tree, gains, sc.sim.x0, dt, T)
    rep["simulation"] = rp.simulation_section(result, dt, T, tol)
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    csv_name = f"{sc.name}_trajectories.csv"
    rp.write_csv(os.path.join(out, csv_name), result, tree)
    rep["csv"] = csv_name
    if args.svg:
        names = []
        for k in range(sc.dynamics.n):
            name = f"{sc.name}_x{k + 1}.svg"
            rp.write_svg(
                os.path.join(out, name),
                result.times,
                result.agents[:, :, k],
                f"{sc.name}: state component {k + 1}",
                labels=[f"agent {i + 1}" for i in range(sc.topology.N)],
            )
            names.append(name)
        rep["svg"] = names
    return rep["simulation"]["verdict"]


def _run(args, rep):
    if args.command == "demo":
        sc = FIXTURES[args.name]()
    else:
        sc = load_scenario(args.scenario)
    rep["scenario"] = sc.name
    if sc.notes:
        rep["notes"] = sc.notes

    try:
        tree = _tree(sc)
    except NoSpanningTree as exc:
        raise _Outcome(EXIT_FAIL, exc) from None
    rep["dst"] = rp.tree_section(tree)

    ok = True
    if args.command == "analyze":
        ok = _analyze(sc, tree, args, rep)
    elif args.command == "design":
        try:
            gains, report = _design(sc, tree, args)
        except (SynthesisFailed, Uncontrollable, RootHasNeighbors, RootHasNoNeighbors, BadTargets) as exc:
            if isinstance(exc, SynthesisFailed) and exc.report is not None:
                rep["gershgorin"] = rp.gershgorin_section(exc.report, tree)
            raise _Outcome(EXIT_SYNTHESIS, exc) from None
        ok = _check(sc, tree, gains, rep, report)
    elif args.command == "check":
        ok = _check(sc, tree, _injected_gains(sc, tree), rep)
    elif args.command == "simulate":
        if sc.gains is not None:
            gains = _injected_gains(sc, tree)
        else:
            try:
                gains, _ = _design(sc, tree, args)
            except (SynthesisFailed, Uncontrollable, RootHasNeighbors, RootHasNoNeighbors, BadTargets) as exc:
                raise _Outcome(EXIT_SYNTHESIS, exc) from None
        rep["gains"] = rp.gains_section(gains, tree)
        ok = _simulate(sc, tree, gains, args, rep)
    else:
        gains = _injected_gains(sc, tree, provenance="fixture")
        achievable = _analyze(sc, tree, args, rep)
        hurwitz = _check(sc, tree, gains, rep)
        reached = _simulate(sc, tree, gains, args, rep)
        ok = achievable and hurwitz and reached
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for report, CSV and SVG files")
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--dt", type=float)
    common.add_argument("--T", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument(
        "--exhaustive", action="store_true", help="sweep every split even after a failure"
    )

    parser = argparse.ArgumentParser(
        prog="consensus-forge",
        description="Consensus analysis and tree-only protocol design for linear multi-agent systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("analyze", "spanning tree and rank-based consensus criterion"),
        ("design", "synthesize tree-only feedback gains"),
        ("check", "closed-loop spectrum and Gershgorin report for the scenario's gains"),
        ("simulate", "simulate the agents and write trajectories"),
    ]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("scenario", help="scenario JSON file")
    p = sub.add_parser("demo", parents=[common], help="run a built-in example")
    p.add_argument("name", choices=sorted(FIXTURES))
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    rep = {"scenario": None, "command": args.command}
    try:
        code = _run(args, rep)
    except _Outcome as outcome:
        code = outcome.code
        rep["error"] = {"type": type(outcome.exc).__name__, "message": str(outcome.exc)}
    except ScenarioError as exc:
        code = EXIT_INPUT
        rep["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except NonFiniteState as exc:
        code = EXIT_FAIL
        rep["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except (ConsensusForgeError, ValueError) as exc:
        code = EXIT_INPUT
        rep["error"] = {"type": type(exc).__name__, "message": str(exc)}
    rep["exit_code"] = code

    text = rp.dumps_report(rep) if args.format == "json" else rp.format_text(rep)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        ext = "json" if args.format == "json" else "txt"
        with open(os.path.join(args.out, f"{rep['scenario'] or 'report'}_{args.command}.{ext}"), "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
