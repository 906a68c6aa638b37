"""Scenario files: JSON with row-major matrices.

See ``docs/scenario.schema.json`` for the layout.  Parsing reports problems as
:class:`~consensus_forge.exceptions.ScenarioError` naming the offending field
(and the line number for JSON syntax errors).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ScenarioError
from .graph import Protocol, Topology
from .transform import AgentDynamics, GainSet, dst_gains

__all__ = [
    "Scenario",
    "ScenarioGains",
    "SimSettings",
    "DesignSettings",
    "scenario_from_dict",
    "scenario_to_dict",
    "load_scenario",
    "loads_scenario",
    "dumps_scenario",
]


@dataclass
class ScenarioGains:
    K: list
    mode: Protocol = Protocol.DST_ONLY
    root_neighbor: int = None

    def to_gainset(self, topo, tree, provenance="injected"):
        if self.mode is Protocol.FULL_NEIGHBOR:
            return GainSet(self.K, self.mode, provenance=provenance)
        if self.mode is Protocol.DST_ROOT_FEEDBACK:
            if self.root_neighbor is None:
                raise ScenarioError("root feedback needs root_neighbor", field="gains.root_neighbor")
            return dst_gains(topo, tree, self.K, self.root_neighbor, provenance)
        return dst_gains(topo, tree, self.K, None, provenance)


@dataclass
class SimSettings:
    dt: float = 0.01
    T: float = 15.0
    tol: float = 1e-4
    x0: np.ndarray = None


@dataclass
class DesignSettings:
    method: str = None
    target_poles: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    dynamics: AgentDynamics
    topology: Topology
    root: int = None
    gains: ScenarioGains = None
    sim: SimSettings = field(default_factory=SimSettings)
    design: DesignSettings = field(default_factory=DesignSettings)
    notes: str = ""


def _matrix(value, where, rows=None, cols=None):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("expected a row-major array of numbers", field=where) from None
    if M.ndim != 2:
        raise ScenarioError(f"expected a 2-D array, got {M.ndim}-D", field=where)
    if not np.all(np.isfinite(M)):
        raise ScenarioError("entries must be finite", field=where)
    if rows is not None and M.shape[0] != rows:
        raise ScenarioError(f"expected {rows} rows, got {M.shape[0]}", field=where)
    if cols is not None and M.shape[1] != cols:
        raise ScenarioError(f"expected {cols} columns, got {M.shape[1]}", field=where)
    return M


def _require(d, key, where):
    if not isinstance(d, dict):
        raise ScenarioError("expected an object", field=where)
    if key not in d:
        raise ScenarioError("missing required field", field=f"{where}.{key}" if where else key)
    return d[key]


def _number(value, where, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError("expected a number", field=where)
    if positive and not value > 0:
        raise ScenarioError("must be positive", field=where)
    return float(value)


def _vertex(value, N, where):
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= N:
        raise ScenarioError(f"expected a vertex id in 1..{N}", field=where)
    return value


def _poles(value, where):
    # poles are [re, im] pairs or plain real numbers
    out = []
    for k, p in enumerate(value):
        if isinstance(p, (list, tuple)) and len(p) == 2:
            out.append(complex(_number(p[0], f"{where}[{k}]"), _number(p[1], f"{where}[{k}]")))
        else:
            out.append(complex(_number(p, f"{where}[{k}]")))
    return out


def scenario_from_dict(d):
    """Validate and convert a decoded scenario document."""
    if not isinstance(d, dict):
        raise ScenarioError("scenario must be a JSON object")
    name = d.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError("expected a string", field="name")

    dyn_d = _require(d, "dynamics", "")
    A = _matrix(_require(dyn_d, "A", "dynamics"), "dynamics.A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ScenarioError("A must be square", field="dynamics.A")
    B = _matrix(_require(dyn_d, "B", "dynamics"), "dynamics.B", rows=n)
    m = B.shape[1]
    for key, expected in (("n", n), ("m", m)):
        if key in dyn_d and dyn_d[key] != expected:
            raise ScenarioError(f"declared {key}={dyn_d[key]} but matrices give {expected}",
                                field=f"dynamics.{key}")
    dynamics = AgentDynamics(A, B)

    top_d = _require(d, "topology", "")
    W = _matrix(_require(top_d, "W", "topology"), "topology.W")
    N = W.shape[0]
    if W.shape[1] != N:
        raise ScenarioError("W must be square", field="topology.W")
    if "N" in top_d and top_d["N"] != N:
        raise ScenarioError(f"declared N={top_d['N']} but W is {N}x{N}", field="topology.N")
    try:
        topology = Topology(W)
    except ValueError as exc:
        raise ScenarioError(str(exc), field="topology.W") from None

    root = d.get("root")
    if root is not None:
        root = _vertex(root, N, "root")

    gains = None
    if d.get("gains") is not None:
        g = d["gains"]
        Ks = _require(g, "K", "gains")
        if not isinstance(Ks, list) or len(Ks) != N:
            raise ScenarioError(f"expected {N} gain matrices", field="gains.K")
        K = [_matrix(k, f"gains.K[{i}]", rows=m, cols=n) for i, k in enumerate(Ks)]
        try:
            mode = Protocol(g.get("mode", Protocol.DST_ONLY.value))
        except ValueError:
            raise ScenarioError(f"unknown mode {g.get('mode')!r}", field="gains.mode") from None
        rn = g.get("root_neighbor")
        if rn is not None:
            rn = _vertex(rn, N, "gains.root_neighbor")
        gains = ScenarioGains(K, mode, rn)

    sim = SimSettings()
    if d.get("sim") is not None:
        s = d["sim"]
        if not isinstance(s, dict):
            raise ScenarioError("expected an object", field="sim")
        for key in ("dt", "T", "tol"):
            if key in s:
                setattr(sim, key, _number(s[key], f"sim.{key}", positive=True))
        if s.get("x0") is not None:
            try:
                x0 = np.array(s["x0"], dtype=float)
            except (TypeError, ValueError):
                raise ScenarioError("expected numbers", field="sim.x0") from None
            if x0.size != N * n:
                raise ScenarioError(f"expected N*n = {N * n} initial values, got {x0.size}",
                                    field="sim.x0")
            sim.x0 = x0.reshape(N, n)

    design = DesignSettings()
    if d.get("design") is not None:
        ds = d["design"]
        if not isinstance(ds, dict):
            raise ScenarioError("expected an object", field="design")
        method = ds.get("method")
        if method not in (None, "theorem2", "theorem3"):
            raise ScenarioError("method must be 'theorem2' or 'theorem3'", field="design.method")
        targets = {}
        for key, val in (ds.get("target_poles") or {}).items():
            try:
                v = int(key)
            except ValueError:
                raise ScenarioError("keys must be vertex ids", field="design.target_poles") from None
            _vertex(v, N, f"design.target_poles.{key}")
            targets[v] = _poles(val, f"design.target_poles.{key}")
        params = ds.get("params") or {}
        if not isinstance(params, dict):
            raise ScenarioError("expected an object", field="design.params")
        design = DesignSettings(method, targets, dict(params))

    notes = d.get("notes", "")
    return Scenario(name, dynamics, topology, root, gains, sim, design, notes)


def _rows(M):
    return np.asarray(M).tolist()


def scenario_to_dict(sc):
    d = {
        "name": sc.name,
        "dynamics": {
            "n": sc.dynamics.n,
            "m": sc.dynamics.m,
            "A": _rows(sc.dynamics.A),
            "B": _rows(sc.dynamics.B),
        },
        "topology": {"N": sc.topology.N, "W": _rows(sc.topology.W)},
        "root": sc.root,
    }
    if sc.gains is not None:
        d["gains"] = {
            "mode": sc.gains.mode.value,
            "K": [_rows(k) for k in sc.gains.K],
            "root_neighbor": sc.gains.root_neighbor,
        }
    d["sim"] = {
        "dt": sc.sim.dt,
        "T": sc.sim.T,
        "tol": sc.sim.tol,
        "x0": None if sc.sim.x0 is None else _rows(sc.sim.x0),
    }
    d["design"] = {
        "method": sc.design.method,
        "target_poles": {
            str(v): [[p.real, p.imag] for p in poles]
            for v, poles in sorted(sc.design.target_poles.items())
        },
        "params": dict(sc.design.params),
    }
    if sc.notes:
        d["notes"] = sc.notes
    return d


def loads_scenario(text):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno) from None
    return scenario_from_dict(d)


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    return loads_scenario(text)


def dumps_scenario(sc):
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"
