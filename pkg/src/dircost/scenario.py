"""JSON scenario documents: parsing, validation and serialization.

A scenario is one JSON object::

    {
      "sources": [{"name": "X0", "index": 0, "size": 2}, ...],
      "pmf": [...],                       # or "model": {"type": "dsbs", "p1": .., "p2": ..}
      "auxiliaries": {                    # optional
        "variables": [{"name": "U0", "source": 0, "sinks": [1, 2], "size": 2}],
        "pmf": [...]                      # over sources then auxiliaries, declared order
      },
      "network": {
        "nodes": [{"id": "E0", "kind": "source", "index": 0}, {"id": "C"}, ...],
        "edges": [{"u": "E0", "v": "C", "weight": 1.0}, ...]
      },
      "demands": {"1": [0, 1], "2": [0, 2]},
      "hints": {"delta": 0.1}
    }

Flat pmf arrays are row-major over the declared variable order (the last
variable varies fastest).  See README for a worked example.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .netgraph import DemandMap, Edge, Network, Node
from .probkit import Auxiliary, JointPmf, Source, Variable, dsbs_star

MAX_SOURCES = 4
MAX_SINKS = 3
MAX_ALPHABET = 4
MAX_AUX_TABLE = 1 << 22
MARGINAL_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SourceDecl(_Strict):
    name: str
    index: int = Field(ge=0)
    size: int = Field(default=2, ge=1)


class ModelDecl(_Strict):
    type: Literal["dsbs"]
    p1: float = Field(ge=0.0, le=0.5)
    p2: float = Field(ge=0.0, le=0.5)


class AuxDecl(_Strict):
    name: str
    source: int
    sinks: list[int] = Field(min_length=1)
    size: int = Field(default=2, ge=1)


class AuxBlock(_Strict):
    variables: list[AuxDecl]
    pmf: Optional[list[float]] = None  # may be omitted when every auxiliary is a constant


class NodeDecl(_Strict):
    id: str
    kind: Literal["source", "sink", "intermediate"] = "intermediate"
    index: Optional[int] = None


class EdgeDecl(_Strict):
    u: str
    v: str
    weight: float = Field(ge=0.0, allow_inf_nan=False)


class NetworkDecl(_Strict):
    nodes: list[NodeDecl]
    edges: list[EdgeDecl]


class ScenarioDoc(_Strict):
    sources: list[SourceDecl] = Field(min_length=1)
    pmf: Optional[list[float]] = None
    model: Optional[ModelDecl] = None
    auxiliaries: Optional[AuxBlock] = None
    network: NetworkDecl
    demands: dict[int, list[int]]
    hints: dict[str, float] = Field(default_factory=dict)


@dataclass
class Scenario:
    doc: ScenarioDoc
    pmf: JointPmf
    aux_pmf: JointPmf | None
    network: Network
    demands: DemandMap

    @property
    def hints(self) -> dict[str, float]:
        return dict(self.doc.hints)

    def to_dict(self) -> dict:
        d = self.doc.model_dump(exclude_none=True)
        d["demands"] = {str(j): v for j, v in sorted(d["demands"].items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _loc(loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _source_pmf(doc: ScenarioDoc) -> JointPmf:
    variables = [Variable(s.name, Source(s.index), s.size) for s in doc.sources]
    if (doc.pmf is None) == (doc.model is None):
        raise ScenarioError("pmf", "give exactly one of 'pmf' and 'model'")
    if doc.model is not None:
        want = [(0, 2), (1, 2), (2, 2)]
        if [(s.index, s.size) for s in doc.sources] != want:
            raise ScenarioError("model", "the dsbs model needs binary sources with indices 0, 1, 2 in that order")
        return dsbs_star(doc.model.p1, doc.model.p2, names=tuple(s.name for s in doc.sources))
    expected = int(np.prod([s.size for s in doc.sources]))
    probs = np.asarray(doc.pmf, dtype=float)
    if probs.size != expected:
        raise ScenarioError("pmf", f"has {probs.size} entries, expected {expected} (product of source alphabet sizes)")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise ScenarioError("pmf", "entries must be finite and nonnegative")
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise ScenarioError("pmf", f"not normalized: entries sum to {total:.12g}, expected 1")
    # renormalise away representation noise so the pmf invariant holds exactly
    return JointPmf(variables, probs / total)


def _aux_pmf(doc: ScenarioDoc, base: JointPmf, sinks: set[int]) -> JointPmf | None:
    block = doc.auxiliaries
    if block is None:
        return None
    src_idx = {s.index for s in doc.sources}
    names = {s.name for s in doc.sources}
    labels = set()
    for k, a in enumerate(block.variables):
        path = f"auxiliaries.variables[{k}]"
        if a.source not in src_idx:
            raise ScenarioError(path + ".source", f"unknown source {a.source}")
        bad = sorted(set(a.sinks) - sinks)
        if bad:
            raise ScenarioError(path + ".sinks", f"unknown sinks {bad}")
        if a.size > MAX_ALPHABET:
            raise ScenarioError(path + ".size", f"alphabet size {a.size} exceeds cap {MAX_ALPHABET}")
        if a.name in names:
            raise ScenarioError(path + ".name", f"duplicate variable name {a.name!r}")
        label = (a.source, frozenset(a.sinks))
        if label in labels:
            raise ScenarioError(path, f"second auxiliary for source {a.source} and sinks {sorted(a.sinks)}")
        labels.add(label)
        names.add(a.name)
    variables = list(base.variables) + [Variable(a.name, Auxiliary(a.source, a.sinks), a.size) for a in block.variables]
    expected = int(np.prod([v.size for v in variables]))
    if expected > MAX_AUX_TABLE:
        raise ScenarioError("auxiliaries", f"joint table of {expected} entries exceeds cap {MAX_AUX_TABLE}")
    if block.pmf is None:
        if expected != base.probs.size:
            raise ScenarioError("auxiliaries.pmf", "required unless every auxiliary has size 1")
        return JointPmf(variables, base.probs)
    probs = np.asarray(block.pmf, dtype=float)
    if probs.size != expected:
        raise ScenarioError("auxiliaries.pmf", f"has {probs.size} entries, expected {expected}")
    if np.any(probs < 0) or not np.all(np.isfinite(probs)):
        raise ScenarioError("auxiliaries.pmf", "entries must be finite and nonnegative")
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-9:
        raise ScenarioError("auxiliaries.pmf", f"not normalized: entries sum to {total:.12g}, expected 1")
    pmf = JointPmf(variables, probs / total)
    marg = pmf.marginal_table(tuple(range(len(base.variables))))
    gap = float(np.abs(marg - base.table).max())
    if gap > MARGINAL_TOL:
        raise ScenarioError("auxiliaries.pmf", f"source marginal differs from the source pmf by {gap:.3g}")
    return pmf


def _network(doc: ScenarioDoc, sources: set[int], sinks: set[int]) -> Network:
    for k, n in enumerate(doc.network.nodes):
        path = f"network.nodes[{k}]"
        if n.kind == "intermediate" and n.index is not None:
            raise ScenarioError(path + ".index", "intermediate nodes carry no index")
        if n.kind != "intermediate" and n.index is None:
            raise ScenarioError(path + ".index", f"{n.kind} nodes need an index")
        if n.kind == "source" and n.index not in sources:
            raise ScenarioError(path + ".index", f"source node for undeclared source {n.index}")
        if n.kind == "sink" and n.index not in sinks:
            raise ScenarioError(path + ".index", f"sink {n.index} has no demand entry")
    ids = {n.id for n in doc.network.nodes}
    for k, e in enumerate(doc.network.edges):
        for end in ("u", "v"):
            if getattr(e, end) not in ids:
                raise ScenarioError(f"network.edges[{k}].{end}", f"unknown node {getattr(e, end)!r}")
    try:
        net = Network(
            [Node(n.id, n.kind, n.index) for n in doc.network.nodes],
            [Edge(e.u, e.v, e.weight) for e in doc.network.edges],
        )
    except ValueError as exc:
        raise ScenarioError("network", str(exc)) from None
    missing = sorted(sources - set(net.sources))
    if missing:
        raise ScenarioError("network.nodes", f"no node for sources {missing}")
    missing = sorted(sinks - set(net.sinks))
    if missing:
        raise ScenarioError("network.nodes", f"no node for sinks {missing}")
    return net


def build_scenario(doc: ScenarioDoc) -> Scenario:
    idx = [s.index for s in doc.sources]
    if len(set(idx)) != len(idx):
        raise ScenarioError("sources", "source indices must be unique")
    if len({s.name for s in doc.sources}) != len(doc.sources):
        raise ScenarioError("sources", "source names must be unique")
    if len(idx) > MAX_SOURCES:
        raise ScenarioError("sources", f"{len(idx)} sources exceed cap {MAX_SOURCES}")
    for k, s in enumerate(doc.sources):
        if s.size > MAX_ALPHABET:
            raise ScenarioError(f"sources[{k}].size", f"alphabet size {s.size} exceeds cap {MAX_ALPHABET}")
    if not doc.demands:
        raise ScenarioError("demands", "at least one sink is required")
    if len(doc.demands) > MAX_SINKS:
        raise ScenarioError("demands", f"{len(doc.demands)} sinks exceed cap {MAX_SINKS}")
    for j, req in doc.demands.items():
        if not req:
            raise ScenarioError(f"demands.{j}", "sink requests no source")
        for k, i in enumerate(req):
            if i not in idx:
                raise ScenarioError(f"demands.{j}[{k}]", f"unknown source {i}")
    pmf = _source_pmf(doc)
    demands = DemandMap(doc.demands, sources=idx)
    sinks = set(demands.sinks)
    aux = _aux_pmf(doc, pmf, sinks)
    net = _network(doc, set(idx), sinks)
    return Scenario(doc, pmf, aux, net, demands)


def parse_scenario(data: dict) -> Scenario:
    try:
        doc = ScenarioDoc.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ScenarioError(_loc(err["loc"]), err["msg"]) from None
    return build_scenario(doc)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ScenarioError("", "top level must be a JSON object")
    return parse_scenario(data)


def bundled(name: str) -> Path:
    """Path of a fixture shipped with the package (``fig2.json``, ``helper.json``)."""
    return Path(__file__).parent / "data" / name
