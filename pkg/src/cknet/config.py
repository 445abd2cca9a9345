"""Config ingestion: JSON files describing sheaves and simulation scenarios.

Schema (version "1"):
  nodes:   [{id, scm}]
  edges:   [{id, endpoints: [a, b], scm, restrictions: {node: rows},
             extensions: {node: rows}}]
  scenarios: [{name, rounds, seed, tol, policy: "scripted"|"greedy-local",
               schedules: {node: [intervention, ...]},
               free: {node: [{child, parent}, ...]}}]

SCM and intervention objects use the serializations from the scm module.
Validation failures carry config-path locations; `allow_invalid` loads the
object graph anyway for inspection workflows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json

import numpy as np

from cknet.measures import AffineMap
from cknet.scm import (
    Intervention,
    intervention_from_dict,
    intervention_to_dict,
    scm_from_dict,
    scm_to_dict,
)
from cknet.sheaf import CausalSheaf, Network, SheafReport, validate_sheaf


class ConfigError(ValueError):
    """Schema or validation failure, annotated with a config-path location."""

    def __init__(self, path: str, message: str, report: SheafReport | None = None):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.report = report


@dataclass(frozen=True)
class Scenario:
    name: str
    rounds: int
    seed: int
    tol: float
    policy: str
    schedules: dict[str, list[Intervention]] = field(default_factory=dict)
    free: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.policy not in ("scripted", "greedy-local"):
            raise ValueError(f"unknown policy {self.policy!r}")


def _expect(obj, key, path, types):
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required field")
    value = obj[key]
    if not isinstance(value, types):
        raise ConfigError(
            f"{path}.{key}", f"expected {types}, got {type(value).__name__}"
        )
    return value


def _matrix(rows, path, shape) -> np.ndarray:
    try:
        m = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, f"not a numeric matrix: {exc}") from None
    if m.ndim != 2:
        raise ConfigError(path, f"expected a matrix, got array of ndim {m.ndim}")
    if m.shape != shape:
        raise ConfigError(path, f"expected shape {shape}, got {m.shape}")
    return m


def parse_config(doc: dict, allow_invalid: bool = False, tol: float = 1e-6):
    """Build (sheaf, scenarios) from a parsed JSON document."""
    if _expect(doc, "version", "$", str) != "1":
        raise ConfigError("$.version", f"unsupported version {doc['version']!r}")
    node_stalks = {}
    for i, entry in enumerate(_expect(doc, "nodes", "$", list)):
        path = f"$.nodes[{i}]"
        nid = _expect(entry, "id", path, str)
        if nid in node_stalks:
            raise ConfigError(path, f"duplicate node id {nid!r}")
        try:
            node_stalks[nid] = scm_from_dict(_expect(entry, "scm", path, dict))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}.scm", str(exc)) from None
    edge_stalks = {}
    endpoints = {}
    restrictions = {}
    extensions = {}
    for i, entry in enumerate(_expect(doc, "edges", "$", list)):
        path = f"$.edges[{i}]"
        eid = _expect(entry, "id", path, str)
        if eid in edge_stalks:
            raise ConfigError(path, f"duplicate edge id {eid!r}")
        ends = _expect(entry, "endpoints", path, list)
        if len(ends) != 2:
            raise ConfigError(f"{path}.endpoints", "expected exactly two node ids")
        for end in ends:
            if end not in node_stalks:
                raise ConfigError(f"{path}.endpoints", f"unknown node {end!r}")
        try:
            edge_scm = scm_from_dict(_expect(entry, "scm", path, dict))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}.scm", str(exc)) from None
        edge_stalks[eid] = edge_scm
        endpoints[eid] = (ends[0], ends[1])
        restr = _expect(entry, "restrictions", path, dict)
        exten = _expect(entry, "extensions", path, dict)
        for end in ends:
            if end not in restr:
                raise ConfigError(
                    f"{path}.restrictions", f"missing matrix for incidence {end!r}"
                )
            if end not in exten:
                raise ConfigError(
                    f"{path}.extensions", f"missing matrix for incidence {end!r}"
                )
            node_dim = node_stalks[end].dim
            restrictions[(end, eid)] = AffineMap(
                _matrix(
                    restr[end],
                    f"{path}.restrictions.{end}",
                    (edge_scm.dim, node_dim),
                )
            )
            extensions[(end, eid)] = AffineMap(
                _matrix(
                    exten[end],
                    f"{path}.extensions.{end}",
                    (node_dim, edge_scm.dim),
                )
            )
    network = Network(frozenset(node_stalks), endpoints)
    sheaf = CausalSheaf(network, node_stalks, edge_stalks, restrictions, extensions)
    scenarios = {}
    for i, entry in enumerate(doc.get("scenarios", [])):
        path = f"$.scenarios[{i}]"
        name = _expect(entry, "name", path, str)
        schedules = {}
        for node, ivs in entry.get("schedules", {}).items():
            if node not in node_stalks:
                raise ConfigError(f"{path}.schedules", f"unknown node {node!r}")
            try:
                schedules[node] = [intervention_from_dict(iv) for iv in ivs]
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"{path}.schedules.{node}", str(exc)) from None
        free = {}
        for node, pairs in entry.get("free", {}).items():
            if node not in node_stalks:
                raise ConfigError(f"{path}.free", f"unknown node {node!r}")
            free[node] = [(p["child"], p["parent"]) for p in pairs]
        scenarios[name] = Scenario(
            name=name,
            rounds=int(entry.get("rounds", 1)),
            seed=int(entry.get("seed", 0)),
            tol=float(entry.get("tol", 1e-6)),
            policy=str(entry.get("policy", "scripted")),
            schedules=schedules,
            free=free,
        )
    if not allow_invalid:
        report = validate_sheaf(sheaf, tol=tol)
        if not report.ok:
            failing = ", ".join(
                f"{c.check}[{c.subject}]" for c in report.failures()
            )
            raise ConfigError("$", f"sheaf validation failed: {failing}", report)
    return sheaf, scenarios


def load_config(path: str, allow_invalid: bool = False, tol: float = 1e-6):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"parse error: {exc}") from None
    return parse_config(doc, allow_invalid=allow_invalid, tol=tol)


def sheaf_to_dict(sheaf: CausalSheaf, scenarios: dict | None = None) -> dict:
    doc = {
        "version": "1",
        "nodes": [
            {"id": nid, "scm": scm_to_dict(sheaf.node_stalks[nid])}
            for nid in sorted(sheaf.network.nodes)
        ],
        "edges": [
            {
                "id": eid,
                "endpoints": list(sheaf.network.edges[eid]),
                "scm": scm_to_dict(sheaf.edge_stalks[eid]),
                "restrictions": {
                    end: sheaf.restrictions[(end, eid)].matrix.tolist()
                    for end in sheaf.network.edges[eid]
                },
                "extensions": {
                    end: sheaf.extensions[(end, eid)].matrix.tolist()
                    for end in sheaf.network.edges[eid]
                },
            }
            for eid in sorted(sheaf.network.edges)
        ],
        "scenarios": [],
    }
    for name in sorted(scenarios or {}):
        sc = scenarios[name]
        doc["scenarios"].append(
            {
                "name": sc.name,
                "rounds": sc.rounds,
                "seed": sc.seed,
                "tol": sc.tol,
                "policy": sc.policy,
                "schedules": {
                    node: [intervention_to_dict(iv) for iv in ivs]
                    for node, ivs in sorted(sc.schedules.items())
                },
                "free": {
                    node: [{"child": c, "parent": p} for c, p in pairs]
                    for node, pairs in sorted(sc.free.items())
                },
            }
        )
    return doc
