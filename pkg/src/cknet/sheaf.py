"""Network sheaf and cosheaf of causal knowledge.

Nodes carry linear SCMs, edges carry shared abstract SCMs, and each
node-edge incidence carries a restriction map (projection onto the backbone
space) and an extension map (a right inverse embedding backbone measures
back into node knowledge). A 0-cochain assigns one measure per node; its
per-incidence projections disagree on an edge unless the cochain is a global
section.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cknet.abstraction import (
    Abstraction,
    ICReport,
    abstraction_from_restriction,
    check_ic,
    check_right_inverse,
    validate_abstraction,
)
from cknet.measures import AffineMap, GaussianMixture, mixture_distance, pushforward
from cknet.scm import (
    Intervention,
    LinearSCM,
    ValidationIssue,
    apply_intervention,
    observational_measure,
    validate_scm,
)

STRUCT_TOL = 1e-10
SECTION_TOL = 1e-6
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Network:
    """Finite network: nodes plus edges with distinct existing endpoints."""

    nodes: frozenset[str]
    edges: dict[str, tuple[str, str]]

    def __post_init__(self):
        nodes = frozenset(self.nodes)
        edges = dict(self.edges)
        for eid, (u, v) in edges.items():
            if u not in nodes or v not in nodes:
                raise ValueError(f"edge {eid!r} references unknown endpoint")
            if u == v:
                raise ValueError(f"edge {eid!r} is a self-loop")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

    def incidences(self) -> list[tuple[str, str]]:
        """All (node, edge) incidence pairs, deterministically ordered."""
        out = []
        for eid in sorted(self.edges):
            u, v = self.edges[eid]
            out.append((u, eid))
            out.append((v, eid))
        return out

    def incident_edges(self, node: str) -> list[str]:
        return [eid for eid in sorted(self.edges) if node in self.edges[eid]]


@dataclass(frozen=True)
class CausalSheaf:
    network: Network
    node_stalks: dict[str, LinearSCM]
    edge_stalks: dict[str, LinearSCM]
    restrictions: dict[tuple[str, str], AffineMap]
    extensions: dict[tuple[str, str], AffineMap]

    def __post_init__(self):
        for node in self.network.nodes:
            if node not in self.node_stalks:
                raise ValueError(f"missing stalk for node {node!r}")
        for eid in self.network.edges:
            if eid not in self.edge_stalks:
                raise ValueError(f"missing stalk for edge {eid!r}")
        for inc in self.network.incidences():
            if inc not in self.restrictions:
                raise ValueError(f"missing restriction for incidence {inc!r}")
            if inc not in self.extensions:
                raise ValueError(f"missing extension for incidence {inc!r}")

    def abstraction(self, node: str, edge: str) -> Abstraction:
        return abstraction_from_restriction(
            self.node_stalks[node], self.edge_stalks[edge], self.restrictions[(node, edge)]
        )

    def with_node_stalks(self, stalks: dict[str, LinearSCM]) -> "CausalSheaf":
        merged = dict(self.node_stalks)
        merged.update(stalks)
        return CausalSheaf(
            self.network, merged, self.edge_stalks, self.restrictions, self.extensions
        )


@dataclass(frozen=True)
class Cochain0:
    """One measure per node, with the node stalk's dimension."""

    values: dict[str, GaussianMixture]


@dataclass(frozen=True)
class SheafCheck:
    check: str
    subject: str
    ok: bool
    residual: float | None = None
    message: str = ""

    def to_dict(self) -> dict:
        out = {"check": self.check, "subject": self.subject, "ok": self.ok}
        if self.residual is not None:
            out["residual"] = self.residual
        if self.message:
            out["message"] = self.message
        return out


@dataclass(frozen=True)
class SheafReport:
    checks: tuple[SheafCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list[SheafCheck]:
        return [c for c in self.checks if not c.ok]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def default_ic_family(
    ab: Abstraction, extension: AffineMap, values: tuple[float, ...] = (-1.0, 0.0, 2.0)
) -> list[tuple[Intervention, Intervention]]:
    """Hard interventions on each macro variable, lifted through the extension.

    A macro target at value c corresponds to pinning its micro preimage block
    at c times the extension column, so the micro pushforward hits the same
    point mass whenever extension is a right inverse. Quantifying over all
    interventions is not enumerable; this grid plus the observational pair is
    the documented sound-but-incomplete default.
    """
    family = []
    for m in ab.macro.variables:
        col = ab.macro.index(m)
        for c in values:
            micro_targets = {
                v: float(c * extension.matrix[ab.micro.index(v), col])
                for v in ab.block(m)
            }
            family.append(
                (Intervention.hard({m: float(c)}), Intervention.hard(micro_targets))
            )
    return family


def validate_sheaf(
    sheaf: CausalSheaf,
    ic_families: dict[str, list[tuple[Intervention, Intervention]]] | None = None,
    tol: float = SECTION_TOL,
) -> SheafReport:
    """Stalk validity, abstraction validity, IC residuals, right inverses.

    `ic_families` maps an edge id to extra (macro, micro) intervention pairs
    checked at both incidences; the observational pair and the default hard
    grid are always included.
    """
    checks: list[SheafCheck] = []
    for node in sorted(sheaf.network.nodes):
        rep = validate_scm(sheaf.node_stalks[node])
        checks.append(
            SheafCheck(
                "scm",
                f"node:{node}",
                rep.ok,
                message="; ".join(i.message for i in rep.issues),
            )
        )
    for eid in sorted(sheaf.network.edges):
        rep = validate_scm(sheaf.edge_stalks[eid])
        checks.append(
            SheafCheck(
                "scm",
                f"edge:{eid}",
                rep.ok,
                message="; ".join(i.message for i in rep.issues),
            )
        )
    for node, eid in sheaf.network.incidences():
        subject = f"{node}|{eid}"
        restriction = sheaf.restrictions[(node, eid)]
        extension = sheaf.extensions[(node, eid)]
        edge_dim = sheaf.edge_stalks[eid].dim
        node_dim = sheaf.node_stalks[node].dim
        if restriction.matrix.shape != (edge_dim, node_dim):
            checks.append(
                SheafCheck(
                    "dimensions",
                    subject,
                    False,
                    message=f"restriction is {restriction.matrix.shape}, "
                    f"expected ({edge_dim},{node_dim})",
                )
            )
            continue
        if extension.matrix.shape != (node_dim, edge_dim):
            checks.append(
                SheafCheck(
                    "dimensions",
                    subject,
                    False,
                    message=f"extension is {extension.matrix.shape}, "
                    f"expected ({node_dim},{edge_dim})",
                )
            )
            continue
        ab = sheaf.abstraction(node, eid)
        rep = validate_abstraction(ab)
        checks.append(
            SheafCheck(
                "abstraction",
                subject,
                rep.ok,
                message="; ".join(f"{i.check}: {i.message}" for i in rep.issues),
            )
        )
        ri = check_right_inverse(restriction, extension, STRUCT_TOL)
        checks.append(SheafCheck("right_inverse", subject, ri))
        if not rep.ok:
            continue
        family = default_ic_family(ab, extension)
        if ic_families and eid in ic_families:
            family = family + list(ic_families[eid])
        ic = check_ic(ab, family, tol)
        worst = max(e.residual for e in ic.entries)
        checks.append(SheafCheck("ic", subject, ic.ok, residual=worst))
    return SheafReport(tuple(checks))


def project_cochain(
    sheaf: CausalSheaf, c0: Cochain0
) -> dict[tuple[str, str], GaussianMixture]:
    """Per-incidence pushforward of node values through the restrictions.

    An edge gets two side values, one per endpoint; they coincide exactly on
    global sections.
    """
    out = {}
    for node, eid in sheaf.network.incidences():
        value = c0.values[node]
        if value.dim != sheaf.node_stalks[node].dim:
            raise ValueError(
                f"cochain value at {node!r} has dimension {value.dim}, "
                f"stalk has {sheaf.node_stalks[node].dim}"
            )
        out[(node, eid)] = pushforward(sheaf.restrictions[(node, eid)], value)
    return out


def edge_disagreement(sheaf: CausalSheaf, c0: Cochain0, edge: str) -> float:
    """Distance between the two projected side values of one edge."""
    u, v = sheaf.network.edges[edge]
    side_u = pushforward(sheaf.restrictions[(u, edge)], c0.values[u])
    side_v = pushforward(sheaf.restrictions[(v, edge)], c0.values[v])
    return mixture_distance(side_u, side_v)


def energy(sheaf: CausalSheaf, c0: Cochain0) -> float:
    """Dirichlet-style total: sum of squared per-edge disagreements."""
    return float(
        sum(edge_disagreement(sheaf, c0, eid) ** 2 for eid in sheaf.network.edges)
    )


def is_global_section(
    sheaf: CausalSheaf, c0: Cochain0, tol: float = STRUCT_TOL
) -> tuple[bool, dict[str, float]]:
    """Verdict plus the per-edge residual list (always returned)."""
    residuals = {
        eid: edge_disagreement(sheaf, c0, eid) for eid in sorted(sheaf.network.edges)
    }
    return all(r <= tol for r in residuals.values()), residuals


def observational_cochain(sheaf: CausalSheaf) -> Cochain0:
    return Cochain0(
        {node: observational_measure(scm) for node, scm in sheaf.node_stalks.items()}
    )


def _golden_minimize(f, lo: float, hi: float, evals_left: int, iters: int = 40):
    """Deterministic golden-section refinement of f on [lo, hi].

    Returns (best_x, best_f, evaluations used). Assumes f is cheap; stops
    early if the evaluation budget runs out.
    """
    used = 0
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    if evals_left < 2:
        return None, None, used
    f1, f2 = f(x1), f(x2)
    used += 2
    best_x, best_f = (x1, f1) if f1 <= f2 else (x2, f2)
    for _ in range(iters):
        if used >= evals_left:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        used += 1
        if f1 < best_f:
            best_x, best_f = x1, f1
        if f2 < best_f:
            best_x, best_f = x2, f2
    return best_x, best_f, used


@dataclass(frozen=True)
class SectionSearchResult:
    cochain: Cochain0
    energy: float
    coefficients: dict[str, dict[tuple[str, str], float]]
    evaluations: int
    trajectory: tuple[tuple[int, str, str, float, float], ...] = ()


def search_section(
    sheaf: CausalSheaf,
    parametrization: dict[str, list[tuple[str, str]]],
    seed: int = 0,
    budget: int = 10_000,
    bounds: tuple[float, float] = (-2.0, 2.0),
    target: float = 1e-10,
) -> SectionSearchResult:
    """Derivative-free search for a zero-energy cochain over soft coefficients.

    Coordinate-wise golden-section refinement with random restarts,
    deterministic given the seed. The candidate at a coefficient assignment is
    the observational cochain of the soft-intervened node stalks, so every
    candidate stays inside valid causal knowledge by construction. The result
    is never worse than the starting assignment.
    """
    coords: list[tuple[str, str, str]] = []
    for node in sorted(parametrization):
        if node not in sheaf.network.nodes:
            raise ValueError(f"parametrization references unknown node {node!r}")
        scm = sheaf.node_stalks[node]
        for child, parent in parametrization[node]:
            if (child, parent) not in scm.edge_support():
                raise ValueError(
                    f"free coefficient {child}<-{parent} outside the edge support "
                    f"of node {node!r}"
                )
            coords.append((node, child, parent))

    def assemble(x: np.ndarray) -> dict[str, LinearSCM]:
        per_node: dict[str, dict[tuple[str, str], float]] = {}
        for (node, child, parent), value in zip(coords, x):
            per_node.setdefault(node, {})[(child, parent)] = float(value)
        return {
            node: apply_intervention(sheaf.node_stalks[node], Intervention.soft(coeffs))
            for node, coeffs in per_node.items()
        }

    evals = 0
    trajectory: list[tuple[int, str, str, float, float]] = []

    def evaluate(x: np.ndarray) -> tuple[float, Cochain0]:
        nonlocal evals
        evals += 1
        candidate = sheaf.with_node_stalks(assemble(x)) if coords else sheaf
        c0 = observational_cochain(candidate)
        return energy(sheaf, c0), c0

    start = np.array(
        [
            sheaf.node_stalks[node].coeffs[
                sheaf.node_stalks[node].index(child),
                sheaf.node_stalks[node].index(parent),
            ]
            for node, child, parent in coords
        ]
    )
    best_energy, best_c0 = evaluate(start)
    best_x = start.copy()
    for eid in sorted(sheaf.network.edges):
        trajectory.append(
            (evals, "start", eid, edge_disagreement(sheaf, best_c0, eid), best_energy)
        )
    if not coords or best_energy <= target:
        return SectionSearchResult(
            best_c0, best_energy, _coeff_table(coords, best_x), evals, tuple(trajectory)
        )

    rng = np.random.default_rng(seed)
    lo, hi = bounds
    restart = 0
    while evals < budget and best_energy > target:
        if restart == 0:
            x = start.copy()
            e, _ = best_energy, best_c0
        else:
            x = rng.uniform(lo, hi, size=len(coords))
            e, _ = evaluate(x)
        improved = True
        while improved and evals < budget and e > target:
            improved = False
            for k, (node, child, parent) in enumerate(coords):
                if evals >= budget:
                    break

                def line(v: float, k=k) -> float:
                    trial = x.copy()
                    trial[k] = v
                    return evaluate(trial)[0]

                xk, fk, _ = _golden_minimize(line, lo, hi, budget - evals)
                if xk is not None and fk < e:  # monotone acceptance
                    x[k] = xk
                    e = fk
                    improved = True
                    if e < best_energy:
                        best_energy, best_x = e, x.copy()
                        _, best_c0 = evaluate(best_x)
                        for eid in sorted(sheaf.network.edges):
                            trajectory.append(
                                (
                                    evals,
                                    node,
                                    eid,
                                    edge_disagreement(sheaf, best_c0, eid),
                                    best_energy,
                                )
                            )
        restart += 1
    _, best_c0 = evaluate(best_x)
    return SectionSearchResult(
        best_c0, best_energy, _coeff_table(coords, best_x), evals, tuple(trajectory)
    )


def _coeff_table(
    coords: list[tuple[str, str, str]], x: np.ndarray
) -> dict[str, dict[tuple[str, str], float]]:
    table: dict[str, dict[tuple[str, str], float]] = {}
    for (node, child, parent), value in zip(coords, x):
        table.setdefault(node, {})[(child, parent)] = float(value)
    return table
