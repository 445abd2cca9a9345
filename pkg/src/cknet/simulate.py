"""Deterministic multi-round intervention dynamics over a sheaf."""

from __future__ import annotations

from dataclasses import dataclass

from cknet.config import Scenario
from cknet.scm import Intervention, LinearSCM, apply_intervention
from cknet.sheaf import (
    CausalSheaf,
    _golden_minimize,
    edge_disagreement,
    energy,
    observational_cochain,
)


@dataclass(frozen=True)
class TrajectoryRow:
    round: int
    node: str
    edge: str
    disagreement: float
    energy: float


@dataclass(frozen=True)
class SimulationResult:
    rows: tuple[TrajectoryRow, ...]
    energies: tuple[float, ...]
    final_stalks: dict[str, LinearSCM]

    @property
    def final_energy(self) -> float:
        return self.energies[-1]

    def csv(self) -> str:
        lines = ["round,node,edge,disagreement,energy"]
        for r in self.rows:
            lines.append(
                f"{r.round},{r.node},{r.edge},{r.disagreement:.17g},{r.energy:.17g}"
            )
        return "\n".join(lines) + "\n"


def _greedy_node_step(
    sheaf: CausalSheaf, node: str, free: list[tuple[str, str]]
) -> CausalSheaf:
    """Coordinate descent on the node's incident-edge disagreement.

    Each free coefficient is refined by golden section on [-2, 2]; a step is
    accepted only if it strictly lowers the node-local energy. Coefficients of
    one node only touch its own incident edges, so total energy is monotone.
    """
    incident = sheaf.network.incident_edges(node)

    def local_energy(candidate: CausalSheaf) -> float:
        c0 = observational_cochain(candidate)
        return sum(edge_disagreement(candidate, c0, eid) ** 2 for eid in incident)

    current = sheaf
    for child, parent in free:
        scm = current.node_stalks[node]
        base_energy = local_energy(current)

        def line(v: float) -> float:
            trial = apply_intervention(scm, Intervention.soft({(child, parent): v}))
            return local_energy(current.with_node_stalks({node: trial}))

        xk, fk, _ = _golden_minimize(line, -2.0, 2.0, evals_left=10_000)
        if xk is not None and fk < base_energy:
            current = current.with_node_stalks(
                {
                    node: apply_intervention(
                        scm, Intervention.soft({(child, parent): xk})
                    )
                }
            )
    return current


def run_simulate(sheaf: CausalSheaf, scenario: Scenario) -> SimulationResult:
    """Apply per-node schedules or the greedy policy for `rounds` rounds.

    Rows are emitted in round-major order, one per (node, edge) incidence,
    with the round's total energy repeated on each row.
    """
    current = sheaf
    rows: list[TrajectoryRow] = []
    energies: list[float] = []
    for rnd in range(1, scenario.rounds + 1):
        if scenario.policy == "scripted":
            updates = {}
            for node in sorted(scenario.schedules):
                schedule = scenario.schedules[node]
                if rnd - 1 < len(schedule):
                    iv = schedule[rnd - 1]
                    try:
                        updates[node] = apply_intervention(
                            current.node_stalks[node], iv
                        )
                    except (KeyError, ValueError) as exc:
                        raise ValueError(
                            f"invalid intervention at round {rnd} on node "
                            f"{node!r}: {exc}"
                        ) from None
            if updates:
                current = current.with_node_stalks(updates)
        else:  # greedy-local
            for node in sorted(scenario.free):
                current = _greedy_node_step(current, node, scenario.free[node])
        c0 = observational_cochain(current)
        total = energy(current, c0)
        energies.append(total)
        for node, eid in current.network.incidences():
            rows.append(
                TrajectoryRow(
                    rnd, node, eid, edge_disagreement(current, c0, eid), total
                )
            )
    return SimulationResult(tuple(rows), tuple(energies), dict(current.node_stalks))
