"""Relative causal knowledge: transport of measures along network paths.

A path alternates restriction (project onto the edge backbone) and extension
(embed into the next node); the composite is a single affine map, and the
image of a node's causal knowledge under it is path-dependent in general.
"""

from __future__ import annotations

from dataclasses import dataclass

from cknet.measures import AffineMap, GaussianMixture, affine_compose, pushforward
from cknet.scm import CausalKnowledge
from cknet.sheaf import CausalSheaf


@dataclass(frozen=True)
class PathQuery:
    """A walk source -> target given by an edge id sequence (k >= 1)."""

    source: str
    target: str
    edges: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        if not self.edges:
            raise ValueError("path needs at least one edge")

    def node_sequence(self, sheaf: CausalSheaf) -> list[str]:
        """Nodes visited, validated against the network's incidences."""
        nodes = [self.source]
        current = self.source
        for eid in self.edges:
            if eid not in sheaf.network.edges:
                raise ValueError(f"unknown edge {eid!r}")
            u, v = sheaf.network.edges[eid]
            if current == u:
                current = v
            elif current == v:
                current = u
            else:
                raise ValueError(
                    f"edge {eid!r} is not incident to node {current!r}"
                )
            nodes.append(current)
        if current != self.target:
            raise ValueError(
                f"path ends at {current!r}, expected target {self.target!r}"
            )
        return nodes


def embed_measure(
    sheaf: CausalSheaf, node: str, edge: str, chi_edge: GaussianMixture
) -> GaussianMixture:
    """Pushforward of an edge measure through the extension at (node, edge).

    Re-projecting through the restriction returns chi_edge whenever the
    extension is a validated right inverse.
    """
    if (node, edge) not in sheaf.extensions:
        raise ValueError(f"unknown incidence ({node!r}, {edge!r})")
    if chi_edge.dim != sheaf.edge_stalks[edge].dim:
        raise ValueError(
            f"measure dimension {chi_edge.dim} != edge stalk dimension "
            f"{sheaf.edge_stalks[edge].dim}"
        )
    return pushforward(sheaf.extensions[(node, edge)], chi_edge)


def path_map(sheaf: CausalSheaf, path: PathQuery) -> AffineMap:
    """The composite extension-after-restriction map along the path."""
    nodes = path.node_sequence(sheaf)
    total = AffineMap.identity(sheaf.node_stalks[path.source].dim)
    for i, eid in enumerate(path.edges):
        rho, sigma = nodes[i], nodes[i + 1]
        total = affine_compose(sheaf.restrictions[(rho, eid)], total)
        total = affine_compose(sheaf.extensions[(sigma, eid)], total)
    return total


def relative_measure(
    sheaf: CausalSheaf, path: PathQuery, chi: GaussianMixture
) -> GaussianMixture:
    """chi seen from the path's target: one pushforward through the composite."""
    if chi.dim != sheaf.node_stalks[path.source].dim:
        raise ValueError(
            f"measure dimension {chi.dim} != source stalk dimension "
            f"{sheaf.node_stalks[path.source].dim}"
        )
    return pushforward(path_map(sheaf, path), chi)


def rck_family(
    sheaf: CausalSheaf, path: PathQuery, ck: CausalKnowledge
) -> list[GaussianMixture]:
    """Images of every CK measure along the path; the finite generator set."""
    if tuple(ck.base.variables) != tuple(sheaf.node_stalks[path.source].variables):
        raise ValueError("causal knowledge does not belong to the source node's SCM")
    composite = path_map(sheaf, path)
    return [pushforward(composite, chi) for chi in ck.measures]


def path_to_dict(path: PathQuery) -> dict:
    return {"source": path.source, "target": path.target, "edges": list(path.edges)}


def path_from_dict(obj: dict) -> PathQuery:
    return PathQuery(obj["source"], obj["target"], tuple(obj["edges"]))
