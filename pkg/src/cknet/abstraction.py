"""Abstractions between micro and macro linear SCMs.

An abstraction bundles the relevant micro variables, a surjective node map
onto the macro variables, and an affine functional map whose matrix respects
the node map's block structure. Interventional consistency is checked over a
declared finite family of paired interventions; extensions are validated as
exact right inverses of restrictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cknet.measures import AffineMap, GaussianMixture, mixture_distance, pushforward
from cknet.scm import (
    Intervention,
    LinearSCM,
    ValidationIssue,
    ValidationReport,
    apply_intervention,
    observational_measure,
)

RANK_TOL = 1e-10


@dataclass(frozen=True)
class Abstraction:
    """Micro-to-macro abstraction: relevant set, node map, functional map."""

    micro: LinearSCM
    macro: LinearSCM
    relevant: frozenset[str]
    node_map: dict[str, str]
    functional_map: AffineMap
    exo_record: tuple[frozenset[str], dict[str, str]] | None = None

    def __post_init__(self):
        object.__setattr__(self, "relevant", frozenset(self.relevant))
        object.__setattr__(self, "node_map", dict(self.node_map))

    def block(self, macro_var: str) -> list[str]:
        """Micro variables mapped onto macro_var (the preimage of the node map)."""
        return [v for v in self.micro.variables if self.node_map.get(v) == macro_var]


def validate_abstraction(ab: Abstraction) -> ValidationReport:
    """Surjectivity, full row rank, zero columns outside R, block structure."""
    issues = []
    A = ab.functional_map.matrix
    if A.shape != (ab.macro.dim, ab.micro.dim):
        issues.append(
            ValidationIssue(
                "shape",
                "functional_map",
                f"matrix is {A.shape}, expected ({ab.macro.dim},{ab.micro.dim})",
            )
        )
        return ValidationReport(tuple(issues))
    for v in ab.relevant:
        if v not in ab.micro.variables:
            issues.append(ValidationIssue("relevant", v, "not a micro variable"))
    for v, target in ab.node_map.items():
        if v not in ab.relevant:
            issues.append(ValidationIssue("node_map", v, "source not in relevant set"))
        if target not in ab.macro.variables:
            issues.append(ValidationIssue("node_map", v, f"unknown macro variable {target!r}"))
    mapped = set(ab.node_map.get(v) for v in ab.relevant)
    for m in ab.macro.variables:
        if m not in mapped:
            issues.append(
                ValidationIssue("surjectivity", m, "macro variable not hit by node map")
            )
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL))
    if rank < ab.macro.dim:
        issues.append(
            ValidationIssue(
                "rank",
                "functional_map",
                f"row rank {rank} < macro dimension {ab.macro.dim}",
            )
        )
    for j, v in enumerate(ab.micro.variables):
        col = A[:, j]
        if v not in ab.relevant:
            if np.max(np.abs(col), initial=0.0) > 0.0:
                issues.append(
                    ValidationIssue(
                        "support", v, "nonzero column for a variable outside the relevant set"
                    )
                )
            continue
        target = ab.node_map.get(v)
        for i, m in enumerate(ab.macro.variables):
            if m != target and col[i] != 0.0:
                issues.append(
                    ValidationIssue(
                        "block",
                        v,
                        f"entry in row {m!r} outside the node-map block {target!r}",
                    )
                )
    return ValidationReport(tuple(issues))


def abstract_measure(ab: Abstraction, chi: GaussianMixture) -> GaussianMixture:
    """Pushforward of a micro measure through the functional map."""
    return pushforward(ab.functional_map, chi)


@dataclass(frozen=True)
class ICEntry:
    label: str
    residual: float

    def to_dict(self) -> dict:
        return {"label": self.label, "residual": self.residual}


@dataclass(frozen=True)
class ICReport:
    entries: tuple[ICEntry, ...]
    tol: float

    @property
    def ok(self) -> bool:
        return all(e.residual <= self.tol for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "tol": self.tol,
            "entries": [e.to_dict() for e in self.entries],
        }


def _pair_label(k: int, macro_iv: Intervention) -> str:
    if macro_iv.kind == "hard" and macro_iv.hard_targets:
        inner = ",".join(f"{n}={v:g}" for n, v in sorted(macro_iv.hard_targets.items()))
        return f"{k}:do({inner})"
    if macro_iv.soft_coeffs:
        inner = ",".join(
            f"{c}<-{p}:{v:g}" for (c, p), v in sorted(macro_iv.soft_coeffs.items())
        )
        return f"{k}:soft({inner})"
    return f"{k}:observational"


def check_ic(
    ab: Abstraction,
    family: list[tuple[Intervention, Intervention]],
    tol: float,
) -> ICReport:
    """Residuals of abstract-then-intervene vs intervene-then-abstract.

    Each family entry is (macro intervention, micro counterpart on the node
    map's preimage of its targets). The observational pair is always checked.
    """
    pairs = [(Intervention.identity(), Intervention.identity())]
    for macro_iv, micro_iv in family:
        if macro_iv.kind != micro_iv.kind:
            raise ValueError("mismatched family entry: intervention kinds differ")
        if macro_iv.kind == "hard":
            expected = set()
            for t in macro_iv.hard_targets:
                expected.update(ab.block(t))
            if expected != set(micro_iv.hard_targets):
                raise ValueError(
                    "mismatched family entry: micro hard targets are not the "
                    "node-map preimage of the macro targets"
                )
        pairs.append((macro_iv, micro_iv))
    entries = []
    for k, (macro_iv, micro_iv) in enumerate(pairs):
        micro_measure = observational_measure(apply_intervention(ab.micro, micro_iv))
        macro_measure = observational_measure(apply_intervention(ab.macro, macro_iv))
        residual = mixture_distance(abstract_measure(ab, micro_measure), macro_measure)
        entries.append(ICEntry(_pair_label(k, macro_iv), residual))
    return ICReport(tuple(entries), tol)


def check_right_inverse(
    restriction: AffineMap, extension: AffineMap, tol: float
) -> bool:
    """True iff restriction o extension is the identity within tol.

    When true, projecting after embedding returns every mixture unchanged.
    """
    if restriction.in_dim != extension.out_dim or restriction.out_dim != extension.in_dim:
        raise ValueError(
            f"dimension mismatch: restriction {restriction.matrix.shape}, "
            f"extension {extension.matrix.shape}"
        )
    m = restriction.out_dim
    prod = restriction.matrix @ extension.matrix
    if np.max(np.abs(prod - np.eye(m))) > tol:
        return False
    resid = restriction.matrix @ extension.offset + restriction.offset
    return bool(np.max(np.abs(resid), initial=0.0) <= tol)


def default_extension(restriction: AffineMap) -> AffineMap:
    """Minimum-Frobenius-norm right inverse: F^T (F F^T)^{-1}, zero offset."""
    F = restriction.matrix
    G = F.T @ np.linalg.inv(F @ F.T)
    return AffineMap(G, np.zeros(F.shape[1]))


def abstraction_from_restriction(
    micro: LinearSCM, macro: LinearSCM, functional_map: AffineMap
) -> Abstraction:
    """Infer relevant set and node map from the matrix support.

    A column with nonzero entries marks a relevant micro variable; the row
    carrying its (unique, by block structure) nonzero entry names its macro
    image. Ambiguous columns map to the first such row and are flagged by
    validate_abstraction.
    """
    A = functional_map.matrix
    relevant = set()
    node_map = {}
    for j, v in enumerate(micro.variables):
        rows = np.flatnonzero(A[:, j] != 0.0)
        if rows.size:
            relevant.add(v)
            node_map[v] = macro.variables[int(rows[0])]
    return Abstraction(micro, macro, frozenset(relevant), node_map, functional_map)


def abstraction_to_dict(ab: Abstraction, micro_id: str, macro_id: str) -> dict:
    return {
        "micro": micro_id,
        "macro": macro_id,
        "relevant": sorted(ab.relevant, key=ab.micro.index),
        "node_map": {k: v for k, v in sorted(ab.node_map.items())},
        "alpha": ab.functional_map.matrix.tolist(),
    }
