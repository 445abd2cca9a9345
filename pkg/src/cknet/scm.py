"""Linear additive-noise Markovian SCMs over a declared topological order.

The mixing map (I - C)^{-1} sends independent exogenous noise to the
endogenous variables; hard and soft interventions are endomaps on the model
class, and every intervention induces an affine morphism sending the
observational measure to the interventional one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from cknet.measures import (
    AffineMap,
    GaussianMixture,
    pushforward,
)


@dataclass(frozen=True)
class ValidationIssue:
    check: str
    subject: str
    message: str

    def to_dict(self) -> dict:
        return {"check": self.check, "subject": self.subject, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def to_dict(self) -> dict:
        return {"ok": self.ok, "issues": [i.to_dict() for i in self.issues]}


@dataclass(frozen=True)
class LinearSCM:
    """X_i = sum_j C[i,j] X_j + Z_i with Z_i ~ N(noise_mean_i, noise_var_i).

    `variables` is the topological order; C must be strictly lower triangular
    in that order. `support` optionally declares edges beyond the nonzero
    entries of C (e.g. coefficients currently at zero that soft interventions
    may set).
    """

    variables: tuple[str, ...]
    coeffs: np.ndarray
    noise_mean: np.ndarray
    noise_var: np.ndarray
    support: frozenset[tuple[str, str]] | None = None

    def __post_init__(self):
        variables = tuple(self.variables)
        n = len(variables)
        if len(set(variables)) != n:
            raise ValueError("duplicate variable names")
        C = np.asarray(self.coeffs, dtype=float)
        if C.shape != (n, n):
            raise ValueError(f"coeffs shape {C.shape} != ({n},{n})")
        mean = np.asarray(self.noise_mean, dtype=float)
        var = np.asarray(self.noise_var, dtype=float)
        if mean.shape != (n,) or var.shape != (n,):
            raise ValueError("noise_mean/noise_var must have length n")
        support = None if self.support is None else frozenset(self.support)
        C.setflags(write=False)
        mean.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "coeffs", C)
        object.__setattr__(self, "noise_mean", mean)
        object.__setattr__(self, "noise_var", var)
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def edge_support(self) -> frozenset[tuple[str, str]]:
        """Declared edges: nonzero coefficients plus the explicit support set."""
        edges = {
            (self.variables[i], self.variables[j])
            for i in range(self.dim)
            for j in range(self.dim)
            if self.coeffs[i, j] != 0.0
        }
        if self.support is not None:
            edges |= set(self.support)
        return frozenset(edges)


@dataclass(frozen=True)
class Intervention:
    """Hard do(X=c) assignments or soft coefficient replacements on existing edges."""

    kind: str
    hard_targets: dict[str, float] = field(default_factory=dict)
    soft_coeffs: dict[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("hard", "soft"):
            raise ValueError(f"kind must be 'hard' or 'soft', got {self.kind!r}")
        if self.kind == "hard" and self.soft_coeffs:
            raise ValueError("hard intervention cannot carry soft coefficients")
        if self.kind == "soft" and self.hard_targets:
            raise ValueError("soft intervention cannot carry hard targets")
        object.__setattr__(self, "hard_targets", dict(self.hard_targets))
        object.__setattr__(self, "soft_coeffs", dict(self.soft_coeffs))

    @staticmethod
    def identity() -> "Intervention":
        return Intervention("soft")

    @staticmethod
    def hard(targets: dict[str, float]) -> "Intervention":
        return Intervention("hard", hard_targets=targets)

    @staticmethod
    def soft(coeffs: dict[tuple[str, str], float]) -> "Intervention":
        return Intervention("soft", soft_coeffs=coeffs)


@dataclass(frozen=True)
class CausalKnowledge:
    """A model together with its intervened states: measures and morphisms.

    measures[0] is observational; measures[k] = pushforward(morphisms[k], obs).
    """

    base: LinearSCM
    interventions: tuple[Intervention, ...]
    measures: tuple[GaussianMixture, ...]
    morphisms: tuple[AffineMap, ...]


def validate_scm(scm: LinearSCM) -> ValidationReport:
    """Report-style check of acyclicity (strict lower triangularity) and noise."""
    issues = []
    n = scm.dim
    for i in range(n):
        for j in range(i, n):
            if scm.coeffs[i, j] != 0.0:
                issues.append(
                    ValidationIssue(
                        "acyclicity",
                        f"{scm.variables[i]}<-{scm.variables[j]}",
                        "coefficient on or above the diagonal of the declared order",
                    )
                )
    if scm.support is not None:
        for child, parent in sorted(scm.support):
            if child not in scm.variables or parent not in scm.variables:
                issues.append(
                    ValidationIssue("support", f"{child}<-{parent}", "unknown variable")
                )
            elif scm.index(child) <= scm.index(parent):
                issues.append(
                    ValidationIssue(
                        "support",
                        f"{child}<-{parent}",
                        "support edge violates the declared order",
                    )
                )
    for i in range(n):
        if scm.noise_var[i] < 0:
            issues.append(
                ValidationIssue(
                    "noise", scm.variables[i], f"negative variance {scm.noise_var[i]!r}"
                )
            )
    return ValidationReport(tuple(issues))


def _require_valid(scm: LinearSCM) -> None:
    report = validate_scm(scm)
    if not report.ok:
        msgs = "; ".join(f"{i.check}[{i.subject}]: {i.message}" for i in report.issues)
        raise ValueError(f"invalid SCM: {msgs}")


def mixing_map(scm: LinearSCM) -> AffineMap:
    """A = (I-C)^{-1} diag(sqrt(var)), b = (I-C)^{-1} noise_mean.

    (I - C) is unit lower triangular, so the inverse is a forward substitution.
    """
    _require_valid(scm)
    n = scm.dim
    ImC = np.eye(n) - scm.coeffs
    A = solve_triangular(
        ImC, np.diag(np.sqrt(scm.noise_var)), lower=True, unit_diagonal=True
    )
    b = solve_triangular(ImC, scm.noise_mean, lower=True, unit_diagonal=True)
    return AffineMap(A, b)


def observational_measure(scm: LinearSCM) -> GaussianMixture:
    """Single Gaussian N(b, A A^T): the exogenous product measure pushed forward."""
    m = mixing_map(scm)
    cov = m.matrix @ m.matrix.T
    return GaussianMixture.single(m.offset, 0.5 * (cov + cov.T))


def _check_intervention(scm: LinearSCM, iv: Intervention) -> None:
    if iv.kind == "hard":
        for name in iv.hard_targets:
            scm.index(name)
    else:
        support = scm.edge_support()
        for child, parent in iv.soft_coeffs:
            scm.index(child)
            scm.index(parent)
            if scm.index(child) <= scm.index(parent):
                raise ValueError(
                    f"soft pair {child}<-{parent} violates the declared order"
                )
            if (child, parent) not in support:
                raise ValueError(
                    f"soft pair {child}<-{parent} outside the declared edge support"
                )


def apply_intervention(scm: LinearSCM, iv: Intervention) -> LinearSCM:
    """Mutilated (hard) or re-weighted (soft) model; again a valid LinearSCM."""
    _check_intervention(scm, iv)
    C = scm.coeffs.copy()
    mean = scm.noise_mean.copy()
    var = scm.noise_var.copy()
    if iv.kind == "hard":
        for name, value in iv.hard_targets.items():
            i = scm.index(name)
            C[i, :] = 0.0
            var[i] = 0.0
            mean[i] = float(value)
    else:
        for (child, parent), value in iv.soft_coeffs.items():
            C[scm.index(child), scm.index(parent)] = float(value)
    return LinearSCM(scm.variables, C, mean, var, scm.support)


def intervention_map(scm: LinearSCM, iv: Intervention) -> AffineMap:
    """Affine morphism sending the observational measure to the interventional one.

    matrix = A_I A^{-1}, offset = b_I - A_I A^{-1} b, where (A, b) is the base
    mixing map and (A_I, b_I) the intervened one. Requires a nondegenerate
    base: every exogenous variance strictly positive.
    """
    _require_valid(scm)
    if np.any(scm.noise_var <= 0.0):
        raise ValueError(
            "singular mixing: base model has a zero-variance exogenous coordinate"
        )
    base = mixing_map(scm)
    intervened = mixing_map(apply_intervention(scm, iv))
    # A^{-1} = diag(1/sqrt(var)) (I - C)  -- exact for the additive-noise class
    Ainv = np.diag(1.0 / np.sqrt(scm.noise_var)) @ (np.eye(scm.dim) - scm.coeffs)
    matrix = intervened.matrix @ Ainv
    offset = intervened.offset - matrix @ base.offset
    return AffineMap(matrix, offset)


def generate_ck(scm: LinearSCM, ivs: list[Intervention]) -> CausalKnowledge:
    """Observational measure first, then one measure and morphism per intervention."""
    obs = observational_measure(scm)
    measures = [obs]
    morphisms = [AffineMap.identity(scm.dim)]
    for iv in ivs:
        eta = intervention_map(scm, iv)
        measures.append(pushforward(eta, obs))
        morphisms.append(eta)
    return CausalKnowledge(scm, tuple(ivs), tuple(measures), tuple(morphisms))


def _ldl_no_pivot(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """S = L D L^T with unit lower-triangular L, in the given coordinate order."""
    n = S.shape[0]
    L = np.eye(n)
    D = np.zeros(n)
    for j in range(n):
        D[j] = S[j, j] - np.sum(L[j, :j] ** 2 * D[:j])
        if abs(D[j]) < 1e-12:
            D[j] = 0.0
            L[j + 1 :, j] = 0.0
            continue
        for i in range(j + 1, n):
            L[i, j] = (S[i, j] - np.sum(L[i, :j] * L[j, :j] * D[:j])) / D[j]
    return L, D


def is_valid_soft_measure(
    scm: LinearSCM, sigma: np.ndarray, tol: float = 1e-8
) -> tuple[bool, dict[tuple[str, str], float] | None]:
    """Decide whether N(0, sigma) is reachable from `scm` by a soft intervention.

    Factor sigma = L D L^T in the topological order. The candidate is valid iff
    D = I (noise untouched) and the implied coefficient matrix C = I - L^{-1}
    is supported on the declared edges. L itself is the candidate mixing
    matrix, whose support is the ancestral closure of the edges, so the support
    test must run on C, not on L. Returns (verdict, witness coefficients).
    """
    S = np.asarray(sigma, dtype=float)
    if S.shape != (scm.dim, scm.dim):
        raise ValueError(f"sigma shape {S.shape} != ({scm.dim},{scm.dim})")
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-10:
        raise ValueError("sigma is not symmetric")
    if np.linalg.eigvalsh(S).min() < -1e-10:
        raise ValueError("sigma is not PSD")
    if np.max(np.abs(scm.noise_mean), initial=0.0) > 1e-10 or np.max(
        np.abs(scm.noise_var - 1.0), initial=0.0
    ) > 1e-10:
        raise ValueError("oracle requires a zero-mean, unit-noise-variance SCM")
    L, D = _ldl_no_pivot(S)
    if np.max(np.abs(D - 1.0), initial=0.0) > tol:
        return False, None
    Linv = solve_triangular(L, np.eye(scm.dim), lower=True, unit_diagonal=True)
    C = np.eye(scm.dim) - Linv
    support = scm.edge_support()
    witness: dict[tuple[str, str], float] = {}
    for i in range(scm.dim):
        for j in range(i):
            pair = (scm.variables[i], scm.variables[j])
            if pair in support:
                witness[pair] = float(C[i, j])
            elif abs(C[i, j]) > tol:
                return False, None
    return True, witness


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def scm_to_dict(scm: LinearSCM) -> dict:
    pairs = sorted(
        scm.edge_support(), key=lambda p: (scm.index(p[0]), scm.index(p[1]))
    )
    return {
        "variables": list(scm.variables),
        "coefficients": [
            {
                "child": child,
                "parent": parent,
                "value": float(scm.coeffs[scm.index(child), scm.index(parent)]),
            }
            for child, parent in pairs
        ],
        "noise": {
            "mean": scm.noise_mean.tolist(),
            "var": scm.noise_var.tolist(),
        },
    }


def scm_from_dict(obj: dict) -> LinearSCM:
    variables = tuple(obj["variables"])
    n = len(variables)
    index = {name: i for i, name in enumerate(variables)}
    C = np.zeros((n, n))
    support = set()
    for entry in obj["coefficients"]:
        child, parent = entry["child"], entry["parent"]
        if child not in index or parent not in index:
            raise ValueError(f"coefficient references unknown variable: {entry!r}")
        C[index[child], index[parent]] = float(entry["value"])
        support.add((child, parent))
    noise = obj["noise"]
    return LinearSCM(
        variables,
        C,
        np.array(noise["mean"], dtype=float),
        np.array(noise["var"], dtype=float),
        frozenset(support),
    )


def intervention_to_dict(iv: Intervention) -> dict:
    if iv.kind == "hard":
        return {"kind": "hard", "targets": {k: float(v) for k, v in iv.hard_targets.items()}}
    return {
        "kind": "soft",
        "coefficients": [
            {"child": child, "parent": parent, "value": float(v)}
            for (child, parent), v in iv.soft_coeffs.items()
        ],
    }


def intervention_from_dict(obj: dict) -> Intervention:
    kind = obj["kind"]
    if kind == "hard":
        return Intervention.hard({k: float(v) for k, v in obj["targets"].items()})
    if kind == "soft":
        return Intervention.soft(
            {
                (e["child"], e["parent"]): float(e["value"])
                for e in obj.get("coefficients", [])
            }
        )
    raise ValueError(f"unknown intervention kind {kind!r}")
