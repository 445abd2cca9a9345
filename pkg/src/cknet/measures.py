"""Value-semantic measure algebra on finite Gaussian mixtures.

Mixtures of (possibly degenerate) Gaussians are closed under affine
pushforward and convex combination, which is exactly what is needed to
represent observational and interventional measures of linear additive-noise
models, including the point masses produced by hard interventions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

SYM_TOL = 1e-12
PSD_TOL = 1e-10
MERGE_TOL = 1e-12


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    return v


def _as_matrix(x) -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class GaussianComponent:
    """A single Gaussian N(mean, cov); cov may be singular (point-mass coords)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _as_vector(self.mean)
        cov = _as_matrix(self.cov)
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        if np.max(np.abs(cov - cov.T), initial=0.0) > SYM_TOL:
            raise ValueError("covariance is not symmetric within 1e-12")
        eigs = np.linalg.eigvalsh(cov)
        if eigs.size and eigs.min() < -PSD_TOL:
            raise ValueError(
                f"covariance is not PSD: min eigenvalue {eigs.min():.3e}"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def sort_key(self) -> tuple:
        return tuple(self.mean) + tuple(self.cov.ravel())


@dataclass(frozen=True)
class GaussianMixture:
    """Finite convex combination of equal-dimension Gaussian components."""

    components: tuple[GaussianComponent, ...]
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        w = _as_vector(self.weights)
        if w.size != len(comps):
            raise ValueError("weights and components length mismatch")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > SYM_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError(f"components have mixed dimensions {sorted(dims)}")
        w.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @staticmethod
    def single(mean, cov) -> "GaussianMixture":
        return GaussianMixture((GaussianComponent(mean, cov),), np.array([1.0]))


@dataclass(frozen=True)
class AffineMap:
    """x -> matrix @ x + offset between Euclidean spaces."""

    matrix: np.ndarray
    offset: np.ndarray = field(default=None)

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        b = np.zeros(m.shape[0]) if self.offset is None else _as_vector(self.offset)
        if b.size != m.shape[0]:
            raise ValueError(
                f"offset length {b.size} does not match matrix rows {m.shape[0]}"
            )
        m.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", b)

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float) + self.offset

    @staticmethod
    def identity(n: int) -> "AffineMap":
        return AffineMap(np.eye(n), np.zeros(n))


def affine_compose(f: AffineMap, g: AffineMap) -> AffineMap:
    """The composite f o g (apply g first)."""
    if f.in_dim != g.out_dim:
        raise ValueError(
            f"cannot compose: f expects dim {f.in_dim}, g produces {g.out_dim}"
        )
    return AffineMap(f.matrix @ g.matrix, f.matrix @ g.offset + f.offset)


def pushforward(map: AffineMap, mu: GaussianMixture) -> GaussianMixture:
    """Image measure of `mu` under the affine map; weights are unchanged."""
    if map.in_dim != mu.dim:
        raise ValueError(
            f"map input dimension {map.in_dim} != mixture dimension {mu.dim}"
        )
    A, b = map.matrix, map.offset
    comps = []
    for c in mu.components:
        cov = A @ c.cov @ A.T
        cov = 0.5 * (cov + cov.T)
        comps.append(GaussianComponent(A @ c.mean + b, cov))
    return GaussianMixture(tuple(comps), mu.weights.copy())


def canonical_reduce(mu: GaussianMixture) -> GaussianMixture:
    """Drop zero-weight components, merge near-identical ones, sort lexicographically."""
    kept: list[GaussianComponent] = []
    weights: list[float] = []
    for c, w in zip(mu.components, mu.weights):
        if w == 0.0:
            continue
        for i, k in enumerate(kept):
            if (
                np.max(np.abs(c.mean - k.mean), initial=0.0) < MERGE_TOL
                and np.max(np.abs(c.cov - k.cov), initial=0.0) < MERGE_TOL
            ):
                weights[i] += w
                break
        else:
            kept.append(c)
            weights.append(float(w))
    if not kept:
        raise ValueError("mixture reduced to zero mass")
    order = sorted(range(len(kept)), key=lambda i: kept[i].sort_key())
    return GaussianMixture(
        tuple(kept[i] for i in order), np.array([weights[i] for i in order])
    )


def convex_combine(
    lam: float, chi1: GaussianMixture, chi2: GaussianMixture
) -> GaussianMixture:
    """cc_lambda: the weighted mixture lam*chi1 + (1-lam)*chi2, canonically reduced."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0,1], got {lam!r}")
    if chi1.dim != chi2.dim:
        raise ValueError(f"dimension mismatch: {chi1.dim} vs {chi2.dim}")
    comps = chi1.components + chi2.components
    weights = np.concatenate([lam * chi1.weights, (1.0 - lam) * chi2.weights])
    if weights.sum() == 0.0:  # lam==0 with chi1 weightless never happens; guard anyway
        raise ValueError("degenerate combination")
    return canonical_reduce(GaussianMixture(comps, weights))


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def w2_gaussian(g1: GaussianComponent, g2: GaussianComponent) -> float:
    """Closed-form 2-Wasserstein distance between Gaussians (degenerate allowed)."""
    if g1.dim != g2.dim:
        raise ValueError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    s2h = _psd_sqrt(g2.cov)
    cross = _psd_sqrt(s2h @ g1.cov @ s2h)
    d2 = (
        float(np.sum((g1.mean - g2.mean) ** 2))
        + float(np.trace(g1.cov) + np.trace(g2.cov))
        - 2.0 * float(np.trace(cross))
    )
    return float(np.sqrt(max(d2, 0.0)))


def mixture_distance(mu1: GaussianMixture, mu2: GaussianMixture) -> float:
    """Exact discrete optimal transport with squared Gaussian-W2 ground cost.

    Component counts are small (desk scale), so the transport polytope LP is
    solved exactly; returns the square root of the optimal cost.
    """
    if mu1.dim != mu2.dim:
        raise ValueError(f"dimension mismatch: {mu1.dim} vs {mu2.dim}")
    a = canonical_reduce(mu1)
    b = canonical_reduce(mu2)
    p, q = len(a.components), len(b.components)
    cost = np.array(
        [[w2_gaussian(ci, cj) ** 2 for cj in b.components] for ci in a.components]
    )
    if p == 1 and q == 1:
        return float(np.sqrt(cost[0, 0]))
    # marginal constraints over the transport polytope
    A_eq = np.zeros((p + q, p * q))
    for i in range(p):
        A_eq[i, i * q : (i + 1) * q] = 1.0
    for j in range(q):
        A_eq[p + j, j::q] = 1.0
    b_eq = np.concatenate([a.weights, b.weights])
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(np.sqrt(max(res.fun, 0.0)))


def measures_equal(
    mu1: GaussianMixture, mu2: GaussianMixture, tol: float = 1e-9
) -> bool:
    """Equality of mixtures after canonical reduction, entrywise within tol."""
    if mu1.dim != mu2.dim:
        raise ValueError(f"dimension mismatch: {mu1.dim} vs {mu2.dim}")
    a = canonical_reduce(mu1)
    b = canonical_reduce(mu2)
    if len(a.components) != len(b.components):
        return False
    for ca, cb, wa, wb in zip(a.components, b.components, a.weights, b.weights):
        if abs(wa - wb) > tol:
            return False
        if np.max(np.abs(ca.mean - cb.mean), initial=0.0) > tol:
            return False
        if np.max(np.abs(ca.cov - cb.cov), initial=0.0) > tol:
            return False
    return True


def sample(mu: GaussianMixture, count: int, seed: int) -> np.ndarray:
    """Deterministic count x n draw; component choice by weight, eig-based sqrt."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    weights = mu.weights / mu.weights.sum()
    idx = rng.choice(len(mu.components), size=count, p=weights)
    z = rng.standard_normal((count, mu.dim))
    out = np.empty((count, mu.dim))
    roots = [_psd_sqrt(c.cov) for c in mu.components]
    for k, c in enumerate(mu.components):
        mask = idx == k
        out[mask] = c.mean + z[mask] @ roots[k].T
    return out


def mixture_to_dict(mu: GaussianMixture) -> dict:
    return {
        "weights": [float(w) for w in mu.weights],
        "components": [
            {"mean": c.mean.tolist(), "cov": c.cov.tolist()} for c in mu.components
        ],
    }


def mixture_from_dict(obj: dict) -> GaussianMixture:
    comps = tuple(
        GaussianComponent(np.array(c["mean"], dtype=float), np.array(c["cov"], dtype=float))
        for c in obj["components"]
    )
    return GaussianMixture(comps, np.array(obj["weights"], dtype=float))
