"""Network sheaves: validity, projections, energy, sections, and section search."""

import dataclasses

import numpy as np
import pytest

from cknet import (
    GaussianMixture,
    Intervention,
    LinearSCM,
    apply_intervention,
    edge_disagreement,
    energy,
    is_global_section,
    observational_cochain,
    project_cochain,
    search_section,
    validate_sheaf,
)
from cknet.sheaf import Cochain0, Network


class TestNetwork:
    def test_incidences_cover_both_endpoints(self, chain_abc):
        sheaf, _ = chain_abc
        pairs = set(sheaf.network.incidences())
        assert pairs == {("A", "X"), ("B", "X"), ("B", "Y"), ("C", "Y")}

    def test_incident_edges(self, chain_abc):
        sheaf, _ = chain_abc
        assert set(sheaf.network.incident_edges("B")) == {"X", "Y"}

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(ValueError):
            Network(frozenset({"A"}), {"e": ("A", "Z")})


class TestValidation:
    def test_shipped_fixtures_valid(self, chain_abc, search_pair, cycle4):
        for sheaf, _ in (chain_abc, search_pair, cycle4):
            report = validate_sheaf(sheaf)
            assert report.ok, [c.to_dict() for c in report.failures()]

    def test_broken_extension_detected(self, chain_abc):
        sheaf, _ = chain_abc
        ext = sheaf.extensions[("A", "X")]
        bad = dataclasses.replace(
            sheaf,
            extensions={
                **sheaf.extensions,
                ("A", "X"): dataclasses.replace(ext, matrix=ext.matrix * 0.5),
            },
        )
        report = validate_sheaf(bad)
        assert not report.ok
        assert any(c.check == "right_inverse" for c in report.failures())

    def test_mismatched_node_stalk_detected(self, chain_abc):
        sheaf, _ = chain_abc
        a = sheaf.node_stalks["A"]
        bumped = LinearSCM(
            a.variables,
            a.coeffs,
            a.noise_mean,
            a.noise_var + np.array([0.1, 0.0, 0.0]),
            a.support,
        )
        report = validate_sheaf(sheaf.with_node_stalks({"A": bumped}))
        assert not report.ok


class TestSections:
    def test_fixture_observational_cochain_is_section(self, chain_abc):
        sheaf, _ = chain_abc
        c0 = observational_cochain(sheaf)
        ok, residuals = is_global_section(sheaf, c0, tol=1e-10)
        assert ok
        assert set(residuals) == {"X", "Y"}
        assert energy(sheaf, c0) == pytest.approx(0.0, abs=1e-12)

    def test_projection_gives_two_sides_per_edge(self, chain_abc):
        sheaf, _ = chain_abc
        sides = project_cochain(sheaf, observational_cochain(sheaf))
        assert set(sides) == {("A", "X"), ("B", "X"), ("B", "Y"), ("C", "Y")}
        for (_, eid), chi in sides.items():
            assert chi.dim == sheaf.edge_stalks[eid].dim

    def test_perturbed_variance_breaks_section(self, chain_abc):
        sheaf, _ = chain_abc
        a = sheaf.node_stalks["A"]
        bumped = LinearSCM(
            a.variables,
            a.coeffs,
            a.noise_mean,
            a.noise_var + np.array([0.1, 0.0, 0.0]),
            a.support,
        )
        broken = sheaf.with_node_stalks({"A": bumped})
        c0 = observational_cochain(broken)
        ok, residuals = is_global_section(broken, c0, tol=1e-10)
        assert not ok
        assert residuals["X"] > 0.01
        assert residuals["Y"] == pytest.approx(0.0, abs=1e-10)

    def test_energy_is_sum_of_squared_disagreements(self, chain_abc):
        sheaf, _ = chain_abc
        soft = apply_intervention(
            sheaf.node_stalks["B"], Intervention.soft({("B2", "B1"): 1.0})
        )
        kicked = sheaf.with_node_stalks({"B": soft})
        c0 = observational_cochain(kicked)
        total = sum(edge_disagreement(kicked, c0, e) ** 2 for e in ("X", "Y"))
        assert energy(kicked, c0) == pytest.approx(total, abs=1e-12)
        assert energy(kicked, c0) > 0.1

    def test_cochain_dimension_check(self, chain_abc):
        sheaf, _ = chain_abc
        c0 = observational_cochain(sheaf)
        bad = Cochain0({**c0.values, "A": GaussianMixture.single([0.0], [[1.0]])})
        with pytest.raises(ValueError, match="dimension"):
            project_cochain(sheaf, bad)


class TestSearch:
    def test_recovers_known_zero_energy_assignment(self, search_pair):
        sheaf, scenarios = search_pair
        kicked = sheaf.with_node_stalks(
            {
                "E": apply_intervention(
                    sheaf.node_stalks["E"], Intervention.soft({("E3", "E2"): 1.5})
                )
            }
        )
        start = energy(kicked, observational_cochain(kicked))
        assert start > 1.0
        free = scenarios["greedy"].free
        result = search_section(kicked, free, seed=0, budget=10_000)
        assert result.energy <= 1e-8
        assert result.evaluations <= 10_000
        ok, _ = is_global_section(kicked.with_node_stalks(
            {
                "E": apply_intervention(
                    kicked.node_stalks["E"],
                    Intervention.soft(result.coefficients["E"]),
                )
            }
        ), result.cochain, tol=1e-6)
        assert ok

    def test_deterministic_per_seed(self, search_pair):
        sheaf, scenarios = search_pair
        free = scenarios["greedy"].free
        r1 = search_section(sheaf, free, seed=7, budget=500)
        r2 = search_section(sheaf, free, seed=7, budget=500)
        assert r1.energy == r2.energy
        assert r1.coefficients == r2.coefficients
        assert r1.evaluations == r2.evaluations

    def test_never_worse_than_start(self, search_pair):
        sheaf, scenarios = search_pair
        kicked = sheaf.with_node_stalks(
            {
                "E": apply_intervention(
                    sheaf.node_stalks["E"], Intervention.soft({("E3", "E2"): 1.5})
                )
            }
        )
        start = energy(kicked, observational_cochain(kicked))
        for seed in range(5):
            result = search_section(kicked, scenarios["greedy"].free, seed=seed, budget=60)
            assert result.energy <= start + 1e-12

    def test_empty_parametrization_returns_start(self, search_pair):
        sheaf, _ = search_pair
        result = search_section(sheaf, {}, seed=0, budget=100)
        assert result.energy == pytest.approx(
            energy(sheaf, observational_cochain(sheaf)), abs=1e-12
        )

    def test_unknown_node_rejected(self, search_pair):
        sheaf, _ = search_pair
        with pytest.raises(ValueError, match="unknown node"):
            search_section(sheaf, {"nope": [("a", "b")]}, seed=0)

    def test_off_support_coefficient_rejected(self, search_pair):
        sheaf, _ = search_pair
        with pytest.raises(ValueError, match="support"):
            search_section(sheaf, {"E": [("E2", "E3")]}, seed=0)

    def test_trajectory_rows_are_budget_consistent(self, search_pair):
        sheaf, scenarios = search_pair
        result = search_section(sheaf, scenarios["greedy"].free, seed=1, budget=200)
        assert result.evaluations <= 200
        for row in result.trajectory:
            assert row[0] <= result.evaluations
