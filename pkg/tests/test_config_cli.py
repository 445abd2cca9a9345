"""Config loading errors, serialization round trips, and CLI behaviour."""

import json

import numpy as np
import pytest

from cknet.cli import main
from cknet.config import ConfigError, load_config, parse_config, sheaf_to_dict


def run_cli(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfigParsing:
    def test_round_trip(self, chain_abc):
        sheaf, _ = chain_abc
        again, _ = parse_config(sheaf_to_dict(sheaf))
        assert again.network.nodes == sheaf.network.nodes
        assert again.network.edges == sheaf.network.edges
        for node in sheaf.node_stalks:
            np.testing.assert_array_equal(
                again.node_stalks[node].coeffs, sheaf.node_stalks[node].coeffs
            )

    def test_unsupported_version(self):
        with pytest.raises(ConfigError, match="version"):
            parse_config({"version": "2", "nodes": [], "edges": []})

    def test_missing_restriction_located(self, chain_abc_path):
        doc = json.loads(chain_abc_path.read_text())
        del doc["edges"][0]["restrictions"]["A"]
        with pytest.raises(ConfigError) as exc:
            parse_config(doc)
        assert "edges[0]" in str(exc.value)

    def test_wrong_matrix_shape_located(self, chain_abc_path):
        doc = json.loads(chain_abc_path.read_text())
        doc["edges"][0]["restrictions"]["A"] = [[1.0, 1.0]]
        with pytest.raises(ConfigError):
            parse_config(doc)

    def test_invalid_sheaf_rejected_unless_allowed(self, chain_abc_path):
        doc = json.loads(chain_abc_path.read_text())
        doc["nodes"][0]["scm"]["noise"]["var"][0] = 1.1
        with pytest.raises(ConfigError, match="validation"):
            parse_config(doc)
        sheaf, _ = parse_config(doc, allow_invalid=True)
        assert sheaf.node_stalks["A"].noise_var[0] == 1.1

    def test_bad_json_file(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="parse error"):
            load_config(str(p))


class TestCLI:
    def test_validate_ok(self, capsys, chain_abc_path):
        code, out, _ = run_cli(capsys, "validate", "--config", str(chain_abc_path))
        assert code == 0
        assert json.loads(out)["ok"] is True

    def test_validate_broken_config_exits_1(self, capsys, tmp_path, chain_abc_path):
        doc = json.loads(chain_abc_path.read_text())
        doc["nodes"][0]["scm"]["noise"]["var"][0] = 1.1
        p = tmp_path / "broken.json"
        p.write_text(json.dumps(doc))
        code, out, _ = run_cli(capsys, "validate", "--config", str(p))
        assert code == 1
        assert json.loads(out)["ok"] is False

    def test_usage_error_exits_2(self, capsys):
        assert run_cli(capsys, "validate")[0] == 2
        assert run_cli(capsys, "no-such-command")[0] == 2

    def test_missing_file_exits_1(self, capsys):
        code, _, err = run_cli(capsys, "observe", "--config", "/nope.json")
        assert code == 1
        assert json.loads(err)["ok"] is False

    def test_observe_lists_every_node(self, capsys, chain_abc_path):
        code, out, _ = run_cli(capsys, "observe", "--config", str(chain_abc_path))
        assert code == 0
        assert set(json.loads(out)["measures"]) == {"A", "B", "C"}

    def test_intervene_reports_measure_and_map(self, capsys, chain_abc_path):
        code, out, _ = run_cli(
            capsys,
            "intervene",
            "--config",
            str(chain_abc_path),
            "--node",
            "A",
            "--intervention",
            '{"kind": "hard", "targets": {"A2": 5.0}}',
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["measure"]["components"][0]["mean"][1] == 5.0
        assert len(doc["map"]["matrix"]) == 3

    def test_intervene_unknown_node_exits_1(self, capsys, chain_abc_path):
        code, _, err = run_cli(
            capsys,
            "intervene",
            "--config",
            str(chain_abc_path),
            "--node",
            "Z",
            "--intervention",
            '{"kind": "hard", "targets": {"A2": 5.0}}',
        )
        assert code == 1
        assert "unknown node" in json.loads(err)["error"]

    def test_ck_returns_parallel_lists(self, capsys, chain_abc_path):
        code, out, _ = run_cli(
            capsys,
            "ck",
            "--config",
            str(chain_abc_path),
            "--node",
            "A",
            "--interventions",
            '[{"kind": "hard", "targets": {"A1": 1.0}}]',
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["measures"]) == len(doc["morphisms"]) == 2

    def test_rck_two_hop_closed_form(self, capsys, chain_abc_path):
        code, out, _ = run_cli(
            capsys,
            "rck",
            "--config",
            str(chain_abc_path),
            "--source",
            "A",
            "--target",
            "C",
            "--edges",
            "X,Y",
        )
        assert code == 0
        cov = json.loads(out)["measure"]["components"][0]["cov"]
        # projected variance 10 spread over the two-entry extension blocks:
        # 10 * (1/3)^2 restricted back, then (1/2)^2 per target entry -> 10/36
        want = 10.0 / 36.0
        for i in range(2):
            for j in range(2):
                assert cov[i][j] == pytest.approx(want, abs=1e-12)
        assert cov[2][2] == 0.0

    def test_section_verdict(self, capsys, chain_abc_path):
        code, out, _ = run_cli(capsys, "section", "--config", str(chain_abc_path))
        assert code == 0
        doc = json.loads(out)
        assert doc["section"] is True
        assert set(doc["residuals"]) == {"X", "Y"}

    def test_section_search_writes_trajectory(self, capsys, tmp_path, search_pair_path):
        traj = tmp_path / "traj.csv"
        code, out, _ = run_cli(
            capsys,
            "section",
            "--config",
            str(search_pair_path),
            "--search",
            "--scenario",
            "greedy",
            "--budget",
            "2000",
            "--trajectory",
            str(traj),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["energy"] <= 1e-8
        lines = traj.read_text().splitlines()
        assert lines[0] == "eval,node,edge,disagreement,energy"
        assert len(lines) > 1

    def test_simulate_deterministic_output(self, capsys, tmp_path, chain_abc_path):
        outputs = []
        for run in range(2):
            csv_path = tmp_path / f"run{run}.csv"
            summary_path = tmp_path / f"run{run}.json"
            code, _, _ = run_cli(
                capsys,
                "simulate",
                "--config",
                str(chain_abc_path),
                "--scenario",
                "kick",
                "--out",
                str(csv_path),
                "--summary",
                str(summary_path),
            )
            assert code == 0
            outputs.append((csv_path.read_bytes(), summary_path.read_bytes()))
        assert outputs[0] == outputs[1]
        text = outputs[0][0].decode()
        assert text.splitlines()[0] == "round,node,edge,disagreement,energy"
        summary = json.loads(outputs[0][1])
        assert summary["final_energy"] == 0.0
        assert summary["initial_energy"] > 0.5

    def test_simulate_greedy_never_increases_energy(self, capsys, tmp_path, chain_abc_path):
        csv_path = tmp_path / "greedy.csv"
        code, _, _ = run_cli(
            capsys,
            "simulate",
            "--config",
            str(chain_abc_path),
            "--scenario",
            "greedy",
            "--out",
            str(csv_path),
        )
        assert code == 0
        rows = csv_path.read_text().splitlines()[1:]
        energies = [float(r.split(",")[-1]) for r in rows]
        assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))

    def test_unknown_scenario_exits_1(self, capsys, chain_abc_path):
        code, _, err = run_cli(
            capsys, "simulate", "--config", str(chain_abc_path), "--scenario", "nope"
        )
        assert code == 1
        assert "scenario" in json.loads(err)["error"]

    def test_out_flag_writes_json_file(self, capsys, tmp_path, chain_abc_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run_cli(
            capsys, "validate", "--config", str(chain_abc_path), "--out", str(out_path)
        )
        assert code == 0
        assert out == ""
        assert json.loads(out_path.read_text())["ok"] is True
