"""CLI behavior: exit codes, emitted files, and input parsing."""

import json

import numpy as np
import pytest

from shallowprep import cli

pytestmark = pytest.mark.filterwarnings("ignore:ratio bound skipped:UserWarning")


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_read_eta_parses_comments_gaps_and_order(tmp_path):
    path = write(
        tmp_path / "eta.txt",
        "# weight amplitude table\n"
        "\n"
        "2 0.0 0.8  # imaginary part in the third column\n"
        "0 0.6 0.0\n",
    )
    eta = cli.read_eta(path)
    assert np.allclose(eta, [0.6, 0.0, 0.8j])


def test_read_eta_errors(tmp_path):
    with pytest.raises(ValueError, match="expected"):
        cli.read_eta(write(tmp_path / "a.txt", "1 0.5\n"))
    with pytest.raises(ValueError, match="negative"):
        cli.read_eta(write(tmp_path / "b.txt", "-1 0.5 0\n"))
    with pytest.raises(ValueError, match="duplicate"):
        cli.read_eta(write(tmp_path / "c.txt", "1 0.5 0\n1 0.5 0\n"))
    with pytest.raises(ValueError, match="no amplitude"):
        cli.read_eta(write(tmp_path / "d.txt", "# nothing here\n"))


def test_parse_grid():
    assert cli._parse_grid("m=1..16,k=1..4") == {"m_lo": 1, "m_hi": 16, "k_max": 4}
    assert cli._parse_grid("m=3") == {"m_lo": 3, "m_hi": 3, "k_max": 6}
    with pytest.raises(ValueError, match="bad grid"):
        cli._parse_grid("q=1..2")
    with pytest.raises(ValueError, match="starts at 1"):
        cli._parse_grid("k=2..4")


def test_synth_dicke_writes_files_and_passes(tmp_path, capsys):
    rc = cli.main(
        ["synth", "dicke", "--n", "4", "--k", "1", "--out", str(tmp_path)]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "self-check fidelity" in out
    circuit_file = tmp_path / "dicke_n4_k1.circuit"
    report_file = tmp_path / "dicke_n4_k1.report.json"
    assert circuit_file.exists() and report_file.exists()
    payload = json.loads(report_file.read_text())
    assert payload["fidelity"] > 1 - 1e-9
    assert payload["qubits"] >= 4
    assert set(payload["cost"]) == {
        "depth", "ancilla_count", "max_fanout_width", "grover_rounds",
    }


def test_verify_dicke_pass_and_fail(tmp_path, capsys):
    cli.main(["synth", "dicke", "--n", "4", "--k", "1", "--out", str(tmp_path)])
    circuit = str(tmp_path / "dicke_n4_k1.circuit")
    capsys.readouterr()
    rc = cli.main(
        ["verify", "--circuit", circuit, "--target", "dicke", "--n", "4", "--k", "1"]
    )
    assert rc == 0
    assert "PASS" in capsys.readouterr().out
    rc = cli.main(
        ["verify", "--circuit", circuit, "--target", "dicke", "--n", "4", "--k", "2"]
    )
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out


def test_verify_requires_k_for_dicke(tmp_path, capsys):
    cli.main(["synth", "dicke", "--n", "4", "--k", "1", "--out", str(tmp_path)])
    circuit = str(tmp_path / "dicke_n4_k1.circuit")
    rc = cli.main(["verify", "--circuit", circuit, "--target", "dicke", "--n", "4"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_synth_and_verify_symmetric(tmp_path, capsys):
    eta = write(tmp_path / "eta.txt", "0 0.6 0\n1 0 0.8\n")
    rc = cli.main(
        ["synth", "symmetric", "--n", "3", "--eta", eta, "--out", str(tmp_path)]
    )
    assert rc == 0
    circuit = str(tmp_path / "symmetric_n3.circuit")
    rc = cli.main(
        [
            "verify", "--circuit", circuit, "--target", "symmetric",
            "--n", "3", "--eta", eta,
        ]
    )
    assert rc == 0
    assert "PASS" in capsys.readouterr().out


def test_report_prints_costs(tmp_path, capsys):
    cli.main(["synth", "dicke", "--n", "4", "--k", "1", "--out", str(tmp_path)])
    capsys.readouterr()
    rc = cli.main(["report", "--circuit", str(tmp_path / "dicke_n4_k1.circuit")])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["qubits"] >= 4
    assert any(reg["name"] == "data" for reg in payload["registers"])
    assert payload["depth"] >= 1


def test_claims_small_grid(tmp_path, capsys):
    rc = cli.main(["claims", "--grid", "m=1..4,k=1..3", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    rows = json.loads((tmp_path / "claims.json").read_text())
    assert all(row["passed"] for row in rows)


def test_claims_fault_injection_fails(capsys):
    rc = cli.main(
        ["claims", "--grid", "m=1..4,k=1..3", "--fault", "lambda-off-by-one"]
    )
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "normalizer-bounds" in out


def test_claims_empty_grid_is_config_error(capsys):
    rc = cli.main(["claims", "--grid", "m=5..4"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_accept_only_subset(tmp_path, capsys):
    rc = cli.main(
        ["accept", "--only", "depth-witness", "--out", str(tmp_path)]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "depth-witness" in out
    text = (tmp_path / "acceptance.json").read_text()
    rows = json.loads(text)
    assert rows and all(row["verdict"] for row in rows)
    assert all("seconds" not in row for row in rows)


def test_accept_unknown_criterion(capsys):
    rc = cli.main(["accept", "--only", "no-such-criterion"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_primitive_subcommand(capsys):
    rc = cli.main(["primitive", "--name", "exact_grover"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_primitive_rejects_unknown_name():
    with pytest.raises(SystemExit):
        cli.main(["primitive", "--name", "bogus"])


def test_missing_circuit_file_is_config_error(capsys):
    rc = cli.main(
        ["verify", "--circuit", "/nonexistent.circuit", "--target", "dicke",
         "--n", "4", "--k", "1"]
    )
    assert rc == 2
    assert "error:" in capsys.readouterr().err
