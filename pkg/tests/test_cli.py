"""Exit codes, report shape, and byte determinism of the command line."""

import json

import numpy as np
import pytest

import ncmlab.cli as cli
from ncmlab.acceptance import Check
from ncmlab.dcrpuzz import function_scheme, random_function_table, save_scheme
from ncmlab.qsim import bell_circuit, circuit_to_json


@pytest.fixture()
def bell_file(tmp_path):
    path = tmp_path / "bell.json"
    path.write_text(json.dumps(circuit_to_json(bell_circuit(0, 1))))
    return str(path)


@pytest.fixture()
def instance_file(tmp_path):
    circ = tmp_path / "bell_m1.json"
    circ.write_text(json.dumps(circuit_to_json(bell_circuit(1, 1))))
    inst = tmp_path / "instance.json"
    inst.write_text(json.dumps({"circuit": "bell_m1.json", "x": "01"}))
    return str(inst)


@pytest.fixture()
def scheme_file(tmp_path):
    table = random_function_table(np.random.default_rng(5), 3, 2)
    path = tmp_path / "scheme.json"
    save_scheme(function_scheme(table, 3, 2), str(path))
    return str(path)


def run(args, out=None):
    argv = list(args) + (["--out", out] if out else [])
    return cli.main(argv)


def test_run_oracle_exact_reports_the_correlated_uniform(bell_file, tmp_path):
    out = tmp_path / "report.json"
    assert run(["run-oracle", "--circuit", bell_file], str(out)) == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["command"] == "run-oracle"
    probs = report["payload"]["law"]["probs"]
    assert sorted(probs) == ["0000", "0011", "1100", "1111"]
    for p in probs.values():
        assert abs(p - 0.25) <= 1e-9
    names = [c["name"] for c in report["checks"]]
    assert "oracle/branch-mass-deficit" in names


def test_same_config_gives_identical_bytes(bell_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["run-oracle", "--circuit", bell_file, "--mode", "sample",
            "--shots", "2000", "--seed", "42"]
    assert run(argv, str(a)) == 0
    assert run(argv, str(b)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sample_mode_requires_a_seed(bell_file, capsys):
    assert run(["run-oracle", "--circuit", bell_file,
                "--mode", "sample"]) == 3
    assert "--seed" in capsys.readouterr().err


def test_malformed_circuit_leaves_no_report(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("not json at all")
    out = tmp_path / "never.json"
    assert run(["run-oracle", "--circuit", str(bad)], str(out)) == 3
    assert not out.exists()
    shallow = tmp_path / "shallow.json"
    shallow.write_text(json.dumps({"qubits": 2}))
    assert run(["run-oracle", "--circuit", str(shallow)], str(out)) == 3
    assert not out.exists()


def test_missing_file_is_an_input_error(tmp_path):
    assert run(["run-oracle", "--circuit",
                str(tmp_path / "ghost.json")]) == 3


def test_cap_exceeded_exit_code(tmp_path):
    from ncmlab.qsim import Circuit, Gate, Step
    big = Circuit(qubits=8, steps=tuple(
        Step(gates=(Gate("x", (0,)),), measure=0) for _ in range(3)))
    path = tmp_path / "big.json"
    path.write_text(json.dumps(circuit_to_json(big)))
    assert run(["run-oracle", "--circuit", str(path)]) == 4


def test_branch_guard_env_override(instance_file, tmp_path, monkeypatch):
    inst = json.loads(open(instance_file).read())
    monkeypatch.setenv("NCMO_MAX_BRANCHES", "1")
    assert run(["check-hybrid", "--instance", instance_file]) == 4
    monkeypatch.delenv("NCMO_MAX_BRANCHES")
    assert run(["check-hybrid", "--instance", instance_file]) == 0
    assert inst["x"] == "01"


def test_check_hybrid_report_lists_the_gap_ladder(instance_file, tmp_path):
    out = tmp_path / "hybrid.json"
    code = run(["check-hybrid", "--instance", instance_file,
                "--adversary", "oblivious"], str(out))
    assert code == 0
    report = json.loads(out.read_text())
    gaps = report["payload"]["per_step_sds"]
    assert gaps == pytest.approx([0.5, 0.75], abs=1e-9)
    assert report["payload"]["endpoint_sd"] == pytest.approx(0.875, abs=1e-9)
    assert report["payload"]["telescoped"] == pytest.approx(1.25, abs=1e-9)


def test_check_hybrid_rejects_unknown_adversaries(instance_file, capsys):
    assert run(["check-hybrid", "--instance", instance_file,
                "--adversary", "psychic"]) == 3


def test_reduction_mac_report(tmp_path):
    out = tmp_path / "mac.json"
    code = run(["run-reduction", "--primitive", "mac", "--params", "n=2,lm=2",
                "--trials", "400", "--seed", "3"], str(out))
    assert code == 0
    report = json.loads(out.read_text())
    assert report["payload"]["exact_win"] == pytest.approx(0.75, abs=1e-12)
    assert report["payload"]["successes"] <= 400


def test_reduction_mac_rejects_variants_and_bad_params(tmp_path):
    assert run(["run-reduction", "--primitive", "mac", "--variant",
                "literal", "--seed", "1"]) == 3
    assert run(["run-reduction", "--primitive", "mac", "--params",
                "bogus=1", "--seed", "1"]) == 3
    assert run(["run-reduction", "--primitive", "commitment", "--params",
                "table=banana", "--seed", "1"]) == 3
    assert run(["run-reduction", "--primitive", "mac"]) == 3  # no seed


def test_reduction_commitment_variants(tmp_path):
    out = tmp_path / "com.json"
    code = run(["run-reduction", "--primitive", "commitment", "--variant",
                "literal", "--trials", "300", "--seed", "9"], str(out))
    assert code == 0
    report = json.loads(out.read_text())
    names = [c["name"] for c in report["checks"]]
    assert "commitment/literal-form-win-is-exactly-zero" in names
    assert report["payload"]["exact_win"] == 0.0
    code = run(["run-reduction", "--primitive", "commitment", "--params",
                "n=2,c=1,table=random", "--trials", "300", "--seed", "9"],
               str(out))
    assert code == 0
    report = json.loads(out.read_text())
    names = [c["name"] for c in report["checks"]]
    assert "commitment/exact-win-matches-parity-product" in names


def test_run_dcr_exact_and_sample(scheme_file, tmp_path):
    out = tmp_path / "dcr.json"
    assert run(["run-dcr", "--scheme", scheme_file], str(out)) == 0
    report = json.loads(out.read_text())
    assert report["payload"]["oracle_route_available"] is True
    row = report["payload"]["per_pp"][0]
    assert row["oracle_gap"] <= 1e-9
    assert run(["run-dcr", "--scheme", scheme_file, "--mode", "sample",
                "--shots", "1500", "--seed", "2"], str(out)) == 0
    assert run(["run-dcr", "--scheme", scheme_file, "--mode", "sample"]) == 3
    assert run(["run-dcr", "--scheme", scheme_file, "--pp", "1"]) == 3


def test_suite_subcommand(tmp_path, capsys):
    out = tmp_path / "suite.json"
    assert run(["suite", "adaptive-replacement"], str(out)) == 0
    report = json.loads(out.read_text())
    assert report["config"]["suite"] == "adaptive-replacement"
    assert report["passed"] is True
    assert run(["suite", "no-such-suite"]) == 3


def test_failing_checks_exit_two(monkeypatch, tmp_path):
    broken = [Check(name="forced", value=1.0, tolerance=0.0, passed=False)]
    monkeypatch.setattr(cli, "run_suite", lambda name, seed: broken)
    out = tmp_path / "fail.json"
    assert run(["suite", "all"], str(out)) == 2
    report = json.loads(out.read_text())
    assert report["passed"] is False


def test_help_and_missing_subcommand(capsys):
    assert cli.main([]) == 3
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
