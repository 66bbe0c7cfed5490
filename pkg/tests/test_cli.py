import json
from pathlib import Path

import pandas as pd
import pytest
from typer.testing import CliRunner

from cli.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, app, config_hash, load_config
from dual_unitary_sff.sff_monte_carlo import SFF_COLUMNS

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

runner = CliRunner()


def write_config(tmp_path, **values) -> Path:
    path = tmp_path / "run.json"
    path.write_text("// test configuration\n" + json.dumps(values))
    return path


@pytest.fixture
def small_run(tmp_path):
    return dict(
        gate_U={"kind": "random", "seed": 1, "j_range": [2.5, 2.9]},
        gate_W={"kind": "random", "seed": 2, "j_range": [2.5, 2.9]},
        disorder={"nu": 0.5},
        n_samples=4,
        ts=[1],
        Ls=[2],
        seed=5,
    )


def test_load_config_strips_comments(tmp_path):
    config = load_config(write_config(tmp_path, seed=3, ts=[1, 3]))
    assert config.seed == 3 and config.ts == [1, 3]
    assert load_config(None).n_samples == 2000
    for name in ("default.json", "time_reversal.json", "swap.json", "gate_check.json", "verify_quick.json"):
        load_config(CONFIGS / name)


def test_config_hash_is_canonical(tmp_path):
    a = load_config(write_config(tmp_path, seed=3, ts=[1]))
    b = load_config(write_config(tmp_path, ts=[1], seed=3))
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(a.model_copy(update={"seed": 4}))


def test_schema_command():
    result = runner.invoke(app, ["schema"])
    assert result.exit_code == EXIT_PASS
    assert "gate_U" in result.output


def test_gate_check_flags_identity():
    result = runner.invoke(app, ["gate-check", "--config", str(CONFIGS / "gate_check.json")])
    assert result.exit_code == EXIT_FAIL


def test_gate_check_passes_dual_unitary_gates(tmp_path):
    out = tmp_path / "gates.json"
    path = write_config(tmp_path, gate_U={"kind": "swap"}, gate_W={"kind": "random", "seed": 4})
    result = runner.invoke(app, ["gate-check", "--config", str(path), "--out", str(out)])
    assert result.exit_code == EXIT_PASS
    payload = json.loads(out.read_text())
    assert [g["name"] for g in payload["gates"]] == ["U", "W"]
    assert all(g["dual_unitary"] for g in payload["gates"])


@pytest.mark.parametrize(
    "text",
    ['{"seed": 1, "no_such_field": 2}', '{"seed": 1,', '{"n_samples": 1}', '{"gate_U": {"kind": "haar"}}'],
)
def test_bad_configs_exit_with_error(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    result = runner.invoke(app, ["gate-check", "--config", str(path)])
    assert result.exit_code == EXIT_ERROR


def test_missing_config_file(tmp_path):
    result = runner.invoke(app, ["sff", "--config", str(tmp_path / "absent.json")])
    assert result.exit_code == EXIT_ERROR


def test_sff_writes_reproducible_csv(tmp_path, small_run):
    path = write_config(tmp_path, **small_run)
    out = tmp_path / "sff.csv"
    result = runner.invoke(app, ["sff", "--config", str(path), "--out", str(out)])
    assert result.exit_code == EXIT_PASS, result.output
    df = pd.read_csv(out)
    assert list(df.columns) == SFF_COLUMNS
    assert df[["t", "L", "n", "n_samples", "seed"]].iloc[0].tolist() == [1, 2, 1, 4, 5]
    sidecar = json.loads(Path(f"{out}.json").read_text())
    assert sidecar["seed"] == 5 and len(sidecar["config_hash"]) == 64

    first = out.read_text()
    runner.invoke(app, ["sff", "--config", str(path), "--out", str(out)])
    assert out.read_text() == first

    reseeded = tmp_path / "reseeded.csv"
    runner.invoke(app, ["sff", "--config", str(path), "--out", str(reseeded), "--seed", "6"])
    assert pd.read_csv(reseeded)["seed"].iloc[0] == 6


def test_transfer_report(tmp_path, small_run):
    path = write_config(tmp_path, **{**small_run, "Ls": [2, 200]})
    out = tmp_path / "transfer.json"
    result = runner.invoke(app, ["transfer", "--config", str(path), "--out", str(out)])
    assert result.exit_code == EXIT_PASS, result.output
    payload = json.loads(out.read_text())
    (report,) = payload["reports"]
    assert report["unimodular_count"] == 1 and not report["ambiguous"]
    assert [p["L"] for p in report["trace_curve"]] == [2, 200]
    assert report["trace_curve"][-1]["re"] == pytest.approx(1.0, abs=1e-6)
    assert payload["non_convergent"] == []


def test_verify_command():
    result = runner.invoke(app, ["verify", "--criteria", "rmt-references", "--quick"])
    assert result.exit_code == EXIT_PASS
    result = runner.invoke(app, ["verify", "--criteria", "no-such-criterion"])
    assert result.exit_code == EXIT_ERROR


EYE2 = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
EYE3 = [[[1 if i == j else 0, 0] for j in range(3)] for i in range(3)]


@pytest.mark.parametrize(
    "gate",
    [
        {"kind": "params", "J": 0.5},
        {"kind": "params", "J": 0.5, "single_site": [EYE2, EYE2, EYE2]},
        {"kind": "params", "J": 0.5, "single_site": [EYE2, EYE2, EYE2, [[[1, 0], [0, 0]]]]},
        {"kind": "params", "J": 4.0, "single_site": [EYE2] * 4},
        {"kind": "params", "J": 0.5, "single_site": [EYE3] * 4},
        {"kind": "matrix"},
        {"kind": "matrix", "entries": EYE3},
    ],
)
def test_malformed_explicit_gates_exit_with_error(tmp_path, gate):
    path = write_config(tmp_path, gate_U=gate)
    result = runner.invoke(app, ["gate-check", "--config", str(path)])
    assert result.exit_code == EXIT_ERROR, result.output


def test_params_gate_passes_gate_check(tmp_path):
    path = write_config(tmp_path, gate_U={"kind": "params", "J": 0.5, "single_site": [EYE2] * 4})
    result = runner.invoke(app, ["gate-check", "--config", str(path)])
    assert result.exit_code == EXIT_PASS, result.output


def test_unknown_schema_version_is_rejected(tmp_path):
    result = runner.invoke(app, ["gate-check", "--config", str(write_config(tmp_path, schema_version="99.0"))])
    assert result.exit_code == EXIT_ERROR
    assert load_config(write_config(tmp_path, schema_version="1.0")).schema_version == "1.0"


def test_sff_refuses_runs_over_the_work_budget(tmp_path, small_run, settings_env):
    path = write_config(tmp_path, **small_run)
    out = tmp_path / "sff.csv"
    settings_env(work_budget=1)
    result = runner.invoke(app, ["sff", "--config", str(path), "--out", str(out)])
    assert result.exit_code == EXIT_ERROR
    assert "estimated work" in result.output
    assert not out.exists()


def test_sff_refuses_large_dense_chains(tmp_path, small_run, settings_env):
    settings_env(work_budget=1e12)
    path = write_config(tmp_path, **{**small_run, "Ls": [12], "trace_method": "dense"})
    result = runner.invoke(app, ["sff", "--config", str(path)])
    assert result.exit_code == EXIT_ERROR


@pytest.mark.parametrize("command", ["gate-check", "verify"])
def test_threads_option(tmp_path, command):
    args = [command, "--threads", "2"]
    if command == "gate-check":
        args += ["--config", str(write_config(tmp_path, gate_U={"kind": "swap"}, gate_W={"kind": "swap"}))]
    else:
        args += ["--criteria", "rmt-references", "--quick"]
    assert runner.invoke(app, args).exit_code == EXIT_PASS
    assert runner.invoke(app, [command, "--threads", "0"]).exit_code == EXIT_ERROR
