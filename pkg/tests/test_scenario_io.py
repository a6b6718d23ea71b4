import json

import numpy as np
import pytest

from mcretarget.cli import EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, main
from mcretarget.model import load_model_file
from mcretarget.runtime import CommandMessage
from mcretarget.scenario import (
    RunSpec,
    Scenario,
    ScenarioError,
    load_scenario,
    read_log,
    read_panels_csv,
    run,
    verify_log,
    write_scenario,
)


def tiny_scenario(tmp_path, duration=120, jogs=40):
    scenario = Scenario(duration_ticks=duration)
    seq = 0
    for k in range(jogs):
        seq += 1
        scenario.commands.append(
            (10 + k, CommandMessage(kind="jog_effector", seq=seq, effector="hand_l",
                                    twist=np.array([0, 0, 0, 2e-4, 0, 0])))
        )
    path = tmp_path / "tiny.jsonl"
    write_scenario(path, scenario)
    return path


def test_scenario_round_trip(tmp_path):
    path = tiny_scenario(tmp_path)
    loaded = load_scenario(path)
    assert loaded.duration_ticks == 120
    assert len(loaded.commands) == 40
    tick, msg = loaded.commands[0]
    assert tick == 10 and msg.kind == "jog_effector" and msg.effector == "hand_l"
    assert np.allclose(msg.twist, [0, 0, 0, 2e-4, 0, 0])


def test_scenario_parse_errors(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(bad)
    bad.write_text('{"tick": 3}\n')
    with pytest.raises(ScenarioError, match="needs 'tick' and 'command'"):
        load_scenario(bad)


def test_run_produces_artifacts_and_passes_verify(tmp_path, assets_dir):
    scenario_path = tiny_scenario(tmp_path)
    spec = RunSpec(
        model=str(assets_dir / "biped.urdf"),
        scenario=str(scenario_path),
        out_dir=str(tmp_path / "out"),
    )
    session, records, summary = run(spec)
    assert (tmp_path / "out" / "log.jsonl").exists()
    assert (tmp_path / "out" / "summary.json").exists()
    assert (tmp_path / "out" / "panels.csv").exists()
    assert summary.ticks == 120
    assert summary.max_equilibrium_residual < 0.01
    model = load_model_file(assets_dir / "biped.urdf")
    result = verify_log(model, read_log(tmp_path / "out" / "log.jsonl"))
    assert result["ok"] and result["checked"] == 120


def test_empty_scenario_is_a_fixed_point(tmp_path, assets_dir):
    path = tmp_path / "empty.jsonl"
    write_scenario(path, Scenario(duration_ticks=60))
    spec = RunSpec(model=str(assets_dir / "biped.urdf"), scenario=str(path), out_dir=str(tmp_path / "out"))
    _, _, summary = run(spec)
    assert summary.saturation_histogram == {}
    assert summary.max_equilibrium_residual < 1e-6
    for record in read_log(tmp_path / "out" / "log.jsonl"):
        assert record["dx_norm"] <= 1e-9


def test_verify_detects_injected_corruption(tmp_path, assets_dir):
    scenario_path = tiny_scenario(tmp_path, duration=40, jogs=5)
    out = tmp_path / "out"
    spec = RunSpec(model=str(assets_dir / "biped.urdf"), scenario=str(scenario_path), out_dir=str(out))
    run(spec)
    records = [json.loads(line) for line in open(out / "log.jsonl")]
    records[20]["wrenches"]["foot_l"][5] += 1.0  # +1 N on a normal force
    model = load_model_file(assets_dir / "biped.urdf")
    result = verify_log(model, records)
    assert not result["ok"]
    assert result["tick"] == records[20]["tick"]


def test_csv_round_trip_is_loss_free(tmp_path, assets_dir):
    scenario_path = tiny_scenario(tmp_path, duration=30, jogs=5)
    out = tmp_path / "out"
    spec = RunSpec(model=str(assets_dir / "biped.urdf"), scenario=str(scenario_path), out_dir=str(out))
    _, _, _ = run(spec)
    schema, columns, rows = read_panels_csv(out / "panels.csv")
    assert schema == "mcretarget-panels-v1"
    records = [json.loads(line) for line in open(out / "log.jsonl")]
    fz_col = columns.index("foot_l.fz")
    des_col = columns.index("hand_l.des.x")
    for row, record in zip(rows, records):
        assert row[fz_col] == record["wrenches"]["foot_l"][5]  # bitwise equal floats
        assert row[des_col] == record["desired"]["hand_l"]["position"][0]


def test_cli_run_and_verify(tmp_path, assets_dir):
    scenario_path = tiny_scenario(tmp_path, duration=50, jogs=5)
    out = tmp_path / "cli_out"
    code = main([
        "--model", "biped",
        "--scenario", str(scenario_path),
        "--out", str(out),
        "--verify",
    ])
    assert code == EXIT_OK
    assert (out / "log.jsonl").exists()


def test_cli_verify_existing_log_and_corruption(tmp_path, assets_dir, capsys):
    scenario_path = tiny_scenario(tmp_path, duration=30, jogs=3)
    out = tmp_path / "out"
    main(["--model", "biped", "--scenario", str(scenario_path), "--out", str(out)])
    capsys.readouterr()
    code = main(["--model", "biped", "--log", str(out / "log.jsonl")])
    assert code == EXIT_OK
    lines = [json.loads(line) for line in open(out / "log.jsonl")]
    lines[10]["wrenches"]["foot_r"][5] -= 2.0
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(json.dumps(line) for line in lines) + "\n")
    capsys.readouterr()
    code = main(["--model", "biped", "--log", str(bad)])
    assert code == EXIT_VIOLATION


def test_cli_input_errors(tmp_path):
    assert main(["--model", "missing_model.urdf", "--scenario", "x"]) == EXIT_INPUT
    assert main(["--model", "biped"]) == EXIT_INPUT  # no scenario, no log
    bad = tmp_path / "broken.urdf"
    bad.write_text("<robot><unclosed></robot>")
    assert main(["--model", str(bad), "--scenario", "x"]) == EXIT_INPUT
