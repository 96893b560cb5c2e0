import json

import pytest
import yaml

from dipolar.cli import main
from dipolar.make_examples import example_path


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == "0.1.0"


def test_schema(capsys):
    assert main(["schema", "--quiet"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert "analysis" in schema["properties"]


def test_run(tmp_path, capsys):
    scenario = example_path("transfer_overrides") / "scenario.yaml"
    assert main(["--quiet", "run", str(scenario), "--output-dir", str(tmp_path), "--format", "json"]) == 0
    assert "rates: rates.json" in capsys.readouterr().out
    assert (tmp_path / "manifest.json").exists()
    # second run collides with the first
    assert main(["run", str(scenario), "--output-dir", str(tmp_path), "--format", "json"]) == 2
    assert main(["run", str(scenario), "--output-dir", str(tmp_path), "--format", "json", "--force"]) == 0


def test_configuration_errors_exit_2(tmp_path):
    data = yaml.safe_load((example_path("transfer_overrides") / "scenario.yaml").read_text(encoding="utf-8"))
    data["analysis"] = ["phonons"]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    assert main(["run", str(path)]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_numerical_errors_exit_3(tmp_path):
    data = yaml.safe_load((example_path("transfer_overrides") / "scenario.yaml").read_text(encoding="utf-8"))
    data["analysis"] = ["dynamics-strong"]
    data["numerics"]["resonance"] = {"linewidth": 0.01, "branch": "-"}
    path = tmp_path / "branch.yaml"
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    assert main(["run", str(path), "--output-dir", str(tmp_path / "out")]) == 3


def test_unknown_command():
    with pytest.raises(SystemExit) as info:
        main(["simulate"])
    assert info.value.code == 2


def test_selftest_command(capsys):
    assert main(["selftest", "--geometries", "2", "--seed", "7"]) == 0
    assert "reciprocity" in capsys.readouterr().out


def test_example_command(tmp_path):
    assert main(["example", "vacuum_pair", str(tmp_path)]) == 0
    assert (tmp_path / "vacuum_pair" / "scenario.yaml").exists()


def test_example_command_refuses_existing_folder(tmp_path, caplog):
    assert main(["--quiet", "example", "resonator_rabi", str(tmp_path)]) == 0
    assert main(["--quiet", "example", "resonator_rabi", str(tmp_path)]) == 2
    assert "already exists" in caplog.text
