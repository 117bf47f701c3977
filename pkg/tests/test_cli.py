import json
import subprocess
import sys

import pytest

from conftest import FIXTURES, base_doc
from ruralmesh import default_scenario_path
from ruralmesh.cli import main


def test_validate_shipped_scenario(capsys):
    assert main(["validate", str(default_scenario_path())]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_reports_errors(tmp_path, capsys):
    doc = base_doc(maps=[])
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert main(["validate", str(p)]) == 3
    assert "count-constraint" in capsys.readouterr().out


def test_unparseable_config(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["validate", str(p)]) == 2
    assert main(["run", str(p), "--until-hours", "1", "--out", str(tmp_path / "r.json")]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_run_refuses_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(base_doc(strict_counts=True, dpcs=[{"x_km": 0, "y_km": 0}] * 2)))
    assert main(["run", str(p), "--until-hours", "1", "--out", str(tmp_path / "r.json")]) == 3
    assert not (tmp_path / "r.json").exists()


def test_run_zero_hours(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", str(FIXTURES / "tiny_scenario.json"), "--until-hours", "0",
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["events_executed"] == 0
    assert rep["kinds"]["SensorBatch"]["latency_s"] == "n/a"


def test_runtime_abort_exit_code(tmp_path, monkeypatch):
    from ruralmesh import cli
    from ruralmesh.model import SimulationError

    class Boom:
        def __init__(self, *a, **k):
            pass

        def run(self):
            raise SimulationError("queue went backwards")

    monkeypatch.setattr(cli, "Simulation", Boom)
    assert main(["run", str(FIXTURES / "tiny_scenario.json"), "--until-hours", "1",
                 "--out", str(tmp_path / "r.json")]) == 4


def test_run_and_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", str(FIXTURES / "tiny_scenario.json"), "--until-hours", "2",
                 "--seed", "3", "--out", str(out), "--event-log"]) == 0
    rep = json.loads(out.read_text())
    assert rep["seed"] == 3 and rep["events"]
    capsys.readouterr()
    assert main(["report", str(out), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("kind,attempted")
    assert main(["report", str(out)]) == 0
    assert "run until 7200 s" in capsys.readouterr().out


def test_report_missing_file(tmp_path):
    assert main(["report", str(tmp_path / "none.json")]) == 2


@pytest.mark.parametrize("argv", [[], ["frobnicate"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit):
        main(argv)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ruralmesh", "validate",
                           str(FIXTURES / "tiny_scenario.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "ok"
