import copy
import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

FIXTURES = HERE / "fixtures"


@pytest.fixture
def tiny_doc():
    return json.loads((FIXTURES / "tiny_scenario.json").read_text())


@pytest.fixture
def tiny_trace():
    return json.loads((FIXTURES / "tiny_trace.json").read_text())


def base_doc(**over):
    """A minimal valid scenario document; keyword arguments replace top-level keys."""
    doc = {
        "kiosks": [{"x_km": 0.0, "y_km": 0.0}],
        "maps": [{"route": {"waypoints": [{"node": "kiosk:1", "dwell_s": 60},
                                          {"node": "dpc:1", "dwell_s": 60}],
                            "cyclic": True, "speed_kmh": 30}}],
        "dpcs": [{"x_km": 5.0, "y_km": 0.0}],
        "cdc": {}, "dcc": {}, "hospitals": [],
        "radio": {"standard": "802.11b", "efficiency": 0.5},
        "workloads": {}, "gravity_threshold": 0.8, "seed": 1, "strict_counts": True,
    }
    doc.update(copy.deepcopy(over))
    return doc


ACCEPTANCE_RESULTS = []


def record_criterion(number, title, passed, detail=""):
    """Store one acceptance verdict for the end-of-run summary."""
    ACCEPTANCE_RESULTS.append((number, title, passed, detail))
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {title}"
    print(line + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number}. {title}" + (f": {detail}" if detail else ""))
