"""Discrete-event simulator of a rural e-services network built from sensor
fields, village kiosks, vehicle-mounted Mobile Access Points (data ferries),
Data Processing Centers and a central data/decision tier."""

from importlib import resources

from .engine import Simulation, run
from .metrics import RunReport, collect_metrics
from .model import (GeoPoint, Message, MessageKind, NodeId, Role, Severity, SimulationError,
                    distance)
from .radio import LinkProfile, RadioStandard, effective_rate, in_range, transfer_time
from .scenario import (ScenarioConfig, ScenarioError, ScenarioParseError, load_scenario,
                       parse_scenario, validate_scenario)

__all__ = [
    "GeoPoint", "LinkProfile", "Message", "MessageKind", "NodeId", "RadioStandard", "Role",
    "RunReport", "ScenarioConfig", "ScenarioError", "ScenarioParseError", "Severity",
    "Simulation", "SimulationError", "collect_metrics", "default_scenario_path", "distance",
    "effective_rate", "in_range", "load_default_scenario", "load_scenario", "parse_scenario",
    "run", "transfer_time", "validate_scenario",
]
__version__ = "0.1.0"


def default_scenario_path():
    """Path of the example scenario shipped with the package."""
    return resources.files(__name__) / "data" / "default_scenario.json"


def load_default_scenario() -> ScenarioConfig:
    return load_scenario(default_scenario_path())
