"""Domain entities shared by every part of the simulator."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple


class SimulationError(RuntimeError):
    """Raised when the simulator detects a violation of its own invariants."""


class ConservationError(SimulationError):
    pass


class Role(enum.Enum):
    KIOSK = "kiosk"
    MAP = "map"
    DPC = "dpc"
    CDC = "cdc"
    DCC = "dcc"
    SENSOR_FIELD = "sensor"
    HOSPITAL = "hospital"
    EMERGENCY = "emergency"  # emergency services reached by the direct bypass call


_NODE_RE = re.compile(r"^\s*([A-Za-z]+)\s*(?:[:\s]\s*(\d+))?\s*$")


@dataclass(frozen=True)
class NodeId:
    """A node address such as ``kiosk:2``. Indices are 1-based."""

    role: Role
    index: int = 1

    def __str__(self) -> str:
        return f"{self.role.value}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "NodeId":
        """Accepts ``kiosk:2``, ``Kiosk 2`` and a bare role (index 1)."""
        if not isinstance(text, str):
            raise ValueError(f"node reference must be a string, got {text!r}")
        m = _NODE_RE.match(text)
        if m is None:
            raise ValueError(f"malformed node reference {text!r}")
        try:
            role = Role(m.group(1).lower())
        except ValueError:
            raise ValueError(f"unknown node role in {text!r}") from None
        index = int(m.group(2)) if m.group(2) else 1
        if index < 1:
            raise ValueError(f"node indices start at 1: {text!r}")
        return cls(role, index)

    def __lt__(self, other: "NodeId") -> bool:
        return (self.role.value, self.index) < (other.role.value, other.index)


def kiosk(i: int) -> NodeId:
    return NodeId(Role.KIOSK, i)


def map_node(i: int) -> NodeId:
    return NodeId(Role.MAP, i)


def dpc(i: int) -> NodeId:
    return NodeId(Role.DPC, i)


def hospital(i: int) -> NodeId:
    return NodeId(Role.HOSPITAL, i)


CDC = NodeId(Role.CDC, 1)
DCC = NodeId(Role.DCC, 1)


@dataclass(frozen=True)
class GeoPoint:
    x_km: float
    y_km: float

    def __post_init__(self):
        if not (math.isfinite(self.x_km) and math.isfinite(self.y_km)):
            raise ValueError(f"non-finite coordinates ({self.x_km}, {self.y_km})")


def distance(a: GeoPoint, b: GeoPoint) -> float:
    """Euclidean distance in km."""
    return math.hypot(b.x_km - a.x_km, b.y_km - a.y_km)


class MessageKind(enum.Enum):
    SENSOR_BATCH = "SensorBatch"
    MANUAL_RECORD = "ManualRecord"
    MEDICAL_REQUEST = "MedicalRequest"
    MEDICAL_RESPONSE = "MedicalResponse"
    LEARNING_CONTENT = "LearningContent"
    COMMERCE_ORDER = "CommerceOrder"
    EMERGENCY_ALERT = "EmergencyAlert"


EMERGENCY_ALERT_BITS = 8_000

# default sizes (bits) per kind
DEFAULT_SIZES = {
    MessageKind.SENSOR_BATCH: 80_000,
    MessageKind.MANUAL_RECORD: 40_000,
    MessageKind.MEDICAL_REQUEST: 200_000,
    MessageKind.MEDICAL_RESPONSE: 200_000,
    MessageKind.LEARNING_CONTENT: 400_000_000,
    MessageKind.COMMERCE_ORDER: 40_000,
    MessageKind.EMERGENCY_ALERT: EMERGENCY_ALERT_BITS,
}


@dataclass
class Message:
    id: int
    kind: MessageKind
    size_bits: int
    origin: NodeId
    final_role: Role
    created_at: float
    gravity: float = 0.0
    payload_value: Optional[float] = None
    metric: Optional[str] = None
    destination: Optional[NodeId] = None
    hops: List[Tuple[NodeId, float]] = field(default_factory=list)

    def __post_init__(self):
        self.created_at = float(self.created_at)
        self.gravity = float(self.gravity)
        if self.payload_value is not None:
            self.payload_value = float(self.payload_value)
        if not 0.0 <= self.gravity <= 1.0:
            raise ValueError(f"gravity {self.gravity} outside [0, 1]")
        if self.size_bits <= 0:
            raise ValueError("size_bits must be positive")
        if self.kind is MessageKind.EMERGENCY_ALERT and self.size_bits != EMERGENCY_ALERT_BITS:
            raise ValueError("emergency alerts have a fixed size")
        if not self.hops:
            self.hops.append((self.origin, self.created_at))

    def add_hop(self, node: NodeId, t: float) -> None:
        if t < self.hops[-1][1]:
            raise SimulationError(
                f"message {self.id}: hop at {t} precedes previous hop at {self.hops[-1][1]}")
        self.hops.append((node, t))

    @property
    def priority_key(self):
        return (-self.gravity, self.created_at, self.id)


class Severity(enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity.value.upper()} [{self.code}] {self.message}"
