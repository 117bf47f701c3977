"""DPC confidence pipeline, CDC history merge, DCC rules and the emergency bypass."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import (Callable, Deque, Dict, List, Mapping, MutableMapping, Optional, Sequence,
                    Tuple)

import numpy as np

from .ferry import Buffer
from .model import (EMERGENCY_ALERT_BITS, GeoPoint, Message, MessageKind, NodeId, Role,
                    SimulationError)

SCORED_KINDS = (MessageKind.SENSOR_BATCH, MessageKind.MANUAL_RECORD)

DEFAULT_TOLERANCE = 0.05
DEFAULT_SERVICE_TIME_S = 1.0
DEFAULT_PEER_SYNC_DELAY_S = 30.0
DEFAULT_PEER_WINDOW_S = 3600.0
DEFAULT_BACKHAUL_DELAY_S = 60.0
DEFAULT_BYPASS_LATENCY_S = 120.0
DEFAULT_REPORT_WINDOW_S = 3600.0


class DuplicateIngestError(SimulationError):
    pass


class PipelineError(SimulationError):
    pass


class DpcStatus(enum.Enum):
    QUEUED = "Queued"
    PROCESSING = "Processing"
    PASSED = "Passed"
    FLAGGED = "Flagged"
    FORWARDED = "Forwarded"


@dataclass
class DpcRecord:
    message: Message
    arrived_at: float
    dpc: NodeId
    confidence: Optional[float] = None
    retries: int = 0
    status: DpcStatus = DpcStatus.QUEUED
    flagged: bool = False
    finished_at: Optional[float] = None
    scores: List[float] = field(default_factory=list)

    @property
    def record_id(self) -> int:
        return self.message.id


@dataclass(frozen=True)
class ConfidenceReport:
    record_id: int
    peer_values: Tuple[Tuple[NodeId, float], ...]
    agreement: float


@dataclass(frozen=True)
class DpcParams:
    confidence_threshold: float = 0.8
    retry_limit: int = 2
    tolerance: float = DEFAULT_TOLERANCE
    service_time_s: float = DEFAULT_SERVICE_TIME_S
    peer_sync_delay_s: float = DEFAULT_PEER_SYNC_DELAY_S
    peer_window_s: float = DEFAULT_PEER_WINDOW_S


class DpcState:
    """Mutable state of one Data Processing Center during a run."""

    def __init__(self, node: NodeId, position: GeoPoint, params: DpcParams,
                 peers: Sequence[NodeId] = (), inbox_bits: float = 1e10):
        self.node = node
        self.position = position
        self.params = params
        self.peers = tuple(peers)
        self.inbox = Buffer(node, inbox_bits)
        self.outbound = Buffer(node, math.inf)
        self.records: Dict[int, DpcRecord] = {}
        self.queue: Deque[int] = deque()
        self.busy: Optional[int] = None


def ingest_at_dpc(dpc: DpcState, message: Message, now: float) -> DpcRecord:
    """Take custody of ``message`` at ``dpc`` and queue it for processing."""
    if message.id in dpc.records or message.id in dpc.inbox:
        raise DuplicateIngestError(f"duplicate ingest of message {message.id} at {dpc.node}")
    dpc.inbox.add(message)
    rec = DpcRecord(message, now, dpc.node)
    dpc.records[message.id] = rec
    dpc.queue.append(message.id)
    return rec


def compute_confidence(record: DpcRecord, peer_values: Sequence[Tuple[NodeId, float]],
                       tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Fraction of peer values within relative ``tolerance`` of the record's value.

    Unscored kinds, records without a value and records without peers get 1.0.
    """
    msg = record.message
    if msg.kind not in SCORED_KINDS or msg.payload_value is None or not peer_values:
        return 1.0
    v = msg.payload_value
    agree = sum(1 for _, p in peer_values if abs(p - v) <= tolerance * abs(v))
    return agree / len(peer_values)


def dpc_process(record: DpcRecord, threshold: float, retry_limit: int) -> DpcStatus:
    """Apply the threshold check to a scored record.

    Returns PASSED or FLAGGED when processing is finished, or QUEUED when the
    record goes back for another round (``retries`` is incremented).
    """
    if record.status not in (DpcStatus.QUEUED, DpcStatus.PROCESSING):
        raise PipelineError(f"record {record.record_id} is {record.status.value}")
    conf = 1.0 if record.confidence is None else record.confidence
    if conf >= threshold:
        record.status = DpcStatus.PASSED
    elif record.retries < retry_limit:
        record.retries += 1
        record.status = DpcStatus.QUEUED
    else:
        record.status = DpcStatus.FLAGGED
        record.flagged = True
    return record.status


def forward_to_cdc(dpc: DpcState, record: DpcRecord, now: float,
                   backhaul_delay_s: float = DEFAULT_BACKHAUL_DELAY_S) -> float:
    """Mark the record Forwarded and return its CDC arrival time."""
    if record.status not in (DpcStatus.PASSED, DpcStatus.FLAGGED):
        raise PipelineError(
            f"record {record.record_id} cannot be forwarded while {record.status.value}")
    record.status = DpcStatus.FORWARDED
    return now + backhaul_delay_s


PeerSource = Callable[[DpcRecord, DpcState, int], Sequence[Tuple[NodeId, float]]]


class NetworkPeerSource:
    """Peer values taken from the records other DPCs have ingested.

    A peer value is any record at a linked DPC with the same origin area and
    metric whose measurement time lies within the DPC's peer window.
    """

    def __init__(self, dpcs: Mapping[NodeId, DpcState]):
        self.dpcs = dpcs

    def __call__(self, record, dpc, attempt):
        msg = record.message
        if msg.kind not in SCORED_KINDS or msg.payload_value is None:
            return []
        out = []
        for peer in dpc.peers:
            other = self.dpcs.get(peer)
            if other is None:
                continue
            for r in other.records.values():
                m = r.message
                if (m.id != msg.id and m.origin == msg.origin and m.metric == msg.metric
                        and m.payload_value is not None
                        and abs(m.created_at - msg.created_at) <= dpc.params.peer_window_s):
                    out.append((peer, m.payload_value))
        return out


class ScriptedPeerSource:
    """Peer replies produced by a function of (record, attempt); for experiments and tests."""

    def __init__(self, values: Callable[[DpcRecord, int], Sequence[float]]):
        self.values = values

    @classmethod
    def disagreeing(cls, relative_offset: float = 0.5, n_peers: int = 2) -> "ScriptedPeerSource":
        """Peers that all report the value shifted by ``relative_offset`` (at least that
        much in absolute terms, so zero readings disagree too)."""
        def values(record, attempt):
            v = record.message.payload_value
            if v is None:
                return []
            return [v + max(abs(v), 1.0) * relative_offset] * n_peers
        return cls(values)

    def __call__(self, record, dpc, attempt):
        ids = dpc.peers or (dpc.node,)
        return [(ids[i % len(ids)], float(v))
                for i, v in enumerate(self.values(record, attempt))]


# --------------------------------------------------------------------------
# CDC

@dataclass(frozen=True)
class AreaEntry:
    metric: str
    value: float
    measured_at: float
    arrived_at: float
    flagged: bool
    message_id: int


class AreaHistory:
    """Per-area, append-only series of values accepted at the CDC."""

    def __init__(self):
        self._series: Dict[NodeId, List[AreaEntry]] = {}

    def append(self, area: NodeId, entry: AreaEntry) -> None:
        series = self._series.setdefault(area, [])
        if series and entry.arrived_at < series[-1].arrived_at:
            raise SimulationError(f"out-of-order history append for {area}")
        series.append(entry)

    def entries(self, area: NodeId) -> Tuple[AreaEntry, ...]:
        return tuple(self._series.get(area, ()))

    def areas(self) -> List[NodeId]:
        return sorted(self._series)

    def __len__(self):
        return sum(len(s) for s in self._series.values())


def _trend_sign(times: Sequence[float], values: Sequence[float]) -> int:
    if len(values) < 2:
        return 0
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    t = t - t.mean()
    denom = float(np.dot(t, t))
    if denom == 0.0:
        return 0
    slope = float(np.dot(t, v - v.mean())) / denom
    return int(np.sign(slope))


@dataclass(frozen=True)
class AreaReport:
    area: NodeId
    issued_at: float
    metric: Optional[str]
    latest: Optional[float]
    mean: Optional[float]
    trend: int
    entries: Tuple[AreaEntry, ...]
    window_s: float = DEFAULT_REPORT_WINDOW_S

    def window(self, metric: str, window_s: float) -> List[AreaEntry]:
        lo = self.issued_at - window_s
        return [e for e in self.entries
                if e.metric == metric and not e.flagged and e.arrived_at >= lo]

    def stat(self, metric: str, stat: str, window_s: float) -> Optional[float]:
        """Window statistic over unflagged entries; None when the window is empty."""
        vals = [e.value for e in self.window(metric, window_s)]
        if stat == "count":
            return float(len(vals))
        if not vals:
            return None
        if stat == "mean":
            return float(np.mean(vals))
        if stat == "sum":
            return float(np.sum(vals))
        if stat == "latest":
            return vals[-1]
        if stat == "max":
            return max(vals)
        raise ValueError(f"unknown statistic {stat!r}")


def cdc_merge(history: AreaHistory, record: DpcRecord, now: float,
              window_s: float = DEFAULT_REPORT_WINDOW_S) -> Tuple[AreaHistory, AreaReport]:
    """Append a forwarded record to its area's series and summarise that metric.

    Flagged values are kept in the series but left out of the mean and trend.
    """
    msg = record.message
    area = msg.origin
    if msg.metric is not None and msg.payload_value is not None:
        history.append(area, AreaEntry(msg.metric, float(msg.payload_value), msg.created_at,
                                       now, record.flagged, msg.id))
    entries = history.entries(area)
    latest = mean = None
    trend = 0
    if msg.metric is not None:
        lo = now - window_s
        usable = [e for e in entries if e.metric == msg.metric and not e.flagged]
        if usable:
            latest = usable[-1].value
        win = [e for e in usable if e.arrived_at >= lo]
        if win:
            mean = float(np.mean([e.value for e in win]))
            trend = _trend_sign([e.arrived_at for e in win], [e.value for e in win])
    return history, AreaReport(area, now, msg.metric, latest, mean, trend, entries, window_s)


# --------------------------------------------------------------------------
# DCC

class Action(enum.Enum):
    FLOOD_WARNING = "FloodWarning"
    DISPATCH_MEDICAL_TEAM = "DispatchMedicalTeam"
    NO_ACTION = "NoAction"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Rule:
    metric: str
    op: str
    value: float
    window_s: float
    action: str
    stat: str = "mean"

    def __post_init__(self):
        if self.op not in (">", "<"):
            raise ValueError(f"rule op must be '>' or '<', got {self.op!r}")
        if self.stat not in ("mean", "sum", "count", "latest", "max"):
            raise ValueError(f"unknown rule statistic {self.stat!r}")

    def matches(self, report: AreaReport) -> bool:
        x = report.stat(self.metric, self.stat, self.window_s)
        if x is None:
            return False
        return x > self.value if self.op == ">" else x < self.value


DEFAULT_FLOOD_THRESHOLD_M = 8.0
DEFAULT_OUTBREAK_THRESHOLD = 10.0

DEFAULT_RULES = (
    Rule("water_level_m", ">", DEFAULT_FLOOD_THRESHOLD_M, 3600.0, "FloodWarning"),
    Rule("disease_reports", ">", DEFAULT_OUTBREAK_THRESHOLD, 86400.0, "DispatchMedicalTeam",
         stat="sum"),
)


@dataclass(frozen=True)
class Decision:
    issued_at: float
    area: NodeId
    action: Action
    label: str
    triggering: Tuple[int, ...] = ()


def _action(label: str) -> Action:
    for a in Action:
        if a.value == label and a is not Action.CUSTOM:
            return a
    return Action.CUSTOM


def dcc_decide(report: AreaReport, rules: Sequence[Rule]) -> Decision:
    """First matching rule in table order wins; no match means NoAction."""
    for rule in rules:
        if rule.matches(report):
            trig = tuple(e.message_id for e in report.window(rule.metric, rule.window_s))
            return Decision(report.issued_at, report.area, _action(rule.action), rule.action, trig)
    return Decision(report.issued_at, report.area, Action.NO_ACTION, Action.NO_ACTION.value)


# --------------------------------------------------------------------------
# emergency bypass

@dataclass
class EmergencyAlert:
    source_message_id: int
    raised_at_node: NodeId
    raised_at: float
    due_at: float
    message: Message
    delivered_at: Optional[float] = None


BYPASS_ROLES = (Role.MAP, Role.DPC)


def emergency_bypass_check(message: Message, gravity_threshold: float, location: NodeId,
                           now: float, raised: MutableMapping[int, EmergencyAlert],
                           new_id: Callable[[], int],
                           latency_s: float = DEFAULT_BYPASS_LATENCY_S) -> Optional[EmergencyAlert]:
    """Raise a direct alert for a grave message at its first MAP or DPC custody point.

    ``raised`` maps source message id to alert and is how duplicates are
    suppressed. The original message is untouched and keeps travelling.
    """
    if location.role not in BYPASS_ROLES:
        return None
    if message.kind is MessageKind.EMERGENCY_ALERT:
        return None
    if message.gravity < gravity_threshold or message.id in raised:
        return None
    alert_msg = Message(new_id(), MessageKind.EMERGENCY_ALERT, EMERGENCY_ALERT_BITS, location,
                        Role.EMERGENCY, now, gravity=message.gravity,
                        destination=NodeId(Role.EMERGENCY, 1))
    alert = EmergencyAlert(message.id, location, now, now + latency_s, alert_msg)
    raised[message.id] = alert
    return alert
