"""Phase-one data generation and e-service traffic.

Arrivals are Poisson, sensor values are Gaussian-perturbed sinusoids. Each
generator draws from its own RNG stream, keyed by a stable name, so adding a
generator never perturbs the draws of another.
"""

from __future__ import annotations

import itertools
import math
import zlib
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .model import DEFAULT_SIZES, Message, MessageKind, NodeId, Role

DAY_S = 86_400.0
DEFAULT_FLOOD_RAMP = ((8.0, 0.0), (10.0, 1.0))

IdSource = Callable[[], int]


def rng_stream(seed: int, key: str) -> np.random.Generator:
    """Independent generator for the stream named ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(key.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


def _ids(new_id: Optional[IdSource]) -> IdSource:
    return new_id if new_id is not None else itertools.count(1).__next__


def gravity_from_ramp(value: float, knots: Sequence[Tuple[float, float]]) -> float:
    """Piecewise-linear gravity through ``knots``, flat beyond the end knots."""
    xs = [k[0] for k in knots]
    ys = [k[1] for k in knots]
    return float(np.clip(np.interp(value, xs, ys), 0.0, 1.0))


@dataclass(frozen=True)
class SensorFieldModel:
    kiosk: NodeId
    metric: str = "water_level_m"
    base: float = 7.0
    amplitude: float = 0.0
    noise_std: float = 0.0
    sampling_period_s: float = 900.0
    size_bits: int = DEFAULT_SIZES[MessageKind.SENSOR_BATCH]
    gravity_ramp: Tuple[Tuple[float, float], ...] = DEFAULT_FLOOD_RAMP
    start_s: float = 0.0
    max_samples: Optional[int] = None
    diurnal_period_s: float = DAY_S

    def __post_init__(self):
        if self.sampling_period_s <= 0:
            raise ValueError("sampling period must be positive")
        if self.size_bits <= 0:
            raise ValueError("size_bits must be positive")

    def diurnal(self, now: float) -> float:
        if self.amplitude == 0:
            return 0.0
        return self.amplitude * math.sin(2.0 * math.pi * now / self.diurnal_period_s)

    def gravity(self, value: float) -> float:
        return gravity_from_ramp(value, self.gravity_ramp)


def gen_sensor_batch(model: SensorFieldModel, now: float, rng: np.random.Generator,
                     new_id: Optional[IdSource] = None) -> Message:
    value = model.base + model.diurnal(now)
    if model.noise_std > 0:
        value += float(rng.normal(0.0, model.noise_std))
    return Message(_ids(new_id)(), MessageKind.SENSOR_BATCH, model.size_bits, model.kiosk,
                   Role.DPC, now, gravity=model.gravity(value), payload_value=value,
                   metric=model.metric)


@dataclass(frozen=True)
class PoissonSpec:
    """Poisson traffic of one kind, per kiosk."""

    rate_per_hour: float = 0.0
    size_bits: int = 40_000
    gravity: float = 0.0
    metric: Optional[str] = None
    value_mean: float = 0.0
    kiosks: Optional[Tuple[NodeId, ...]] = None

    def __post_init__(self):
        if self.rate_per_hour < 0:
            raise ValueError("rates must be non-negative")
        if self.size_bits <= 0:
            raise ValueError("sizes must be positive")


@dataclass(frozen=True)
class MedicalSpec:
    rate_per_hour: float = 0.0
    size_bits: int = DEFAULT_SIZES[MessageKind.MEDICAL_REQUEST]
    response_size_bits: int = DEFAULT_SIZES[MessageKind.MEDICAL_RESPONSE]
    gravity: float = 0.3
    severe_fraction: float = 0.0
    severe_gravity: float = 0.9
    service_time_s: float = 600.0
    hospital: Optional[NodeId] = None
    kiosks: Optional[Tuple[NodeId, ...]] = None

    def __post_init__(self):
        if self.rate_per_hour < 0:
            raise ValueError("rates must be non-negative")
        if self.size_bits <= 0 or self.response_size_bits <= 0:
            raise ValueError("sizes must be positive")


@dataclass(frozen=True)
class LearningPush:
    dpc: NodeId
    targets: Tuple[NodeId, ...]
    at_s: Tuple[float, ...] = (0.0,)
    size_bits: int = DEFAULT_SIZES[MessageKind.LEARNING_CONTENT]


@dataclass(frozen=True)
class ScriptedMessage:
    """A single message injected at a kiosk at a fixed time."""

    at_s: float
    kind: MessageKind
    kiosk: NodeId
    gravity: Optional[float] = None
    payload_value: Optional[float] = None
    metric: Optional[str] = None
    size_bits: Optional[int] = None
    hospital: Optional[NodeId] = None


@dataclass(frozen=True)
class WorkloadSpec:
    sensor_fields: Tuple[SensorFieldModel, ...] = ()
    manual_records: PoissonSpec = PoissonSpec(
        size_bits=DEFAULT_SIZES[MessageKind.MANUAL_RECORD], gravity=0.1, metric="disease_reports")
    commerce: PoissonSpec = PoissonSpec(size_bits=DEFAULT_SIZES[MessageKind.COMMERCE_ORDER])
    medical: MedicalSpec = MedicalSpec()
    learning: Tuple[LearningPush, ...] = ()
    scripted: Tuple[ScriptedMessage, ...] = ()
    arrival_window_s: float = 3600.0


def poisson_arrivals(rate_per_hour: float, start: float, horizon_s: float,
                     rng: np.random.Generator) -> List[float]:
    """Sorted arrival times of a Poisson process on ``[start, start + horizon_s)``.

    A zero rate consumes no randomness.
    """
    if rate_per_hour <= 0 or horizon_s <= 0:
        return []
    n = int(rng.poisson(rate_per_hour * horizon_s / 3600.0))
    return [start + float(u) for u in np.sort(rng.uniform(0.0, horizon_s, n))]


def gen_manual_records(kiosk: NodeId, spec: PoissonSpec, now: float, rng: np.random.Generator,
                       horizon_s: float = 3600.0,
                       new_id: Optional[IdSource] = None) -> List[Message]:
    """Manually entered kiosk records arriving during ``[now, now + horizon_s)``."""
    ids = _ids(new_id)
    out = []
    for t in poisson_arrivals(spec.rate_per_hour, now, horizon_s, rng):
        value = float(rng.poisson(spec.value_mean)) if spec.value_mean > 0 else None
        out.append(Message(ids(), MessageKind.MANUAL_RECORD, spec.size_bits, kiosk, Role.DPC, t,
                           gravity=spec.gravity, payload_value=value, metric=spec.metric))
    return out


def gen_commerce_order(kiosk: NodeId, spec: PoissonSpec, now: float,
                       new_id: Optional[IdSource] = None) -> Message:
    return Message(_ids(new_id)(), MessageKind.COMMERCE_ORDER, spec.size_bits, kiosk, Role.DPC,
                   now, gravity=spec.gravity)


def gen_commerce_orders(kiosk: NodeId, spec: PoissonSpec, now: float, rng: np.random.Generator,
                        horizon_s: float = 3600.0,
                        new_id: Optional[IdSource] = None) -> List[Message]:
    ids = _ids(new_id)
    return [gen_commerce_order(kiosk, spec, t, ids)
            for t in poisson_arrivals(spec.rate_per_hour, now, horizon_s, rng)]


def medical_roundtrip(kiosk: NodeId, hospital: NodeId, spec: MedicalSpec, now: float,
                      rng: Optional[np.random.Generator] = None,
                      new_id: Optional[IdSource] = None) -> Message:
    """Open a round trip: the MedicalRequest raised at ``kiosk`` for ``hospital``.

    The response leg is produced by :func:`medical_response` once the request
    reaches the hospital.
    """
    gravity = spec.gravity
    if spec.severe_fraction > 0 and rng is not None and rng.random() < spec.severe_fraction:
        gravity = spec.severe_gravity
    return Message(_ids(new_id)(), MessageKind.MEDICAL_REQUEST, spec.size_bits, kiosk,
                   Role.HOSPITAL, now, gravity=gravity, destination=hospital)


def medical_response(request: Message, hospital: NodeId, spec: MedicalSpec, now: float,
                     new_id: Optional[IdSource] = None) -> Message:
    return Message(_ids(new_id)(), MessageKind.MEDICAL_RESPONSE, spec.response_size_bits,
                   hospital, Role.KIOSK, now, gravity=request.gravity,
                   destination=request.origin)


def gen_medical_requests(kiosk: NodeId, hospital: NodeId, spec: MedicalSpec, now: float,
                         rng: np.random.Generator, horizon_s: float = 3600.0,
                         new_id: Optional[IdSource] = None) -> List[Message]:
    ids = _ids(new_id)
    return [medical_roundtrip(kiosk, hospital, spec, t, rng, ids)
            for t in poisson_arrivals(spec.rate_per_hour, now, horizon_s, rng)]


def gen_learning_push(dpc: NodeId, push: LearningPush, now: float,
                      new_id: Optional[IdSource] = None) -> List[Message]:
    """One LearningContent message per target kiosk, queued at ``dpc``."""
    ids = _ids(new_id)
    return [Message(ids(), MessageKind.LEARNING_CONTENT, push.size_bits, dpc, Role.KIOSK, now,
                    gravity=0.0, destination=k) for k in push.targets]


_SCRIPTED_FINAL = {
    MessageKind.SENSOR_BATCH: Role.DPC,
    MessageKind.MANUAL_RECORD: Role.DPC,
    MessageKind.COMMERCE_ORDER: Role.DPC,
    MessageKind.MEDICAL_REQUEST: Role.HOSPITAL,
}
_SCRIPTED_GRAVITY = {
    MessageKind.SENSOR_BATCH: 0.0,
    MessageKind.MANUAL_RECORD: 0.1,
    MessageKind.COMMERCE_ORDER: 0.0,
    MessageKind.MEDICAL_REQUEST: 0.3,
}
SCRIPTABLE_KINDS = tuple(_SCRIPTED_FINAL)


def scripted_message(s: ScriptedMessage, new_id: Optional[IdSource] = None,
                     default_hospital: Optional[NodeId] = None) -> Message:
    if s.kind not in _SCRIPTED_FINAL:
        raise ValueError(f"{s.kind.value} cannot be scripted at a kiosk")
    gravity = _SCRIPTED_GRAVITY[s.kind] if s.gravity is None else s.gravity
    dest = (s.hospital or default_hospital) if s.kind is MessageKind.MEDICAL_REQUEST else None
    return Message(_ids(new_id)(), s.kind, s.size_bits or DEFAULT_SIZES[s.kind], s.kiosk,
                   _SCRIPTED_FINAL[s.kind], s.at_s, gravity=gravity,
                   payload_value=s.payload_value, metric=s.metric, destination=dest)
