"""MAP mobility, contact detection and the chunked, resumable transfer sessions."""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .model import GeoPoint, Message, NodeId, distance
from .radio import LinkProfile, in_range

KMH = 1.0 / 3600.0  # km/s per km/h


@dataclass(frozen=True)
class Waypoint:
    node: NodeId
    dwell_s: float = 0.0


@dataclass(frozen=True)
class Route:
    waypoints: Tuple[Waypoint, ...]
    cyclic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))

    @property
    def nodes(self) -> Tuple[NodeId, ...]:
        return tuple(w.node for w in self.waypoints)


# --------------------------------------------------------------------------
# mobility

@dataclass(frozen=True)
class Segment:
    """One piece of a route: stationary (dwell/park) or straight-line travel."""

    start: GeoPoint
    end: GeoPoint
    duration: float
    waypoint: int
    moving: bool

    def position(self, offset: float) -> GeoPoint:
        if not self.moving or offset <= 0:
            return self.start
        if offset >= self.duration:
            return self.end
        u = offset / self.duration
        return GeoPoint(self.start.x_km + (self.end.x_km - self.start.x_km) * u,
                        self.start.y_km + (self.end.y_km - self.start.y_km) * u)


def build_segments(route: Route, positions: Mapping[NodeId, GeoPoint],
                   speed_kmh: float) -> List[Segment]:
    """Expand a route into segments.

    Cyclic routes return one cycle that repeats; non-cyclic routes end with a
    single segment of infinite duration parked at the last waypoint.
    Zero-length segments are dropped.
    """
    if speed_kmh <= 0:
        raise ValueError("speed must be positive")
    wps = route.waypoints
    if not wps:
        raise ValueError("route has no waypoints")
    pts = [positions[w.node] for w in wps]
    speed = speed_kmh * KMH
    segs: List[Segment] = []
    n = len(wps)
    for i, w in enumerate(wps):
        last = i == n - 1
        if last and not route.cyclic:
            segs.append(Segment(pts[i], pts[i], math.inf, i, False))
            break
        if w.dwell_s > 0:
            segs.append(Segment(pts[i], pts[i], float(w.dwell_s), i, False))
        j = (i + 1) % n
        leg = distance(pts[i], pts[j])
        if leg > 0:
            segs.append(Segment(pts[i], pts[j], leg / speed, i, True))
    if route.cyclic and sum(s.duration for s in segs) <= 0:
        raise ValueError("cyclic route has zero cycle duration")
    return segs


class RouteTimeline:
    """Closed-form position of a MAP as a function of simulation time."""

    def __init__(self, route: Route, positions: Mapping[NodeId, GeoPoint], speed_kmh: float):
        self.route = route
        self.segments = build_segments(route, positions, speed_kmh)
        self.cycle = sum(s.duration for s in self.segments)
        self._starts = []
        t = 0.0
        for s in self.segments:
            self._starts.append(t)
            t += s.duration

    def locate(self, t: float) -> Tuple[int, float]:
        if t < 0:
            raise ValueError("negative time")
        if self.route.cyclic:
            t = math.fmod(t, self.cycle)
        i = bisect.bisect_right(self._starts, t) - 1
        return i, t - self._starts[i]

    def position_at(self, t: float) -> GeoPoint:
        i, off = self.locate(t)
        return self.segments[i].position(off)


@dataclass
class FerryState:
    map_id: NodeId
    position: GeoPoint
    leg: int = 0                 # waypoint last reached
    progress: float = 0.0        # fraction of the leg leg -> leg+1 covered
    dwell_remaining: float = 0.0
    buffer: Optional["Buffer"] = None

    @property
    def buffer_used_bits(self) -> int:
        return self.buffer.used if self.buffer is not None else 0


def initial_ferry_state(map_id: NodeId, route: Route, positions: Mapping[NodeId, GeoPoint],
                        buffer: Optional["Buffer"] = None) -> FerryState:
    first = route.waypoints[0]
    return FerryState(map_id, positions[first.node], 0, 0.0, float(first.dwell_s), buffer)


def advance_position(state: FerryState, dt: float, speed_kmh: float, route: Route,
                     positions: Mapping[NodeId, GeoPoint]) -> FerryState:
    """Move a ferry ``dt`` seconds along its route and return the new state.

    Dwell time at the current waypoint is consumed before departing; cyclic
    routes wrap to the first waypoint, others park at the last one.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    wps = route.waypoints
    n = len(wps)
    speed = speed_kmh * KMH
    leg, progress, dwell, pos = state.leg, state.progress, state.dwell_remaining, state.position
    cycle = None
    if route.cyclic:
        cycle = sum(w.dwell_s for w in wps) + sum(
            distance(positions[wps[i].node], positions[wps[(i + 1) % n].node])
            for i in range(n)) / speed
    guard = 0
    while dt > 0:
        if cycle and leg == 0 and progress == 0.0 and dwell == wps[0].dwell_s and dt >= cycle:
            dt = math.fmod(dt, cycle)
            continue
        if dwell > 0:
            used = min(dt, dwell)
            dwell -= used
            dt -= used
            continue
        nxt = leg + 1
        if nxt == n:
            if not route.cyclic:
                break
            nxt = 0
        a, b = positions[wps[leg].node], positions[wps[nxt].node]
        length = distance(a, b)
        need = (1.0 - progress) * length / speed
        if dt >= need:
            dt -= need
            leg, progress, dwell, pos = nxt, 0.0, float(wps[nxt].dwell_s), b
            guard = guard + 1 if need == 0 and dwell == 0 else 0
            if guard > n:
                raise ValueError("route has zero cycle duration")
            continue
        progress += dt * speed / length
        pos = GeoPoint(a.x_km + (b.x_km - a.x_km) * progress,
                       a.y_km + (b.y_km - a.y_km) * progress)
        dt = 0.0
    return replace(state, position=pos, leg=leg, progress=progress, dwell_remaining=dwell)


# --------------------------------------------------------------------------
# contacts

def segment_contact_interval(seg: Segment, center: GeoPoint,
                             range_km: float) -> Optional[Tuple[float, float]]:
    """Offsets ``(enter, leave)`` within ``seg`` during which ``center`` is in range.

    A disk intersected with a line segment is a single interval, found from
    the quadratic |start + u*(end-start) - center|^2 = range^2.
    Returns None when the segment never comes within range.
    """
    start_in = distance(seg.start, center) <= range_km
    if not seg.moving:
        return (0.0, seg.duration) if start_in else None
    end_in = distance(seg.end, center) <= range_km
    dx, dy = seg.end.x_km - seg.start.x_km, seg.end.y_km - seg.start.y_km
    px, py = seg.start.x_km - center.x_km, seg.start.y_km - center.y_km
    a = dx * dx + dy * dy
    b = 2.0 * (px * dx + py * dy)
    c = px * px + py * py - range_km * range_km
    disc = b * b - 4.0 * a * c
    if disc < 0:
        if start_in or end_in:  # rounding at a tangent endpoint
            u = 0.0 if start_in else 1.0
            return (u * seg.duration, u * seg.duration)
        return None
    root = math.sqrt(disc)
    u1 = (-b - root) / (2.0 * a)
    u2 = (-b + root) / (2.0 * a)
    if start_in:
        u1 = 0.0
    if end_in:
        u2 = 1.0
    u1, u2 = max(u1, 0.0), min(u2, 1.0)
    if u1 > u2:
        return None
    return u1 * seg.duration, u2 * seg.duration


@dataclass(frozen=True)
class ContactEdge:
    map_id: NodeId
    node: NodeId
    begin: bool


ProfileLookup = Union[LinkProfile, Callable[[NodeId, NodeId], LinkProfile]]


def _profile(lookup: ProfileLookup, map_id: NodeId, node: NodeId) -> LinkProfile:
    return lookup if isinstance(lookup, LinkProfile) else lookup(map_id, node)


def detect_contacts(ferries: Mapping[NodeId, GeoPoint], fixed_nodes: Mapping[NodeId, GeoPoint],
                    profiles: ProfileLookup,
                    active: Iterable[Tuple[NodeId, NodeId]] = ()) -> List[ContactEdge]:
    """Snapshot contact detection: edges relative to the ``active`` pair set.

    Emits a begin edge for each pair now in range that is not active and an
    end edge for each active pair now out of range.
    """
    active = set(active)
    edges = []
    for m in sorted(ferries):
        for f in sorted(fixed_nodes):
            now_in = in_range(ferries[m], fixed_nodes[f], _profile(profiles, m, f))
            was_in = (m, f) in active
            if now_in != was_in:
                edges.append(ContactEdge(m, f, now_in))
    return edges


# --------------------------------------------------------------------------
# buffers and transfer sessions

class BufferFullError(RuntimeError):
    pass


class Buffer:
    """Capacity-bounded store ordered by (gravity desc, created_at asc, id).

    ``reserved`` holds space for inbound sessions still in progress; ``peak``
    tracks stored bits only.
    """

    def __init__(self, owner: NodeId, capacity_bits: float):
        self.owner = owner
        self.capacity = capacity_bits
        self.used = 0
        self.reserved = 0
        self.peak = 0
        self._keys: List[tuple] = []
        self._msgs: Dict[int, Message] = {}

    def __len__(self):
        return len(self._msgs)

    def __contains__(self, msg_id: int) -> bool:
        return msg_id in self._msgs

    def __iter__(self):
        return iter(self.ordered())

    @property
    def free_bits(self) -> float:
        return self.capacity - self.used - self.reserved

    def fits(self, size_bits: int) -> bool:
        return size_bits <= self.free_bits

    def add(self, msg: Message) -> None:
        if msg.id in self._msgs:
            raise BufferFullError(f"message {msg.id} already in buffer of {self.owner}")
        if self.used + self.reserved + msg.size_bits > self.capacity:
            raise BufferFullError(f"buffer of {self.owner} full")
        self._msgs[msg.id] = msg
        bisect.insort(self._keys, msg.priority_key)
        self.used += msg.size_bits
        self.peak = max(self.peak, self.used)

    def remove(self, msg_id: int) -> Message:
        msg = self._msgs.pop(msg_id)
        i = bisect.bisect_left(self._keys, msg.priority_key)
        del self._keys[i]
        self.used -= msg.size_bits
        return msg

    def get(self, msg_id: int) -> Message:
        return self._msgs[msg_id]

    def reserve(self, bits: int) -> None:
        if bits > self.free_bits:
            raise BufferFullError(f"cannot reserve {bits} bits at {self.owner}")
        self.reserved += bits

    def release(self, bits: int) -> None:
        self.reserved -= bits

    def messages(self):
        """Unordered view of the held messages."""
        return self._msgs.values()

    def ordered(self) -> List[Message]:
        return [self._msgs[k[2]] for k in self._keys]


class SessionState(enum.Enum):
    OPEN = "Open"
    TRANSFERRING = "Transferring"
    SUSPENDED = "Suspended"
    COMPLETE = "Complete"


@dataclass
class TransferSession:
    session_id: int
    sender: NodeId
    receiver: NodeId
    message: Message
    bits_sent: int = 0
    state: SessionState = SessionState.OPEN
    rate: float = 0.0
    last_update: float = 0.0
    version: int = 0
    resumed_from: int = 0

    @property
    def message_id(self) -> int:
        return self.message.id

    @property
    def remaining_bits(self) -> int:
        return self.message.size_bits - self.bits_sent


def transfer_step(session: TransferSession, dt: float, rate: float) -> TransferSession:
    """Advance ``session`` by ``dt`` seconds at ``rate`` bits/s.

    Bits are whole numbers; a step reaching the message size marks the
    session Complete. Custody hand-over is the caller's job.
    """
    if session.state is SessionState.COMPLETE:
        return session
    if session.state not in (SessionState.OPEN, SessionState.TRANSFERRING):
        raise ValueError(f"cannot step a {session.state.value} session")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    step = min(session.remaining_bits, int(round(rate * dt)))
    session.bits_sent += step
    session.state = SessionState.TRANSFERRING
    if session.bits_sent >= session.message.size_bits:
        session.state = SessionState.COMPLETE
    return session


def suspend(session: TransferSession) -> TransferSession:
    if session.state is SessionState.COMPLETE:
        raise ValueError("completed sessions cannot be suspended")
    session.state = SessionState.SUSPENDED
    return session


def open_sessions(sender: NodeId, receiver: NodeId, sender_buffer: Sequence[Message] | Buffer,
                  receiver_free_bits: float,
                  eligible: Callable[[Message], bool] = lambda m: True,
                  busy: Iterable[int] = (),
                  offsets: Optional[Mapping[int, int]] = None,
                  first_id: int = 0,
                  limit: Optional[int] = None) -> List[TransferSession]:
    """Plan the sessions for one direction of a contact, highest gravity first.

    Messages that do not fit the receiver's remaining space are skipped and
    stay with the sender. ``offsets`` maps message id to bits already sent
    by an earlier, suspended session between the same pair.
    """
    msgs = sender_buffer.ordered() if isinstance(sender_buffer, Buffer) else \
        sorted(sender_buffer, key=lambda m: m.priority_key)
    busy = set(busy)
    offsets = offsets or {}
    free = receiver_free_bits
    out: List[TransferSession] = []
    for msg in msgs:
        if limit is not None and len(out) >= limit:
            break
        if msg.id in busy or not eligible(msg) or msg.size_bits > free:
            continue
        free -= msg.size_bits
        done = offsets.get(msg.id, 0)
        out.append(TransferSession(first_id + len(out), sender, receiver, msg,
                                   bits_sent=done, resumed_from=done))
    return out
