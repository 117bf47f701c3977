"""Deterministic discrete-event scheduler tying mobility, transfers and processing together.

Time is continuous. Contact entry and exit instants are solved analytically
per route segment, so no fixed tick exists anywhere. Ties are broken by the
sequence number handed out at scheduling time.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from .ferry import (Buffer, FerryState, RouteTimeline, SessionState, TransferSession,
                    initial_ferry_state, open_sessions, segment_contact_interval, suspend)
from .model import (CDC, Message, MessageKind, NodeId, Role, SimulationError)
from .processing import (AreaHistory, DpcState, DpcStatus, EmergencyAlert, NetworkPeerSource,
                         PeerSource, cdc_merge, compute_confidence, dcc_decide, dpc_process,
                         emergency_bypass_check, forward_to_cdc, ingest_at_dpc, Action)
from .radio import LinkProfile, effective_rate
from .scenario import ScenarioConfig, ScenarioError, has_errors, validate_scenario
from .workloads import (gen_commerce_orders, gen_learning_push, gen_manual_records,
                        gen_medical_requests, gen_sensor_batch, medical_response, rng_stream,
                        scripted_message)

log = logging.getLogger(__name__)


class EventKind(enum.Enum):
    WORKLOAD_FIRE = "WorkloadFire"
    FERRY_MOVE = "FerryMove"
    CONTACT_BEGIN = "ContactBegin"
    CONTACT_END = "ContactEnd"
    TRANSFER_PROGRESS = "TransferProgress"
    DPC_SERVICE = "DpcService"
    PEER_SYNC_DONE = "PeerSyncDone"
    CDC_ARRIVAL = "CdcArrival"
    DCC_EVALUATE = "DccEvaluate"
    ALERT_DELIVERED = "AlertDelivered"
    METRICS_SAMPLE = "MetricsSample"


@dataclass(order=True)
class Event:
    time: float
    sequence: int
    kind: EventKind = field(compare=False)
    data: Dict[str, Any] = field(compare=False, default_factory=dict)


TO_MAP, TO_SITE = "to_map", "to_site"


@dataclass
class Contact:
    map_id: NodeId
    site: NodeId
    profile: LinkProfile
    began_at: float
    sessions: Dict[str, Optional[TransferSession]] = field(
        default_factory=lambda: {TO_MAP: None, TO_SITE: None})


@dataclass
class Ferry:
    config: Any
    timeline: RouteTimeline
    state: FerryState
    route_kiosks: frozenset
    segment: int = 0
    segment_start: float = 0.0


def _fmt(node) -> str:
    return str(node)


class Simulation:
    """One run of a scenario up to (but excluding) ``until`` seconds."""

    def __init__(self, cfg: ScenarioConfig, until: float, *, seed: Optional[int] = None,
                 peer_source: Optional[PeerSource] = None, event_log: bool = True,
                 check_invariants: bool = False, sample_interval_s: Optional[float] = None):
        findings = validate_scenario(cfg)
        if has_errors(findings):
            raise ScenarioError([f for f in findings if f.severity.value == "error"])
        if until < 0 or math.isnan(until):
            raise ValueError("until must be non-negative")
        self.cfg = cfg
        self.until = float(until)
        self.seed = cfg.seed if seed is None else int(seed)
        self.findings = findings
        self.keep_log = event_log
        self.check_invariants = check_invariants
        self.sample_interval_s = sample_interval_s
        self.now = 0.0

        self._heap: List[Event] = []
        self._seq = itertools.count()
        self.new_id = itertools.count(1).__next__
        self._session_ids = itertools.count(1)
        self.events_executed = 0
        self.event_log: List[Dict[str, Any]] = []

        self.positions = cfg.positions()
        self.kiosks: Dict[NodeId, Buffer] = {
            k: Buffer(k, c.buffer_bits) for k, c in zip(cfg.kiosk_ids(), cfg.kiosks)}
        self.kiosk_cfg = dict(zip(cfg.kiosk_ids(), cfg.kiosks))
        self.dpc_cfg = dict(zip(cfg.dpc_ids(), cfg.dpcs))
        self.dpcs: Dict[NodeId, DpcState] = {
            d: DpcState(d, c.position, c.params, c.peers, c.inbox_bits)
            for d, c in self.dpc_cfg.items()}
        self.hospital_dpc: Dict[NodeId, NodeId] = {
            h: c.dpc for h, c in zip(cfg.hospital_ids(), cfg.hospitals)}
        self.ferries: Dict[NodeId, Ferry] = {}
        for m, mc in zip(cfg.map_ids(), cfg.maps):
            buf = Buffer(m, mc.buffer_bits)
            self.ferries[m] = Ferry(
                mc, RouteTimeline(mc.route, self.positions, mc.speed_kmh),
                initial_ferry_state(m, mc.route, self.positions, buf),
                frozenset(n for n in mc.route.nodes if n.role is Role.KIOSK))
        self.sites = sorted(self.positions)
        self.peer_source = peer_source or NetworkPeerSource(self.dpcs)
        self.history = AreaHistory()

        # accounting
        self.messages: Dict[int, Message] = {}
        self.custody: Dict[int, str] = {}
        self.attempted: Counter = Counter()
        self.delivered: Counter = Counter()
        self.blocked: Counter = Counter()
        self.delivered_at: Dict[int, float] = {}
        self.cdc_arrival: Dict[int, float] = {}
        self.alerts: Dict[int, EmergencyAlert] = {}
        self.decisions = []
        self.dcc_evaluations = 0
        self.retry_histogram: Counter = Counter()
        self.flagged = 0
        self.round_trips: Dict[int, Dict[str, Any]] = {}
        self._response_of: Dict[int, int] = {}
        self.samples: List[Dict[str, Any]] = []

        # contacts and transfers
        self.contacts: Dict[Tuple[NodeId, NodeId], Contact] = {}
        self._predicted: Dict[NodeId, Set[NodeId]] = {m: set() for m in self.ferries}
        self.site_sessions: Dict[NodeId, List[Tuple[TransferSession, Contact, str]]] = defaultdict(list)
        self.sessions: Dict[int, Tuple[TransferSession, Contact, str]] = {}
        self.partials: Dict[int, Dict[Tuple[NodeId, NodeId], int]] = {}
        self.in_transfer: Set[int] = set()
        self.transfer_log: List[Dict[str, Any]] = []

        self._rngs: Dict[str, Any] = {}
        self._buffers: Optional[List[Buffer]] = None
        self._schedule_initial()

    # ------------------------------------------------------------------ queue

    def schedule(self, t: float, kind: EventKind, **data) -> Event:
        if not t >= self.now:
            raise SimulationError(f"causality: {kind.value} scheduled at {t} before now={self.now}")
        ev = Event(float(t), next(self._seq), kind, data)
        heapq.heappush(self._heap, ev)
        return ev

    def rng(self, key: str):
        if key not in self._rngs:
            self._rngs[key] = rng_stream(self.seed, key)
        return self._rngs[key]

    def _schedule_initial(self) -> None:
        for m in sorted(self.ferries):
            self.schedule(0.0, EventKind.FERRY_MOVE, map=m, segment=0)
        w = self.cfg.workloads
        for i, f in enumerate(w.sensor_fields):
            self.schedule(f.start_s, EventKind.WORKLOAD_FIRE, gen="sensor", field=i, sample=0)
        if (w.manual_records.rate_per_hour > 0 or w.commerce.rate_per_hour > 0
                or w.medical.rate_per_hour > 0):
            self.schedule(0.0, EventKind.WORKLOAD_FIRE, gen="window")
        for i, lp in enumerate(w.learning):
            for t in sorted(lp.at_s):
                self.schedule(t, EventKind.WORKLOAD_FIRE, gen="learning", push=i)
        for i, s in enumerate(w.scripted):
            self.schedule(s.at_s, EventKind.WORKLOAD_FIRE, gen="scripted", index=i)
        if self.sample_interval_s:
            self.schedule(0.0, EventKind.METRICS_SAMPLE)

    # ------------------------------------------------------------------ main loop

    def run(self):
        from .metrics import collect_metrics
        handlers = {
            EventKind.WORKLOAD_FIRE: self._on_workload,
            EventKind.FERRY_MOVE: self._on_ferry_move,
            EventKind.CONTACT_BEGIN: self._on_contact_begin,
            EventKind.CONTACT_END: self._on_contact_end,
            EventKind.TRANSFER_PROGRESS: self._on_transfer_done,
            EventKind.DPC_SERVICE: self._on_dpc_service,
            EventKind.PEER_SYNC_DONE: self._on_peer_sync,
            EventKind.CDC_ARRIVAL: self._on_cdc_arrival,
            EventKind.DCC_EVALUATE: self._on_dcc_evaluate,
            EventKind.ALERT_DELIVERED: self._on_alert_delivered,
            EventKind.METRICS_SAMPLE: self._on_sample,
        }
        while self._heap and self._heap[0].time < self.until:
            ev = heapq.heappop(self._heap)
            if ev.time < self.now:
                raise SimulationError(f"event queue went backwards at {ev.time} < {self.now}")
            self.now = ev.time
            details = handlers[ev.kind](ev)
            if details is None:  # stale event
                continue
            self.events_executed += 1
            if self.keep_log:
                entry = {"t": ev.time, "seq": ev.sequence, "kind": ev.kind.value}
                entry.update(details)
                self.event_log.append(entry)
            if self.check_invariants:
                self.check()
        return collect_metrics(self)

    # ------------------------------------------------------------------ helpers

    def profile(self, map_id: NodeId, site: NodeId) -> LinkProfile:
        """Site override first (the standard is chosen per area), then MAP, then default."""
        site_cfg = self.kiosk_cfg.get(site) or self.dpc_cfg.get(site)
        if site_cfg is not None and site_cfg.radio is not None:
            return site_cfg.radio
        mc = self.ferries[map_id].config
        if mc.radio is not None:
            return mc.radio
        return self.cfg.radio.profile

    def ferry_position(self, map_id: NodeId, t: Optional[float] = None):
        return self.ferries[map_id].timeline.position_at(self.now if t is None else t)

    def _register(self, msg: Message, where: str) -> None:
        self.attempted[msg.kind] += 1
        self.messages[msg.id] = msg
        self.custody[msg.id] = where

    def _move(self, msg: Message, where: str) -> None:
        if msg.id not in self.custody:
            raise SimulationError(f"message {msg.id} has no custodian")
        self.custody[msg.id] = where

    def _deliver(self, msg: Message) -> None:
        if self.custody.pop(msg.id, None) is None:
            raise SimulationError(f"message {msg.id} delivered twice or never admitted")
        self.delivered[msg.kind] += 1
        self.delivered_at[msg.id] = self.now
        self.partials.pop(msg.id, None)
        if msg.id in self._response_of:
            self.round_trips[self._response_of[msg.id]]["completed_at"] = self.now

    def _bypass(self, msg: Message, location: NodeId) -> None:
        alert = emergency_bypass_check(msg, self.cfg.gravity_threshold, location, self.now,
                                       self.alerts, self.new_id, self.cfg.radio.bypass_latency_s)
        if alert is None:
            return
        self._register(alert.message, "direct-call")
        self.schedule(alert.due_at, EventKind.ALERT_DELIVERED, source=msg.id)
        log.debug("alert for message %d raised at %s t=%.3f", msg.id, location, self.now)

    def _admit_at_kiosk(self, msg: Message) -> Dict[str, Any]:
        buf = self.kiosks[msg.origin]
        if not buf.fits(msg.size_bits):
            self.attempted[msg.kind] += 1
            self.blocked[msg.kind] += 1
            return {"message": msg.id, "blocked": True}
        self._register(msg, _fmt(msg.origin))
        buf.add(msg)
        if msg.kind is MessageKind.MEDICAL_REQUEST:
            self.round_trips[msg.id] = {"created_at": msg.created_at, "kiosk": msg.origin}
        self._pump_site(msg.origin)
        return {"message": msg.id, "node": _fmt(msg.origin)}

    # ------------------------------------------------------------------ workloads

    def _on_workload(self, ev: Event):
        d = ev.data
        gen = d["gen"]
        w = self.cfg.workloads
        if gen == "sensor":
            f = w.sensor_fields[d["field"]]
            msg = gen_sensor_batch(f, self.now, self.rng(f"sensor:{d['field']}"), self.new_id)
            out = self._admit_at_kiosk(msg)
            n = d["sample"] + 1
            if f.max_samples is None or n < f.max_samples:
                self.schedule(self.now + f.sampling_period_s, EventKind.WORKLOAD_FIRE,
                              gen="sensor", field=d["field"], sample=n)
            return {"gen": "sensor", **out}
        if gen == "window":
            return self._arrival_window()
        if gen == "arrive":
            return {"gen": d["source"], **self._admit_at_kiosk(d["msg"])}
        if gen == "learning":
            lp = w.learning[d["push"]]
            dpc = self.dpcs[lp.dpc]
            ids = []
            for msg in gen_learning_push(lp.dpc, lp, self.now, self.new_id):
                self._register(msg, f"{lp.dpc}/outbound")
                dpc.outbound.add(msg)
                ids.append(msg.id)
            self._pump_site(lp.dpc)
            return {"gen": "learning", "node": _fmt(lp.dpc), "messages": ids}
        if gen == "scripted":
            msg = scripted_message(w.scripted[d["index"]], self.new_id, self._default_hospital())
            return {"gen": "scripted", **self._admit_at_kiosk(msg)}
        if gen == "response":
            return self._create_response(d["request"], d["hospital"])
        raise SimulationError(f"unknown workload generator {gen!r}")

    def _default_hospital(self) -> Optional[NodeId]:
        med = self.cfg.workloads.medical
        if med.hospital is not None:
            return med.hospital
        return min(self.hospital_dpc) if self.hospital_dpc else None

    def _arrival_window(self):
        w = self.cfg.workloads
        span = w.arrival_window_s
        pending: List[Tuple[float, str, Message]] = []
        for k in sorted(self.kiosks):
            if w.manual_records.rate_per_hour > 0 and (w.manual_records.kiosks is None
                                                      or k in w.manual_records.kiosks):
                for m in gen_manual_records(k, w.manual_records, self.now, self.rng(f"manual:{k}"),
                                            span, self.new_id):
                    pending.append((m.created_at, "manual", m))
            if w.commerce.rate_per_hour > 0 and (w.commerce.kiosks is None or k in w.commerce.kiosks):
                for m in gen_commerce_orders(k, w.commerce, self.now, self.rng(f"commerce:{k}"),
                                             span, self.new_id):
                    pending.append((m.created_at, "commerce", m))
            if w.medical.rate_per_hour > 0 and (w.medical.kiosks is None or k in w.medical.kiosks):
                for m in gen_medical_requests(k, self._default_hospital(), w.medical, self.now,
                                              self.rng(f"medical:{k}"), span, self.new_id):
                    pending.append((m.created_at, "medical", m))
        for t, source, m in pending:
            self.schedule(t, EventKind.WORKLOAD_FIRE, gen="arrive", source=source, msg=m)
        self.schedule(self.now + span, EventKind.WORKLOAD_FIRE, gen="window")
        return {"gen": "window", "generated": len(pending)}

    def _create_response(self, request_id: int, hosp: NodeId):
        req = self.messages[request_id]
        dpc_id = self.hospital_dpc[hosp]
        resp = medical_response(req, hosp, self.cfg.workloads.medical, self.now, self.new_id)
        resp.add_hop(dpc_id, self.now)
        self._register(resp, f"{dpc_id}/outbound")
        self.dpcs[dpc_id].outbound.add(resp)
        self.round_trips[request_id]["response"] = resp.id
        self._response_of[resp.id] = request_id
        self._pump_site(dpc_id)
        return {"gen": "response", "message": resp.id, "request": request_id,
                "node": _fmt(dpc_id)}

    # ------------------------------------------------------------------ mobility

    def _on_ferry_move(self, ev: Event):
        m = ev.data["map"]
        idx = ev.data["segment"]
        fr = self.ferries[m]
        seg = fr.timeline.segments[idx]
        fr.segment, fr.segment_start = idx, self.now
        predicted = self._predicted[m]
        for site in self.sites:
            prof = self.profile(m, site)
            iv = segment_contact_interval(seg, self.positions[site], prof.range_km)
            active = site in predicted
            if iv is None:
                if active:
                    self.schedule(self.now, EventKind.CONTACT_END, map=m, site=site)
                    predicted.discard(site)
                continue
            a, b = iv
            if active and a > 0:
                self.schedule(self.now, EventKind.CONTACT_END, map=m, site=site)
                active = False
                predicted.discard(site)
            if not active:
                if a == b and b < seg.duration:
                    continue  # tangent touch, zero-length contact
                self.schedule(self.now + a, EventKind.CONTACT_BEGIN, map=m, site=site)
                predicted.add(site)
            if b < seg.duration:
                self.schedule(self.now + b, EventKind.CONTACT_END, map=m, site=site)
                predicted.discard(site)
        if math.isfinite(seg.duration):
            nxt = (idx + 1) % len(fr.timeline.segments)
            self.schedule(self.now + seg.duration, EventKind.FERRY_MOVE, map=m, segment=nxt)
        pos = seg.start
        return {"map": _fmt(m), "segment": idx, "moving": seg.moving,
                "x_km": pos.x_km, "y_km": pos.y_km}

    def _on_contact_begin(self, ev: Event):
        m, site = ev.data["map"], ev.data["site"]
        key = (m, site)
        if key in self.contacts:
            raise SimulationError(f"contact {m}-{site} began twice")
        self.contacts[key] = Contact(m, site, self.profile(m, site), self.now)
        self._pump(self.contacts[key])
        return {"map": _fmt(m), "site": _fmt(site)}

    def _on_contact_end(self, ev: Event):
        m, site = ev.data["map"], ev.data["site"]
        c = self.contacts.pop((m, site), None)
        if c is None:
            raise SimulationError(f"contact {m}-{site} ended without beginning")
        suspended = []
        for direction, s in c.sessions.items():
            if s is None:
                continue
            self._settle(s)
            suspend(s)
            self._close_session(s, c, direction, "suspended")
            self.partials.setdefault(s.message.id, {})[(s.sender, s.receiver)] = s.bits_sent
            suspended.append(s.message.id)
        self._rebalance(site)
        return {"map": _fmt(m), "site": _fmt(site), "suspended": suspended}

    # ------------------------------------------------------------------ transfers

    def _direction_rules(self, c: Contact, direction: str):
        """(sender, receiver, sender buffer, receiver buffer or None, eligibility)."""
        fr = self.ferries[c.map_id]
        mbuf = fr.state.buffer
        if c.site.role is Role.KIOSK:
            if direction == TO_MAP:
                return c.site, c.map_id, self.kiosks[c.site], mbuf, lambda msg: True
            return c.map_id, c.site, mbuf, None, lambda msg: msg.destination == c.site
        dpc = self.dpcs[c.site]
        if direction == TO_MAP:
            return (c.site, c.map_id, dpc.outbound, mbuf,
                    lambda msg: msg.destination in fr.route_kiosks)
        return (c.map_id, c.site, mbuf, dpc.inbox,
                lambda msg: msg.final_role in (Role.DPC, Role.HOSPITAL))

    def _pump(self, c: Contact) -> None:
        opened = False
        for direction in (TO_MAP, TO_SITE):
            if c.sessions[direction] is not None:
                continue
            sender, receiver, sbuf, rbuf, ok = self._direction_rules(c, direction)
            if not len(sbuf):
                continue
            free = rbuf.free_bits if rbuf is not None else math.inf
            offsets = {mid: p[(sender, receiver)] for mid, p in self.partials.items()
                       if (sender, receiver) in p}
            plan = open_sessions(sender, receiver, sbuf, free, ok, self.in_transfer, offsets,
                                 next(self._session_ids), limit=1)
            if not plan:
                continue
            s = plan[0]
            if rbuf is not None:
                rbuf.reserve(s.message.size_bits)
            s.state = SessionState.TRANSFERRING
            s.last_update = self.now
            c.sessions[direction] = s
            self.in_transfer.add(s.message.id)
            entry = (s, c, direction)
            self.site_sessions[c.site].append(entry)
            self.sessions[s.session_id] = entry
            opened = True
        if opened:
            self._rebalance(c.site)

    def _pump_site(self, node: NodeId) -> None:
        """Retry idle contact directions touching ``node`` after its buffers changed."""
        if node.role is Role.MAP:
            keys = [k for k in self.contacts if k[0] == node]
        else:
            keys = [k for k in self.contacts if k[1] == node]
        for k in sorted(keys):
            c = self.contacts.get(k)
            if c is not None:
                self._pump(c)

    def _settle(self, s: TransferSession) -> None:
        dt = self.now - s.last_update
        if dt > 0 and s.rate > 0:
            s.bits_sent = min(s.message.size_bits, s.bits_sent + int(round(s.rate * dt)))
        s.last_update = self.now

    def _rebalance(self, site: NodeId) -> None:
        """Re-share the site's channels after its session set changed."""
        entries = self.site_sessions.get(site, [])
        k = len(entries)
        for s, c, _ in entries:
            self._settle(s)
            s.rate = effective_rate(c.profile, k)
            s.version += 1
            eta = self.now + s.remaining_bits / s.rate
            self.schedule(eta, EventKind.TRANSFER_PROGRESS, session=s.session_id,
                          version=s.version)

    def _close_session(self, s: TransferSession, c: Contact, direction: str, outcome: str) -> None:
        c.sessions[direction] = None
        self.site_sessions[c.site].remove((s, c, direction))
        del self.sessions[s.session_id]
        self.in_transfer.discard(s.message.id)
        if s.receiver.role is not Role.KIOSK:
            self._receiver_buffer(s.receiver).release(s.message.size_bits)
        self.transfer_log.append({
            "session": s.session_id, "message": s.message.id, "from": s.sender, "to": s.receiver,
            "start_bits": s.resumed_from, "end_bits": s.bits_sent, "closed_at": self.now,
            "outcome": outcome})

    def _receiver_buffer(self, node: NodeId) -> Buffer:
        if node.role is Role.MAP:
            return self.ferries[node].state.buffer
        if node.role is Role.DPC:
            return self.dpcs[node].inbox
        return self.kiosks[node]

    def _sender_buffer(self, node: NodeId) -> Buffer:
        if node.role is Role.MAP:
            return self.ferries[node].state.buffer
        if node.role is Role.DPC:
            return self.dpcs[node].outbound
        return self.kiosks[node]

    def _on_transfer_done(self, ev: Event):
        entry = self.sessions.get(ev.data["session"])
        if entry is None or entry[0].version != ev.data["version"]:
            return None
        s, c, direction = entry
        s.bits_sent = s.message.size_bits
        s.last_update = self.now
        s.state = SessionState.COMPLETE
        self._close_session(s, c, direction, "complete")
        msg = self._sender_buffer(s.sender).remove(s.message.id)
        self.partials.pop(msg.id, None)
        msg.add_hop(s.receiver, self.now)
        self._take_custody(msg, s.receiver)
        self._rebalance(c.site)
        self._pump(c)
        self._pump_site(s.sender)
        self._pump_site(s.receiver)
        return {"session": s.session_id, "message": msg.id, "from": _fmt(s.sender),
                "to": _fmt(s.receiver), "bits": msg.size_bits}

    def _take_custody(self, msg: Message, node: NodeId) -> None:
        if node.role is Role.MAP:
            self.ferries[node].state.buffer.add(msg)
            self._move(msg, _fmt(node))
            self._bypass(msg, node)
        elif node.role is Role.KIOSK:
            self._deliver(msg)
        elif node.role is Role.DPC:
            self._bypass(msg, node)
            if msg.final_role is Role.HOSPITAL:
                self._route_to_hospital(msg, node)
            else:
                ingest_at_dpc(self.dpcs[node], msg, self.now)
                self._move(msg, f"{node}/inbox")
                self._dpc_kick(node)
        else:
            raise SimulationError(f"{node} cannot take custody")

    def _route_to_hospital(self, msg: Message, at_dpc: NodeId) -> None:
        hosp = msg.destination
        home = self.hospital_dpc[hosp]
        if home == at_dpc:
            self._hand_to_hospital(msg, hosp)
            return
        self._move(msg, f"link:{at_dpc}->{home}")
        delay = self.dpcs[at_dpc].params.peer_sync_delay_s
        self.schedule(self.now + delay, EventKind.PEER_SYNC_DONE, purpose="relay", message=msg.id,
                      dpc=home)

    def _hand_to_hospital(self, msg: Message, hosp: NodeId) -> None:
        msg.add_hop(hosp, self.now)
        self._deliver(msg)
        svc = self.cfg.workloads.medical.service_time_s
        self.schedule(self.now + svc, EventKind.WORKLOAD_FIRE, gen="response", request=msg.id,
                      hospital=hosp)

    # ------------------------------------------------------------------ DPC pipeline

    def _dpc_kick(self, node: NodeId) -> None:
        dpc = self.dpcs[node]
        if dpc.busy is not None or not dpc.queue:
            return
        mid = dpc.queue.popleft()
        rec = dpc.records[mid]
        rec.status = DpcStatus.PROCESSING
        dpc.busy = mid
        self.schedule(self.now + dpc.params.service_time_s, EventKind.DPC_SERVICE, dpc=node,
                      message=mid)

    def _on_dpc_service(self, ev: Event):
        node, mid = ev.data["dpc"], ev.data["message"]
        dpc = self.dpcs[node]
        rec = dpc.records[mid]
        peers = list(self.peer_source(rec, dpc, rec.retries))
        rec.confidence = compute_confidence(rec, peers, dpc.params.tolerance)
        rec.scores.append(rec.confidence)
        status = dpc_process(rec, dpc.params.confidence_threshold, dpc.params.retry_limit)
        dpc.busy = None
        out = {"dpc": _fmt(node), "message": mid, "confidence": rec.confidence,
               "peers": len(peers), "retries": rec.retries, "status": status.value}
        if status is DpcStatus.QUEUED:
            self.schedule(self.now + dpc.params.peer_sync_delay_s, EventKind.PEER_SYNC_DONE,
                          purpose="resync", dpc=node, message=mid)
        else:
            rec.finished_at = self.now
            msg = dpc.inbox.remove(mid)
            self._deliver(msg)
            self.retry_histogram[rec.retries] += 1
            self.flagged += rec.flagged
            arrival = forward_to_cdc(dpc, rec, self.now, self.cfg.cdc.backhaul_delay_s)
            self.schedule(arrival, EventKind.CDC_ARRIVAL, dpc=node, message=mid)
        self._dpc_kick(node)
        self._pump_site(node)
        return out

    def _on_peer_sync(self, ev: Event):
        d = ev.data
        node = d["dpc"]
        if d["purpose"] == "relay":
            msg = self.messages[d["message"]]
            msg.add_hop(node, self.now)
            self._hand_to_hospital(msg, msg.destination)
            return {"purpose": "relay", "dpc": _fmt(node), "message": msg.id}
        dpc = self.dpcs[node]
        dpc.queue.append(d["message"])
        self._dpc_kick(node)
        return {"purpose": "resync", "dpc": _fmt(node), "message": d["message"]}

    # ------------------------------------------------------------------ CDC / DCC / alerts

    def _on_cdc_arrival(self, ev: Event):
        node, mid = ev.data["dpc"], ev.data["message"]
        rec = self.dpcs[node].records[mid]
        rec.message.add_hop(CDC, self.now)
        self.cdc_arrival[mid] = self.now
        _, report = cdc_merge(self.history, rec, self.now, self.cfg.cdc.report_window_s)
        self.schedule(self.now, EventKind.DCC_EVALUATE, report=report)
        return {"message": mid, "dpc": _fmt(node), "area": _fmt(report.area),
                "flagged": rec.flagged}

    def _on_dcc_evaluate(self, ev: Event):
        report = ev.data["report"]
        decision = dcc_decide(report, self.cfg.dcc.rules)
        self.dcc_evaluations += 1
        if decision.action is not Action.NO_ACTION:
            self.decisions.append(decision)
        return {"area": _fmt(report.area), "action": decision.label}

    def _on_alert_delivered(self, ev: Event):
        alert = self.alerts[ev.data["source"]]
        alert.delivered_at = self.now
        if not math.isclose(alert.delivered_at - alert.raised_at, self.cfg.radio.bypass_latency_s,
                            rel_tol=1e-12, abs_tol=1e-9):
            raise SimulationError("alert latency differs from the direct-call latency")
        alert.message.add_hop(alert.message.destination, self.now)
        self._deliver(alert.message)
        return {"source": alert.source_message_id, "alert": alert.message.id,
                "raised_at_node": _fmt(alert.raised_at_node)}

    def _on_sample(self, ev: Event):
        occ = {str(k): b.used for k, b in sorted(self.kiosks.items())}
        occ.update({str(m): f.state.buffer.used for m, f in sorted(self.ferries.items())})
        occ.update({str(d): s.inbox.used + s.outbound.used for d, s in sorted(self.dpcs.items())})
        self.samples.append({"t": self.now, "occupancy": occ})
        self.schedule(self.now + self.sample_interval_s, EventKind.METRICS_SAMPLE)
        return {"occupancy": occ}

    # ------------------------------------------------------------------ invariants

    def buffers(self) -> List[Buffer]:
        if self._buffers is None:
            out = [self.kiosks[k] for k in sorted(self.kiosks)]
            out += [self.ferries[m].state.buffer for m in sorted(self.ferries)]
            for d in sorted(self.dpcs):
                out += [self.dpcs[d].inbox, self.dpcs[d].outbound]
            self._buffers = out
        return self._buffers

    def check(self) -> None:
        """Full consistency scan; raises SimulationError on the first violation.

        Hop time order is enforced by Message.add_hop and not rescanned here.
        """
        seen: Dict[int, NodeId] = {}
        custody = self.custody
        for buf in self.buffers():
            total = 0
            for msg in buf.messages():
                mid = msg.id
                if mid in seen:
                    raise SimulationError(
                        f"message {mid} held by both {seen[mid]} and {buf.owner}")
                seen[mid] = buf.owner
                total += msg.size_bits
                if mid not in custody:
                    raise SimulationError(f"message {mid} buffered at {buf.owner} but delivered")
            if total != buf.used or buf.used + buf.reserved > buf.capacity or buf.reserved < 0:
                raise SimulationError(f"buffer accounting broken at {buf.owner}")
        for mid in self.in_transfer:
            if mid not in seen:
                raise SimulationError(f"message {mid} in transfer but not buffered")
        live = sum(self.attempted.values()) - sum(self.delivered.values()) - sum(self.blocked.values())
        if live != len(custody):
            raise SimulationError(f"conservation: {live} live messages but {len(custody)} held")


def run(cfg: ScenarioConfig, until: float, **kwargs):
    """Run ``cfg`` for ``until`` simulated seconds and return the RunReport."""
    return Simulation(cfg, until, **kwargs).run()
