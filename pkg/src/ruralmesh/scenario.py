"""Scenario files: JSON parsing into ScenarioConfig and validation findings.

Parsing is split from validation on purpose. ``parse_scenario`` only fails
(ScenarioParseError) on input it cannot interpret at all: bad JSON, wrong
types, malformed node references. Everything else, including unknown keys
and out-of-range values, is recorded and reported by ``validate_scenario``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .ferry import Route, Waypoint, build_segments
from .model import Finding, GeoPoint, MessageKind, NodeId, Role, Severity
from .processing import (DEFAULT_BACKHAUL_DELAY_S, DEFAULT_BYPASS_LATENCY_S,
                         DEFAULT_REPORT_WINDOW_S, DEFAULT_RULES, DpcParams, Rule)
from .radio import DEFAULT_EFFICIENCY, LinkProfile, RadioStandard
from .workloads import (LearningPush, MedicalSpec, PoissonSpec, ScriptedMessage,
                        SensorFieldModel, WorkloadSpec, SCRIPTABLE_KINDS)

DEFAULT_BUFFER_BITS = 10**9
DEFAULT_DPC_INBOX_BITS = 10**10
DEFAULT_GRAVITY_THRESHOLD = 0.8

TOP_LEVEL_KEYS = ("kiosks", "maps", "dpcs", "cdc", "dcc", "hospitals", "radio", "workloads",
                  "gravity_threshold", "seed", "strict_counts")


class ScenarioParseError(Exception):
    """The scenario document cannot be interpreted at all."""


class ScenarioError(ValueError):
    """A scenario with Error findings was handed to the simulator."""

    def __init__(self, findings: Sequence[Finding]):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings))


@dataclass(frozen=True)
class KioskConfig:
    position: GeoPoint
    buffer_bits: float = DEFAULT_BUFFER_BITS
    radio: Optional[LinkProfile] = None


@dataclass(frozen=True)
class MapConfig:
    route: Route
    speed_kmh: float = 25.0
    buffer_bits: float = DEFAULT_BUFFER_BITS
    radio: Optional[LinkProfile] = None


@dataclass(frozen=True)
class DpcConfig:
    position: GeoPoint
    params: DpcParams = DpcParams()
    peers: Tuple[NodeId, ...] = ()
    inbox_bits: float = DEFAULT_DPC_INBOX_BITS
    radio: Optional[LinkProfile] = None


@dataclass(frozen=True)
class CdcConfig:
    backhaul_delay_s: float = DEFAULT_BACKHAUL_DELAY_S
    report_window_s: float = DEFAULT_REPORT_WINDOW_S


@dataclass(frozen=True)
class DccConfig:
    rules: Tuple[Rule, ...] = DEFAULT_RULES


@dataclass(frozen=True)
class HospitalConfig:
    dpc: NodeId


@dataclass(frozen=True)
class RadioConfig:
    profile: LinkProfile = LinkProfile()
    bypass_latency_s: float = DEFAULT_BYPASS_LATENCY_S


@dataclass(frozen=True)
class ScenarioConfig:
    kiosks: Tuple[KioskConfig, ...]
    maps: Tuple[MapConfig, ...]
    dpcs: Tuple[DpcConfig, ...]
    cdc: CdcConfig = CdcConfig()
    dcc: DccConfig = DccConfig()
    hospitals: Tuple[HospitalConfig, ...] = ()
    radio: RadioConfig = RadioConfig()
    workloads: WorkloadSpec = WorkloadSpec()
    gravity_threshold: float = DEFAULT_GRAVITY_THRESHOLD
    seed: int = 0
    strict_counts: bool = True
    # (path, message) pairs noticed while parsing; surfaced as Error findings
    problems: Tuple[Tuple[str, str], ...] = field(default=(), compare=False)

    def kiosk_ids(self) -> List[NodeId]:
        return [NodeId(Role.KIOSK, i + 1) for i in range(len(self.kiosks))]

    def map_ids(self) -> List[NodeId]:
        return [NodeId(Role.MAP, i + 1) for i in range(len(self.maps))]

    def dpc_ids(self) -> List[NodeId]:
        return [NodeId(Role.DPC, i + 1) for i in range(len(self.dpcs))]

    def hospital_ids(self) -> List[NodeId]:
        return [NodeId(Role.HOSPITAL, i + 1) for i in range(len(self.hospitals))]

    def positions(self) -> Dict[NodeId, GeoPoint]:
        pos = {k: c.position for k, c in zip(self.kiosk_ids(), self.kiosks)}
        pos.update({d: c.position for d, c in zip(self.dpc_ids(), self.dpcs)})
        return pos


# --------------------------------------------------------------------------
# parsing

class _Parser:
    def __init__(self):
        self.problems: List[Tuple[str, str]] = []

    def obj(self, value, path) -> Dict[str, Any]:
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise ScenarioParseError(f"{path}: expected an object")
        return value

    def keys(self, d: Dict[str, Any], allowed: Sequence[str], path: str) -> None:
        for k in d:
            if k not in allowed:
                self.problems.append((f"{path}.{k}" if path else k, "unknown key"))

    def num(self, d, key, default, path, integer=False):
        if key not in d or d[key] is None:
            if default is _REQUIRED:
                raise ScenarioParseError(f"{path}.{key}: required")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScenarioParseError(f"{path}.{key}: expected a number, got {v!r}")
        if integer:
            if isinstance(v, float) and not v.is_integer():
                raise ScenarioParseError(f"{path}.{key}: expected an integer")
            return int(v)
        return float(v) if isinstance(v, float) else v

    def boolean(self, d, key, default, path):
        v = d.get(key, default)
        if not isinstance(v, bool):
            raise ScenarioParseError(f"{path}.{key}: expected true/false")
        return v

    def node(self, v, path) -> NodeId:
        try:
            return NodeId.parse(v)
        except ValueError as e:
            raise ScenarioParseError(f"{path}: {e}") from None

    def nodes(self, v, path) -> Tuple[NodeId, ...]:
        if not isinstance(v, list):
            raise ScenarioParseError(f"{path}: expected a list")
        return tuple(self.node(x, f"{path}[{i}]") for i, x in enumerate(v))

    def array(self, d, key, path) -> list:
        v = d.get(key, [])
        if v is None:
            return []
        if not isinstance(v, list):
            raise ScenarioParseError(f"{path}.{key}: expected a list")
        return v

    def point(self, d, path) -> GeoPoint:
        x = self.num(d, "x_km", _REQUIRED, path)
        y = self.num(d, "y_km", _REQUIRED, path)
        try:
            return GeoPoint(x, y)
        except ValueError as e:
            raise ScenarioParseError(f"{path}: {e}") from None

    def radio(self, v, path, allow_bypass=False, default=None):
        if v is None:
            return default, None
        d = self.obj(v, path)
        allowed = ["standard", "range_km", "efficiency"] + (["bypass_latency_s"] if allow_bypass else [])
        self.keys(d, allowed, path)
        label = d.get("standard", "802.11b")
        try:
            std = RadioStandard.from_label(label)
        except ValueError as e:
            self.problems.append((f"{path}.standard", str(e)))
            std = RadioStandard.DOT11B
        rng = self.num(d, "range_km", None, path)
        eff = self.num(d, "efficiency", DEFAULT_EFFICIENCY, path)
        bypass = self.num(d, "bypass_latency_s", DEFAULT_BYPASS_LATENCY_S, path)
        try:
            prof = LinkProfile(std, rng, eff)
        except ValueError as e:
            self.problems.append((path, str(e)))
            prof = LinkProfile(std)
        return prof, bypass


_REQUIRED = object()


def parse_scenario(data: Dict[str, Any]) -> ScenarioConfig:
    """Build a ScenarioConfig from the decoded JSON document."""
    p = _Parser()
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario must be a JSON object")
    p.keys(data, TOP_LEVEL_KEYS, "")

    kiosks = []
    for i, k in enumerate(p.array(data, "kiosks", "")):
        path = f"kiosks[{i}]"
        k = p.obj(k, path)
        p.keys(k, ("x_km", "y_km", "buffer_bits", "radio"), path)
        kiosks.append(KioskConfig(p.point(k, path),
                                  p.num(k, "buffer_bits", DEFAULT_BUFFER_BITS, path),
                                  p.radio(k.get("radio"), f"{path}.radio")[0]))

    maps = []
    for i, m in enumerate(p.array(data, "maps", "")):
        path = f"maps[{i}]"
        m = p.obj(m, path)
        p.keys(m, ("route", "buffer_bits", "radio"), path)
        r = p.obj(m.get("route"), f"{path}.route")
        p.keys(r, ("waypoints", "cyclic", "speed_kmh"), f"{path}.route")
        wps = []
        for j, w in enumerate(p.array(r, "waypoints", f"{path}.route")):
            wpath = f"{path}.route.waypoints[{j}]"
            w = p.obj(w, wpath)
            p.keys(w, ("node", "dwell_s"), wpath)
            if "node" not in w:
                raise ScenarioParseError(f"{wpath}.node: required")
            wps.append(Waypoint(p.node(w["node"], f"{wpath}.node"), p.num(w, "dwell_s", 0.0, wpath)))
        maps.append(MapConfig(Route(tuple(wps), p.boolean(r, "cyclic", True, f"{path}.route")),
                              p.num(r, "speed_kmh", 25.0, f"{path}.route"),
                              p.num(m, "buffer_bits", DEFAULT_BUFFER_BITS, path),
                              p.radio(m.get("radio"), f"{path}.radio")[0]))

    dpcs = []
    for i, d in enumerate(p.array(data, "dpcs", "")):
        path = f"dpcs[{i}]"
        d = p.obj(d, path)
        p.keys(d, ("x_km", "y_km", "confidence_threshold", "retry_limit", "peers", "inbox_bits",
                   "service_time_s", "peer_sync_delay_s", "tolerance", "peer_window_s", "radio"),
               path)
        params = DpcParams(
            confidence_threshold=p.num(d, "confidence_threshold", 0.8, path),
            retry_limit=p.num(d, "retry_limit", 2, path, integer=True),
            tolerance=p.num(d, "tolerance", 0.05, path),
            service_time_s=p.num(d, "service_time_s", 1.0, path),
            peer_sync_delay_s=p.num(d, "peer_sync_delay_s", 30.0, path),
            peer_window_s=p.num(d, "peer_window_s", 3600.0, path))
        dpcs.append(DpcConfig(p.point(d, path), params, p.nodes(d.get("peers", []), f"{path}.peers"),
                              p.num(d, "inbox_bits", DEFAULT_DPC_INBOX_BITS, path),
                              p.radio(d.get("radio"), f"{path}.radio")[0]))

    c = p.obj(data.get("cdc"), "cdc")
    p.keys(c, ("backhaul_delay_s", "report_window_s"), "cdc")
    cdc = CdcConfig(p.num(c, "backhaul_delay_s", DEFAULT_BACKHAUL_DELAY_S, "cdc"),
                    p.num(c, "report_window_s", DEFAULT_REPORT_WINDOW_S, "cdc"))

    dd = p.obj(data.get("dcc"), "dcc")
    p.keys(dd, ("rules",), "dcc")
    rules = DEFAULT_RULES
    if "rules" in dd:
        rules = tuple(_rule(p, r, f"dcc.rules[{i}]") for i, r in enumerate(p.array(dd, "rules", "dcc")))
        rules = tuple(r for r in rules if r is not None)

    hospitals = []
    for i, h in enumerate(p.array(data, "hospitals", "")):
        path = f"hospitals[{i}]"
        h = p.obj(h, path)
        p.keys(h, ("dpc",), path)
        if "dpc" not in h:
            raise ScenarioParseError(f"{path}.dpc: required")
        hospitals.append(HospitalConfig(p.node(h["dpc"], f"{path}.dpc")))

    prof, bypass = p.radio(data.get("radio", {}), "radio", allow_bypass=True)
    radio = RadioConfig(prof, bypass)

    workloads = _workloads(p, p.obj(data.get("workloads"), "workloads"))

    return ScenarioConfig(
        kiosks=tuple(kiosks), maps=tuple(maps), dpcs=tuple(dpcs), cdc=cdc, dcc=DccConfig(rules),
        hospitals=tuple(hospitals), radio=radio, workloads=workloads,
        gravity_threshold=p.num(data, "gravity_threshold", DEFAULT_GRAVITY_THRESHOLD, ""),
        seed=p.num(data, "seed", 0, "", integer=True),
        strict_counts=p.boolean(data, "strict_counts", True, ""),
        problems=tuple(p.problems))


def _rule(p: _Parser, r, path) -> Optional[Rule]:
    r = p.obj(r, path)
    p.keys(r, ("metric", "op", "value", "window_s", "action", "stat"), path)
    for k in ("metric", "op", "action"):
        if not isinstance(r.get(k), str):
            raise ScenarioParseError(f"{path}.{k}: expected a string")
    try:
        return Rule(r["metric"], r["op"], p.num(r, "value", _REQUIRED, path),
                    p.num(r, "window_s", DEFAULT_REPORT_WINDOW_S, path), r["action"],
                    r.get("stat", "mean"))
    except ValueError as e:
        p.problems.append((path, str(e)))
        return None


def _kind(p: _Parser, label, path) -> MessageKind:
    try:
        return MessageKind(label)
    except ValueError:
        raise ScenarioParseError(f"{path}: unknown message kind {label!r}") from None


def _workloads(p: _Parser, w: Dict[str, Any]) -> WorkloadSpec:
    path = "workloads"
    p.keys(w, ("sensor_fields", "manual_records", "commerce", "medical", "learning", "scripted",
               "arrival_window_s"), path)

    fields = []
    for i, f in enumerate(p.array(w, "sensor_fields", path)):
        fp = f"{path}.sensor_fields[{i}]"
        f = p.obj(f, fp)
        p.keys(f, ("kiosk", "metric", "base", "amplitude", "noise_std", "sampling_period_s",
                   "size_bits", "gravity_ramp", "start_s", "max_samples", "diurnal_period_s"), fp)
        if "kiosk" not in f:
            raise ScenarioParseError(f"{fp}.kiosk: required")
        ramp = f.get("gravity_ramp", [[8.0, 0.0], [10.0, 1.0]])
        if (not isinstance(ramp, list) or not ramp
                or not all(isinstance(k, list) and len(k) == 2 for k in ramp)):
            raise ScenarioParseError(f"{fp}.gravity_ramp: expected a list of [value, gravity] pairs")
        try:
            fields.append(SensorFieldModel(
                kiosk=p.node(f["kiosk"], f"{fp}.kiosk"),
                metric=str(f.get("metric", "water_level_m")),
                base=p.num(f, "base", 7.0, fp),
                amplitude=p.num(f, "amplitude", 0.0, fp),
                noise_std=p.num(f, "noise_std", 0.0, fp),
                sampling_period_s=p.num(f, "sampling_period_s", 900.0, fp),
                size_bits=p.num(f, "size_bits", 80_000, fp, integer=True),
                gravity_ramp=tuple((float(a), float(b)) for a, b in ramp),
                start_s=p.num(f, "start_s", 0.0, fp),
                max_samples=p.num(f, "max_samples", None, fp, integer=True),
                diurnal_period_s=p.num(f, "diurnal_period_s", 86_400.0, fp)))
        except ValueError as e:
            p.problems.append((fp, str(e)))

    def poisson(key, size, gravity, metric):
        pp = f"{path}.{key}"
        d = p.obj(w.get(key), pp)
        p.keys(d, ("rate_per_hour", "size_bits", "gravity", "metric", "value_mean", "kiosks"), pp)
        try:
            return PoissonSpec(
                rate_per_hour=p.num(d, "rate_per_hour", 0.0, pp),
                size_bits=p.num(d, "size_bits", size, pp, integer=True),
                gravity=p.num(d, "gravity", gravity, pp),
                metric=d.get("metric", metric),
                value_mean=p.num(d, "value_mean", 0.0, pp),
                kiosks=p.nodes(d["kiosks"], f"{pp}.kiosks") if d.get("kiosks") is not None else None)
        except ValueError as e:
            p.problems.append((pp, str(e)))
            return PoissonSpec(size_bits=size, gravity=gravity, metric=metric)

    manual = poisson("manual_records", 40_000, 0.1, "disease_reports")
    commerce = poisson("commerce", 40_000, 0.0, None)

    mp = f"{path}.medical"
    md = p.obj(w.get("medical"), mp)
    p.keys(md, ("rate_per_hour", "size_bits", "response_size_bits", "gravity", "severe_fraction",
                "severe_gravity", "service_time_s", "hospital", "kiosks"), mp)
    try:
        medical = MedicalSpec(
            rate_per_hour=p.num(md, "rate_per_hour", 0.0, mp),
            size_bits=p.num(md, "size_bits", 200_000, mp, integer=True),
            response_size_bits=p.num(md, "response_size_bits", 200_000, mp, integer=True),
            gravity=p.num(md, "gravity", 0.3, mp),
            severe_fraction=p.num(md, "severe_fraction", 0.0, mp),
            severe_gravity=p.num(md, "severe_gravity", 0.9, mp),
            service_time_s=p.num(md, "service_time_s", 600.0, mp),
            hospital=p.node(md["hospital"], f"{mp}.hospital") if md.get("hospital") else None,
            kiosks=p.nodes(md["kiosks"], f"{mp}.kiosks") if md.get("kiosks") is not None else None)
    except ValueError as e:
        p.problems.append((mp, str(e)))
        medical = MedicalSpec()

    learning = []
    for i, lp in enumerate(p.array(w, "learning", path)):
        lpath = f"{path}.learning[{i}]"
        lp = p.obj(lp, lpath)
        p.keys(lp, ("dpc", "targets", "at_s", "size_bits"), lpath)
        if "dpc" not in lp:
            raise ScenarioParseError(f"{lpath}.dpc: required")
        at = lp.get("at_s", [0.0])
        at = [at] if isinstance(at, (int, float)) and not isinstance(at, bool) else at
        if not isinstance(at, list) or not all(isinstance(x, (int, float)) for x in at):
            raise ScenarioParseError(f"{lpath}.at_s: expected a number or list of numbers")
        learning.append(LearningPush(p.node(lp["dpc"], f"{lpath}.dpc"),
                                     p.nodes(lp.get("targets", []), f"{lpath}.targets"),
                                     tuple(float(x) for x in at),
                                     p.num(lp, "size_bits", 400_000_000, lpath, integer=True)))

    scripted = []
    for i, s in enumerate(p.array(w, "scripted", path)):
        spath = f"{path}.scripted[{i}]"
        s = p.obj(s, spath)
        p.keys(s, ("at_s", "kind", "kiosk", "gravity", "payload_value", "metric", "size_bits",
                   "hospital"), spath)
        for k in ("kind", "kiosk"):
            if k not in s:
                raise ScenarioParseError(f"{spath}.{k}: required")
        kind = _kind(p, s["kind"], f"{spath}.kind")
        if kind not in SCRIPTABLE_KINDS:
            p.problems.append((f"{spath}.kind", f"{kind.value} cannot be generated by a workload"))
            continue
        scripted.append(ScriptedMessage(
            at_s=p.num(s, "at_s", 0.0, spath), kind=kind,
            kiosk=p.node(s["kiosk"], f"{spath}.kiosk"),
            gravity=p.num(s, "gravity", None, spath),
            payload_value=p.num(s, "payload_value", None, spath),
            metric=s.get("metric"),
            size_bits=p.num(s, "size_bits", None, spath, integer=True),
            hospital=p.node(s["hospital"], f"{spath}.hospital") if s.get("hospital") else None))

    return WorkloadSpec(tuple(fields), manual, commerce, medical, tuple(learning), tuple(scripted),
                        p.num(w, "arrival_window_s", 3600.0, path))


def load_scenario(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioParseError(f"cannot read {path}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path}: invalid JSON: {e}") from None
    return parse_scenario(data)


# --------------------------------------------------------------------------
# validation

def validate_scenario(cfg: ScenarioConfig) -> List[Finding]:
    """Findings for ``cfg``; empty iff the scenario is runnable.

    The simulator refuses to run on any Error finding.
    """
    out: List[Finding] = []

    def err(code, msg):
        out.append(Finding(Severity.ERROR, code, msg))

    def warn(code, msg):
        out.append(Finding(Severity.WARNING, code, msg))

    for path, msg in cfg.problems:
        err("unknown-key" if msg == "unknown key" else "invalid-value", f"{path}: {msg}")

    n, i, m = len(cfg.kiosks), len(cfg.maps), len(cfg.dpcs)
    for count, what in ((n, "kiosk"), (i, "MAP"), (m, "DPC")):
        if count < 1:
            err("empty", f"scenario needs at least one {what}")
    report = err if cfg.strict_counts else warn
    if m > n:
        report("count-constraint", f"m <= n violated: {m} DPCs but only {n} kiosks")
    if n > i:
        report("count-constraint", f"i >= n violated: {i} MAPs for {n} kiosks")

    kiosks, dpcs = set(cfg.kiosk_ids()), set(cfg.dpc_ids())
    hospitals = set(cfg.hospital_ids())

    def resolve(node: NodeId, where: str, allowed: set) -> bool:
        if node not in allowed:
            err("dangling-reference", f"{where}: dangling reference to {node}")
            return False
        return True

    if not 0.0 <= cfg.gravity_threshold <= 1.0:
        err("invalid-value", f"gravity_threshold {cfg.gravity_threshold} outside [0, 1]")

    for idx, k in enumerate(cfg.kiosks, 1):
        if not k.buffer_bits > 0:
            err("invalid-value", f"kiosk:{idx} buffer_bits must be positive")

    positions = cfg.positions()
    for idx, mc in enumerate(cfg.maps, 1):
        where = f"map:{idx}"
        if not mc.route.waypoints:
            err("empty", f"{where} route has no waypoints")
            continue
        if not mc.speed_kmh > 0:
            err("invalid-value", f"{where} speed_kmh must be positive")
        if not mc.buffer_bits > 0:
            err("invalid-value", f"{where} buffer_bits must be positive")
        ok = True
        for w in mc.route.waypoints:
            if w.node.role not in (Role.KIOSK, Role.DPC):
                err("invalid-waypoint", f"{where} route waypoint {w.node} is not a kiosk or DPC")
                ok = False
            elif not resolve(w.node, f"{where} route", kiosks | dpcs):
                ok = False
            if w.dwell_s < 0:
                err("invalid-value", f"{where} waypoint {w.node} has negative dwell")
                ok = False
        if ok and not any(w.node.role is Role.DPC for w in mc.route.waypoints):
            warn("route-no-dpc", f"{where} route never visits a DPC; its data is never delivered")
        if ok and mc.speed_kmh > 0:
            try:
                build_segments(mc.route, positions, mc.speed_kmh)
            except ValueError as e:
                err("invalid-route", f"{where}: {e}")

    for idx, dc in enumerate(cfg.dpcs, 1):
        where = f"dpc:{idx}"
        prm = dc.params
        if not 0.0 <= prm.confidence_threshold <= 1.0:
            err("invalid-value", f"{where} confidence_threshold outside [0, 1]")
        if prm.retry_limit < 0:
            err("invalid-value", f"{where} retry_limit must be non-negative")
        for name in ("tolerance", "service_time_s", "peer_sync_delay_s", "peer_window_s"):
            if getattr(prm, name) < 0:
                err("invalid-value", f"{where} {name} must be non-negative")
        if not dc.inbox_bits > 0:
            err("invalid-value", f"{where} inbox_bits must be positive")
        for peer in dc.peers:
            if resolve(peer, f"{where} peers", dpcs) and peer == NodeId(Role.DPC, idx):
                err("invalid-value", f"{where} lists itself as a peer")

    for idx, h in enumerate(cfg.hospitals, 1):
        resolve(h.dpc, f"hospital:{idx}", dpcs)

    if cfg.cdc.backhaul_delay_s < 0 or cfg.cdc.report_window_s <= 0:
        err("invalid-value", "cdc delays must be non-negative and the report window positive")
    if cfg.radio.bypass_latency_s < 0:
        err("invalid-value", "radio.bypass_latency_s must be non-negative")

    w = cfg.workloads
    if w.arrival_window_s <= 0:
        err("invalid-value", "workloads.arrival_window_s must be positive")
    for j, f in enumerate(w.sensor_fields):
        resolve(f.kiosk, f"workloads.sensor_fields[{j}]", kiosks)
        ys = [g for _, g in f.gravity_ramp]
        xs = [x for x, _ in f.gravity_ramp]
        if any(not 0.0 <= g <= 1.0 for g in ys):
            err("invalid-value", f"workloads.sensor_fields[{j}] gravity ramp leaves [0, 1]")
        if any(b < a for a, b in zip(xs, xs[1:])):
            err("invalid-value", f"workloads.sensor_fields[{j}] gravity ramp knots not sorted")
    for name, spec in (("manual_records", w.manual_records), ("commerce", w.commerce)):
        if not 0.0 <= spec.gravity <= 1.0:
            err("invalid-value", f"workloads.{name}.gravity outside [0, 1]")
        if spec.value_mean < 0:
            err("invalid-value", f"workloads.{name}.value_mean must be non-negative")
        for k in spec.kiosks or ():
            resolve(k, f"workloads.{name}.kiosks", kiosks)
    med = w.medical
    for g in (med.gravity, med.severe_gravity, med.severe_fraction):
        if not 0.0 <= g <= 1.0:
            err("invalid-value", "workloads.medical gravities and severe_fraction must lie in [0, 1]")
            break
    if med.service_time_s < 0:
        err("invalid-value", "workloads.medical.service_time_s must be non-negative")
    for k in med.kiosks or ():
        resolve(k, "workloads.medical.kiosks", kiosks)
    needs_hospital = med.rate_per_hour > 0 or any(
        s.kind is MessageKind.MEDICAL_REQUEST for s in w.scripted)
    if med.hospital is not None:
        resolve(med.hospital, "workloads.medical.hospital", hospitals)
    elif needs_hospital and not hospitals:
        err("dangling-reference", "medical traffic configured but no hospital exists")
    for j, lp in enumerate(w.learning):
        resolve(lp.dpc, f"workloads.learning[{j}].dpc", dpcs)
        for t in lp.targets:
            resolve(t, f"workloads.learning[{j}].targets", kiosks)
        if lp.size_bits <= 0:
            err("invalid-value", f"workloads.learning[{j}].size_bits must be positive")
        if any(t < 0 for t in lp.at_s):
            err("invalid-value", f"workloads.learning[{j}].at_s must be non-negative")
    for j, s in enumerate(w.scripted):
        where = f"workloads.scripted[{j}]"
        resolve(s.kiosk, where, kiosks)
        if s.hospital is not None:
            resolve(s.hospital, where, hospitals)
        if s.at_s < 0:
            err("invalid-value", f"{where}.at_s must be non-negative")
        if s.gravity is not None and not 0.0 <= s.gravity <= 1.0:
            err("invalid-value", f"{where}.gravity outside [0, 1]")
        if s.size_bits is not None and s.size_bits <= 0:
            err("invalid-value", f"{where}.size_bits must be positive")
    return out


def has_errors(findings: Sequence[Finding]) -> bool:
    return any(f.severity is Severity.ERROR for f in findings)
