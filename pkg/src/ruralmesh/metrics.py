"""Run reports: per-kind latency and delivery, conservation check, JSON/text/CSV output."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .model import ConservationError, MessageKind

SCHEMA_VERSION = 1
NA = "n/a"


def latency_stats(values: Sequence[float]):
    """min/mean/p95/max of ``values``; "n/a" for an empty sample.

    p95 uses linear interpolation between order statistics.
    """
    if len(values) == 0:
        return NA
    arr = np.asarray(values, dtype=float)
    return {"count": int(arr.size), "min": float(arr.min()), "mean": float(arr.mean()),
            "p95": float(np.percentile(arr, 95)), "max": float(arr.max())}


def ratio(num: int, den: int):
    return NA if den == 0 else num / den


@dataclass
class RunReport:
    until_s: float
    seed: int
    kinds: Dict[str, Dict[str, Any]]
    cdc_latency_s: Any
    peak_buffer_bits: Dict[str, int]
    emergency_alerts: List[Dict[str, Any]]
    emergency_latency_s: Any
    dpc_retry_histogram: Dict[str, int]
    flagged_records: int
    medical_round_trips: Dict[str, Any]
    decisions: List[Dict[str, Any]]
    dcc_evaluations: int
    events_executed: int
    events: Optional[List[Dict[str, Any]]] = None
    samples: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        d = {
            "schema_version": SCHEMA_VERSION,
            "until_s": self.until_s,
            "seed": self.seed,
            "kinds": self.kinds,
            "cdc_latency_s": self.cdc_latency_s,
            "peak_buffer_bits": self.peak_buffer_bits,
            "emergency_alerts": self.emergency_alerts,
            "emergency_latency_s": self.emergency_latency_s,
            "dpc_retry_histogram": self.dpc_retry_histogram,
            "flagged_records": self.flagged_records,
            "medical_round_trips": self.medical_round_trips,
            "decisions": self.decisions,
            "dcc_evaluations": self.dcc_evaluations,
            "events_executed": self.events_executed,
        }
        if self.samples:
            d["samples"] = self.samples
        if self.events is not None:
            d["events"] = self.events
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str) + "\n"

    def kind(self, kind: MessageKind) -> Dict[str, Any]:
        return self.kinds[kind.value]


def collect_metrics(sim, include_events: Optional[bool] = None) -> RunReport:
    """Summarise a finished Simulation; raises ConservationError on a custody leak."""
    in_flight = {k: 0 for k in MessageKind}
    for mid in sim.custody:
        in_flight[sim.messages[mid].kind] += 1

    latencies: Dict[MessageKind, List[float]] = {k: [] for k in MessageKind}
    for mid, t in sim.delivered_at.items():
        msg = sim.messages[mid]
        latencies[msg.kind].append(t - msg.created_at)

    kinds = {}
    for k in MessageKind:
        att, dlv, blk, fly = sim.attempted[k], sim.delivered[k], sim.blocked[k], in_flight[k]
        if att != dlv + fly + blk:
            raise ConservationError(
                f"{k.value}: attempted {att} != delivered {dlv} + in-flight {fly} + blocked {blk}")
        kinds[k.value] = {"attempted": att, "delivered": dlv, "in_flight": fly, "blocked": blk,
                          "delivery_ratio": ratio(dlv, att),
                          "latency_s": latency_stats(latencies[k])}

    cdc_lat = [t - sim.messages[mid].created_at for mid, t in sim.cdc_arrival.items()]

    peaks = {}
    for k, b in sim.kiosks.items():
        peaks[str(k)] = b.peak
    for m, f in sim.ferries.items():
        peaks[str(m)] = f.state.buffer.peak
    for d, s in sim.dpcs.items():
        peaks[str(d)] = s.inbox.peak
        peaks[f"{d}/outbound"] = s.outbound.peak

    alerts = []
    for src in sorted(sim.alerts):
        a = sim.alerts[src]
        msg = sim.messages[src]
        alerts.append({
            "message_id": src, "kind": msg.kind.value, "gravity": msg.gravity,
            "message_created_at_s": msg.created_at, "raised_at_node": str(a.raised_at_node),
            "raised_at_s": a.raised_at, "delivered_at_s": a.delivered_at,
            "cdc_arrival_s": sim.cdc_arrival.get(src)})
    alert_lat = [a["delivered_at_s"] - a["message_created_at_s"] for a in alerts
                 if a["delivered_at_s"] is not None]

    rts = sim.round_trips.values()
    done = [rt["completed_at"] - rt["created_at"] for rt in rts if "completed_at" in rt]
    medical = {"started": len(sim.round_trips), "completed": len(done),
               "incomplete": len(sim.round_trips) - len(done), "latency_s": latency_stats(done)}

    decisions = [{"t": d.issued_at, "area": str(d.area), "action": d.label,
                  "triggering": list(d.triggering)} for d in sim.decisions]

    keep = sim.keep_log if include_events is None else include_events
    return RunReport(
        until_s=sim.until, seed=sim.seed, kinds=kinds, cdc_latency_s=latency_stats(cdc_lat),
        peak_buffer_bits=dict(sorted(peaks.items())), emergency_alerts=alerts,
        emergency_latency_s=latency_stats(alert_lat),
        dpc_retry_histogram={str(r): n for r, n in sorted(sim.retry_histogram.items())},
        flagged_records=sim.flagged, medical_round_trips=medical, decisions=decisions,
        dcc_evaluations=sim.dcc_evaluations, events_executed=sim.events_executed,
        events=list(sim.event_log) if keep else None, samples=list(sim.samples))


# --------------------------------------------------------------------------
# rendering for the ``report`` subcommand

def _fmt_num(x) -> str:
    if x is None or x == NA:
        return NA
    if isinstance(x, float):
        return f"{x:.3f}"
    return str(x)


def format_text(report: Dict[str, Any]) -> str:
    lines = [f"run until {report['until_s']:.0f} s, seed {report['seed']}, "
             f"{report['events_executed']} events"]
    lines.append(f"{'kind':<18}{'attempted':>10}{'delivered':>10}{'in-flight':>10}"
                 f"{'blocked':>9}{'ratio':>8}{'mean lat s':>12}{'p95 lat s':>12}")
    for kind, row in report["kinds"].items():
        lat = row["latency_s"]
        mean = lat["mean"] if isinstance(lat, dict) else NA
        p95 = lat["p95"] if isinstance(lat, dict) else NA
        ratio_ = row["delivery_ratio"]
        lines.append(f"{kind:<18}{row['attempted']:>10}{row['delivered']:>10}"
                     f"{row['in_flight']:>10}{row['blocked']:>9}"
                     f"{(_fmt_num(ratio_) if ratio_ == NA else f'{ratio_:.3f}'):>8}"
                     f"{_fmt_num(mean):>12}{_fmt_num(p95):>12}")
    lines.append(f"emergency alerts: {len(report['emergency_alerts'])}")
    rt = report["medical_round_trips"]
    lines.append(f"medical round trips: {rt['completed']} completed, {rt['incomplete']} incomplete")
    lines.append(f"flagged DPC records: {report['flagged_records']}")
    lines.append(f"decisions: {len(report['decisions'])} "
                 f"(of {report['dcc_evaluations']} DCC evaluations)")
    return "\n".join(lines) + "\n"


def format_csv(report: Dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "attempted", "delivered", "in_flight", "blocked", "delivery_ratio",
                "latency_min_s", "latency_mean_s", "latency_p95_s", "latency_max_s"])
    for kind, row in report["kinds"].items():
        lat = row["latency_s"]
        stats = [lat[k] for k in ("min", "mean", "p95", "max")] if isinstance(lat, dict) else [NA] * 4
        w.writerow([kind, row["attempted"], row["delivered"], row["in_flight"], row["blocked"],
                    row["delivery_ratio"], *stats])
    return buf.getvalue()
