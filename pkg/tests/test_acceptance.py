"""Acceptance gate: one test per primary criterion, each reporting PASS/FAIL.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict table is
printed in the terminal summary.
"""

import json
import subprocess
import sys

import pytest

from conftest import FIXTURES, base_doc, record_criterion
from oracles import tiny_scenario_trace
from randomized import random_scenario
from ruralmesh import default_scenario_path, load_default_scenario
from ruralmesh.engine import Simulation
from ruralmesh.model import MessageKind, SimulationError
from ruralmesh.processing import SCORED_KINDS, DpcStatus, ScriptedPeerSource
from ruralmesh.radio import LinkProfile, RadioStandard, effective_rate
from ruralmesh.scenario import (ScenarioError, Severity, has_errors, load_scenario,
                                parse_scenario, validate_scenario)

HOURS = 3600.0


def verdict(number, title, checks):
    """Record and assert a dict of named boolean checks."""
    failed = [name for name, ok in checks.items() if not ok]
    record_criterion(number, title, not failed, "failed: " + ", ".join(failed) if failed else "")
    assert not failed, failed


def test_1_radio_constants():
    expected = {RadioStandard.DOT11B: (11e6, 3), RadioStandard.DOT11G: (54e6, 3),
                RadioStandard.DOT11A: (54e6, 12)}
    checks = {}
    for std, (nominal, channels) in expected.items():
        p = LinkProfile(std, efficiency=1.0)
        checks[f"{std.label} single-session rate"] = effective_rate(p, 1) == nominal
        # channel count = largest k with no per-session slowdown
        flat = max(k for k in range(1, 64) if effective_rate(p, k) == nominal)
        checks[f"{std.label} channels"] = flat == channels
        checks[f"{std.label} aggregate cap"] = channels * effective_rate(p, channels) == \
            nominal * channels
    verdict(1, "radio constants 11/54/54 Mbps and 3/3/12 channels", checks)


def test_2_contention_claim():
    agg = {s: 6 * effective_rate(LinkProfile(s, efficiency=1.0), 6) for s in RadioStandard}
    verdict(2, "802.11a aggregate beats b and g at 6 sessions", {
        "a > b": agg[RadioStandard.DOT11A] > agg[RadioStandard.DOT11B],
        "a > g": agg[RadioStandard.DOT11A] > agg[RadioStandard.DOT11G],
    })


def test_3_tiny_scenario():
    trace = json.loads((FIXTURES / "tiny_trace.json").read_text())
    sim = Simulation(load_scenario(FIXTURES / "tiny_scenario.json"), 3 * HOURS,
                     check_invariants=True)
    sim.run()
    got = sim.delivered_at.get(1)
    oracle = tiny_scenario_trace()["delivered"]
    verdict(3, "tiny scenario delivery time within 1e-6 s of the hand trace", {
        "delivered": got is not None,
        "matches committed fixture": got is not None and abs(got - trace["delivered_at_s"]) <= 1e-6,
        "matches oracle": got is not None and abs(got - oracle) <= 1e-6,
    })


def test_4_custody_conservation():
    violations = []
    runs = 0
    for seed in range(200):
        doc = random_scenario(seed)
        assert len(doc["kiosks"]) <= 5 and len(doc["maps"]) <= 3 and len(doc["dpcs"]) <= 2
        cfg = parse_scenario(doc)
        if has_errors(validate_scenario(cfg)):
            violations.append((seed, "invalid scenario"))
            continue
        try:
            report = Simulation(cfg, 48 * HOURS, check_invariants=True, event_log=False).run()
        except SimulationError as e:
            violations.append((seed, str(e)))
            continue
        runs += 1
        for kind, row in report.kinds.items():
            if row["attempted"] != row["delivered"] + row["in_flight"] + row["blocked"]:
                violations.append((seed, kind))
    verdict(4, f"custody conservation over {runs} random 48 h scenarios", {
        "200 scenarios ran": runs == 200,
        "zero violations": not violations,
    })


def test_5_resume_correctness():
    doc = base_doc()
    doc["maps"][0]["route"] = {"waypoints": [{"node": "dpc:1", "dwell_s": 30},
                                             {"node": "kiosk:1", "dwell_s": 30}],
                               "cyclic": True, "speed_kmh": 30}
    doc["workloads"] = {"learning": [{"dpc": "dpc:1", "targets": ["kiosk:1"], "at_s": 0,
                                      "size_bits": 400_000_000}]}
    sim = Simulation(parse_scenario(doc), 24 * HOURS, check_invariants=True)
    sim.run()
    mid = next(m.id for m in sim.messages.values() if m.kind is MessageKind.LEARNING_CONTENT)
    legs = {}
    for t in sim.transfer_log:
        if t["message"] == mid:
            legs.setdefault((str(t["from"]), str(t["to"])), []).append(t)
    up, down = legs.get(("dpc:1", "map:1"), []), legs.get(("map:1", "kiosk:1"), [])
    sent = lambda ls: sum(t["end_bits"] - t["start_bits"] for t in ls)  # noqa: E731
    contiguous = lambda ls: all(b["start_bits"] == a["end_bits"] for a, b in zip(ls, ls[1:]))  # noqa: E731
    verdict(5, "400 Mbit push resumes across contacts with exact bit total", {
        "spans >= 2 contacts": len(up) >= 2 and len(down) >= 2,
        "uplink bits == size": sent(up) == 400_000_000,
        "downlink bits == size": sent(down) == 400_000_000,
        "no restart": contiguous(up) and contiguous(down),
        "delivered once": mid in sim.delivered_at,
    })


def test_6_pipeline_totality_and_retry_bound():
    cfg = load_default_scenario()
    until = 48 * HOURS
    sim = Simulation(cfg, until, peer_source=ScriptedPeerSource.disagreeing(),
                     check_invariants=True, event_log=False)
    sim.run()
    scored = finished = 0
    bad_flag, over_limit, stuck, unforwarded = [], [], [], []
    for d in sim.dpcs.values():
        R = d.params.retry_limit
        drain = R * (d.params.peer_sync_delay_s + d.params.service_time_s) + 600
        for rec in d.records.values():
            if rec.retries > R:
                over_limit.append(rec.record_id)
            if rec.message.kind not in SCORED_KINDS or rec.message.payload_value is None:
                continue
            scored += 1
            if rec.status is DpcStatus.FORWARDED:
                finished += 1
                if not (rec.flagged and rec.retries == R):
                    bad_flag.append(rec.record_id)
                if rec.record_id not in sim.cdc_arrival and rec.finished_at + 60 < until:
                    unforwarded.append(rec.record_id)
            elif rec.arrived_at < until - drain:
                stuck.append(rec.record_id)
    verdict(6, f"{finished}/{scored} scored records flagged after exactly R retries and forwarded", {
        "records exist": finished > 0,
        "flagged after exactly R": not bad_flag,
        "never above R": not over_limit,
        "none stuck": not stuck,
        "forwarded to CDC": not unforwarded,
    })


def test_7_emergency_bypass():
    sim = Simulation(load_default_scenario(), 48 * HOURS, check_invariants=True)
    report = sim.run()
    grave = [m for m in sim.messages.values()
             if m.kind is not MessageKind.EMERGENCY_ALERT and m.gravity == 0.9]
    alerts = report.emergency_alerts
    ok_msg = len(grave) == 1
    a = alerts[0] if len(alerts) == 1 else None
    custody = [str(n) for n, _ in grave[0].hops] if ok_msg else []
    verdict(7, "gravity-0.9 alert beats its CDC arrival; exactly one alert", {
        "one grave message": ok_msg,
        "exactly one alert": len(alerts) == 1,
        "alert for that message": a is not None and ok_msg and a["message_id"] == grave[0].id,
        "several custody points": sum(n.startswith(("map", "dpc")) for n in custody) >= 2,
        "alert strictly before CDC": a is not None and a["cdc_arrival_s"] is not None
        and a["delivered_at_s"] < a["cdc_arrival_s"],
    })


def test_8_determinism(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"report{i}.json"
        subprocess.run([sys.executable, "-m", "ruralmesh", "run", str(default_scenario_path()),
                        "--until-hours", "48", "--seed", "7", "--out", str(out), "--event-log"],
                       check=True)
        outs.append(out.read_bytes())
    verdict(8, "two CLI runs give byte-identical report JSON with event logs", {
        "has event log": b'"events"' in outs[0],
        "identical bytes": outs[0] == outs[1],
    })


@pytest.mark.parametrize("n,i,m,needle", [(3, 2, 2, "i >= n"), (2, 3, 3, "m <= n")])
def test_9_count_constraint(n, i, m, needle):
    doc = base_doc(
        kiosks=[{"x_km": float(k), "y_km": 0.0} for k in range(n)],
        dpcs=[{"x_km": float(k), "y_km": 4.0} for k in range(m)],
        maps=[{"route": {"waypoints": [{"node": "kiosk:1"}, {"node": "dpc:1"}]}}] * i,
        strict_counts=True)
    cfg = parse_scenario(doc)
    findings = validate_scenario(cfg)
    hit = [f for f in findings if f.code == "count-constraint" and needle in f.message]
    try:
        Simulation(cfg, HOURS)
        refused = False
    except ScenarioError:
        refused = True
    verdict(9, f"strict mode rejects n={n}, i={i}, m={m} with '{needle}'", {
        "specific finding": len(hit) == 1 and hit[0].severity is Severity.ERROR,
        "run refused": refused,
    })
