import math

import pytest
from hypothesis import given, strategies as st

from conftest import base_doc
from ruralmesh.model import (EMERGENCY_ALERT_BITS, GeoPoint, Message, MessageKind, NodeId, Role,
                             Severity, SimulationError, distance, kiosk)
from ruralmesh.scenario import (ScenarioParseError, has_errors, parse_scenario,
                                validate_scenario)

coords = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
points = st.builds(GeoPoint, coords, coords)


def test_distance_identity():
    assert distance(GeoPoint(0, 0), GeoPoint(0, 0)) == 0


def test_distance_345():
    assert distance(GeoPoint(0, 0), GeoPoint(3, 4)) == 5


def test_distance_offset_triangle():
    assert distance(GeoPoint(1, 1), GeoPoint(4, 5)) == pytest.approx(math.sqrt(9 + 16))


def test_geopoint_rejects_non_finite():
    with pytest.raises(ValueError):
        GeoPoint(float("nan"), 0)
    with pytest.raises(ValueError):
        GeoPoint(0, float("inf"))


@given(points, points)
def test_distance_symmetric_and_nonnegative(a, b):
    assert distance(a, b) == distance(b, a) >= 0
    assert (distance(a, b) == 0) == (a == b)


@given(points, points, points)
def test_distance_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


@pytest.mark.parametrize("text,expected", [
    ("kiosk:3", NodeId(Role.KIOSK, 3)),
    ("Kiosk 7", NodeId(Role.KIOSK, 7)),
    ("dpc", NodeId(Role.DPC, 1)),
    ("hospital:2", NodeId(Role.HOSPITAL, 2)),
])
def test_node_parse(text, expected):
    assert NodeId.parse(text) == expected


@pytest.mark.parametrize("text", ["", "kiosk:x", "ship:1", "kiosk:0", "kiosk:"])
def test_node_parse_rejects(text):
    with pytest.raises(ValueError):
        NodeId.parse(text)


def test_node_roundtrip_and_order():
    assert str(kiosk(4)) == "kiosk:4"
    assert sorted([NodeId(Role.KIOSK, 10), NodeId(Role.DPC, 2), kiosk(2)]) == [
        NodeId(Role.DPC, 2), kiosk(2), kiosk(10)]


def _msg(**kw):
    args = dict(id=1, kind=MessageKind.SENSOR_BATCH, size_bits=10, origin=kiosk(1),
                final_role=Role.DPC, created_at=5.0)
    args.update(kw)
    return Message(**args)


def test_message_first_hop_is_origin():
    m = _msg()
    assert m.hops == [(kiosk(1), 5.0)]


@pytest.mark.parametrize("kw", [{"gravity": 1.01}, {"gravity": -0.1}, {"size_bits": 0}])
def test_message_rejects_bad_fields(kw):
    with pytest.raises(ValueError):
        _msg(**kw)


def test_alert_size_is_fixed():
    with pytest.raises(ValueError):
        _msg(kind=MessageKind.EMERGENCY_ALERT, size_bits=100)
    assert _msg(kind=MessageKind.EMERGENCY_ALERT, size_bits=EMERGENCY_ALERT_BITS)


def test_hops_time_ordered():
    m = _msg()
    m.add_hop(NodeId(Role.MAP, 1), 5.0)
    with pytest.raises(SimulationError):
        m.add_hop(NodeId(Role.DPC, 1), 4.0)


def test_priority_key_orders_gravity_then_age():
    a, b, c = _msg(id=1, gravity=0.2), _msg(id=2, gravity=0.9), _msg(id=3, gravity=0.2,
                                                                      created_at=1.0)
    assert [m.id for m in sorted([a, b, c], key=lambda m: m.priority_key)] == [2, 3, 1]


# ---------------------------------------------------------------- validation

def _counts_doc(n, i, m, strict=True):
    kiosks = [{"x_km": float(k), "y_km": 0.0} for k in range(n)]
    dpcs = [{"x_km": float(d), "y_km": 5.0} for d in range(m)]
    maps = [{"route": {"waypoints": [{"node": "kiosk:1"}, {"node": "dpc:1"}]}} for _ in range(i)]
    return base_doc(kiosks=kiosks, dpcs=dpcs, maps=maps, strict_counts=strict)


def test_valid_counts():
    assert validate_scenario(parse_scenario(_counts_doc(3, 3, 2))) == []


def test_too_few_maps_strict():
    findings = validate_scenario(parse_scenario(_counts_doc(3, 2, 2)))
    assert len(findings) == 1
    f = findings[0]
    assert f.severity is Severity.ERROR and f.code == "count-constraint"
    assert "i >= n" in f.message


def test_too_many_dpcs_strict():
    findings = validate_scenario(parse_scenario(_counts_doc(2, 3, 3)))
    assert [(f.severity, f.code) for f in findings] == [(Severity.ERROR, "count-constraint")]
    assert "m <= n" in findings[0].message


def test_count_violation_is_warning_when_relaxed():
    findings = validate_scenario(parse_scenario(_counts_doc(3, 2, 4, strict=False)))
    assert {f.severity for f in findings} == {Severity.WARNING}
    assert not has_errors(findings)


def test_dangling_waypoint():
    doc = _counts_doc(3, 3, 2)
    doc["maps"][0]["route"]["waypoints"][0]["node"] = "Kiosk 7"
    findings = validate_scenario(parse_scenario(doc))
    assert [f.code for f in findings] == ["dangling-reference"]
    assert "dangling reference" in findings[0].message and "kiosk:7" in findings[0].message


def test_dangling_reference_is_error_even_relaxed():
    doc = _counts_doc(3, 3, 2, strict=False)
    doc["hospitals"] = [{"dpc": "dpc:9"}]
    assert has_errors(validate_scenario(parse_scenario(doc)))


def test_unknown_key_is_error():
    doc = base_doc()
    doc["colour"] = "blue"
    doc["kiosks"][0]["altitude"] = 3
    findings = validate_scenario(parse_scenario(doc))
    assert sorted(f.code for f in findings) == ["unknown-key", "unknown-key"]


def test_route_without_dpc_is_warning():
    doc = base_doc()
    doc["maps"][0]["route"]["waypoints"] = [{"node": "kiosk:1", "dwell_s": 10}]
    findings = validate_scenario(parse_scenario(doc))
    assert [(f.severity, f.code) for f in findings] == [(Severity.WARNING, "route-no-dpc")]


def test_thresholds_outside_unit_interval():
    doc = base_doc(gravity_threshold=1.5)
    doc["dpcs"][0]["confidence_threshold"] = -0.1
    codes = [f.code for f in validate_scenario(parse_scenario(doc))]
    assert codes == ["invalid-value", "invalid-value"]


def test_empty_scenario():
    doc = base_doc(kiosks=[], maps=[], dpcs=[])
    codes = {f.code for f in validate_scenario(parse_scenario(doc))}
    assert "empty" in codes


@pytest.mark.parametrize("doc", [[], {"kiosks": 3}, {"kiosks": [{"x_km": "far"}]},
                                 {"maps": [{"route": {"waypoints": [{"dwell_s": 1}]}}]}])
def test_malformed_documents_raise(doc):
    with pytest.raises(ScenarioParseError):
        parse_scenario(doc)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.booleans())
def test_validate_is_pure(n, i, m, strict):
    cfg = parse_scenario(_counts_doc(n, i, m, strict))
    assert validate_scenario(cfg) == validate_scenario(cfg)


@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5))
def test_strict_counts_error_iff_constraint_broken(n, i, m):
    findings = validate_scenario(parse_scenario(_counts_doc(n, i, m)))
    assert has_errors(findings) == (not (m <= n <= i))
