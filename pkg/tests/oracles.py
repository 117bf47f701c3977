"""Independent reference computations the tests compare the package against.

Nothing here imports ruralmesh; each oracle restates the arithmetic from
first principles so a shared bug cannot hide in both places.
"""

import math
from fractions import Fraction


def fair_share_bps(nominal_bps, channels, efficiency, sessions):
    """Per-session goodput when ``sessions`` share ``channels`` equally."""
    total = Fraction(efficiency) * Fraction(nominal_bps) * min(channels, sessions)
    return float(total / sessions)


def chord_crossing(offset_km, range_km, speed_kmh, closest_at_s):
    """Entry and exit times for a straight pass at perpendicular distance ``offset_km``."""
    half = math.sqrt(range_km ** 2 - offset_km ** 2)
    dt = half / speed_kmh * 3600.0
    return closest_at_s - dt, closest_at_s + dt


def agreement_fraction(value, peers, rho):
    hits = 0
    for p in peers:
        if abs(p - value) <= rho * abs(value):
            hits += 1
    return hits / len(peers) if peers else 1.0


def ls_slope(xs, ys):
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxx = sum(x * x for x in xs)
    sxy = sum(x * y for x, y in zip(xs, ys))
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)


def linear_ramp(x, x0, y0, x1, y1):
    if x <= x0:
        return y0
    if x >= x1:
        return y1
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def tiny_scenario_trace(distance_km=10.0, speed_kmh=20.0, dwell_s=600.0, range_km=0.1,
                        rate_bps=5.5e6, size_bits=80_000, service_s=1.0, backhaul_s=60.0):
    """Hand trace of the one-kiosk, one-ferry, one-DPC loop starting at the DPC.

    The ferry dwells at the DPC, drives to the kiosk, dwells, drives back.
    Contact with a fixed site starts when the ferry is ``range_km`` short of it.
    """
    leg = distance_km / speed_kmh * 3600.0
    approach = (distance_km - range_km) / speed_kmh * 3600.0
    kiosk_contact = dwell_s + approach
    tx = size_bits / rate_bps
    kiosk_custody = kiosk_contact + tx
    dpc_contact = dwell_s + leg + dwell_s + approach
    assert dpc_contact > kiosk_custody
    dpc_custody = dpc_contact + tx
    delivered = dpc_custody + service_s
    return {"kiosk_contact": kiosk_contact, "kiosk_custody": kiosk_custody,
            "dpc_contact": dpc_contact, "dpc_custody": dpc_custody,
            "delivered": delivered, "cdc_arrival": delivered + backhaul_s}


def percentile_linear(values, q):
    """Linear-interpolation percentile between order statistics."""
    xs = sorted(values)
    pos = (len(xs) - 1) * q / 100.0
    lo = math.floor(pos)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - lo)
