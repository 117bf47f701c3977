"""Random scenario documents for the conservation checks."""

import numpy as np


def random_scenario(seed: int) -> dict:
    """A small scenario drawn from ``seed``; count constraints relaxed."""
    rng = np.random.default_rng(seed)
    n_k = int(rng.integers(1, 6))
    n_m = int(rng.integers(1, 4))
    n_d = int(rng.integers(1, 3))
    pt = lambda: {"x_km": float(rng.uniform(0, 8)), "y_km": float(rng.uniform(0, 8))}  # noqa: E731
    kiosks = [{**pt(), "buffer_bits": int(rng.choice([150_000, 400_000, 1_000_000_000]))}
              for _ in range(n_k)]
    dpcs = [{**pt(), "peers": [f"dpc:{j + 1}" for j in range(n_d) if j != i],
             "retry_limit": int(rng.integers(0, 3)),
             "confidence_threshold": float(rng.uniform(0.3, 1.0))} for i in range(n_d)]
    standards = ["802.11b", "802.11g", "802.11a"]
    maps = []
    for _ in range(n_m):
        stops = [f"kiosk:{int(rng.integers(1, n_k + 1))}" for _ in range(int(rng.integers(1, 4)))]
        stops.insert(int(rng.integers(0, len(stops) + 1)), f"dpc:{int(rng.integers(1, n_d + 1))}")
        wps = [{"node": s, "dwell_s": float(rng.choice([0.0, 5.0, 120.0, 600.0]))} for s in stops]
        m = {"route": {"waypoints": wps, "cyclic": bool(rng.random() < 0.85),
                       "speed_kmh": float(rng.uniform(15, 60))},
             "buffer_bits": int(rng.choice([300_000, 5_000_000, 1_000_000_000]))}
        if rng.random() < 0.3:
            m["radio"] = {"standard": standards[int(rng.integers(0, 3))],
                          "range_km": float(rng.uniform(0.02, 0.3))}
        maps.append(m)
    hospitals = [{"dpc": "dpc:1"}] if rng.random() < 0.6 else []
    workloads = {
        "sensor_fields": [{"kiosk": f"kiosk:{i + 1}", "base": float(rng.uniform(6, 10)),
                           "amplitude": float(rng.uniform(0, 1)),
                           "noise_std": float(rng.uniform(0, 0.5)),
                           "sampling_period_s": float(rng.uniform(300, 3600))}
                          for i in range(n_k) if rng.random() < 0.7],
        "manual_records": {"rate_per_hour": float(rng.uniform(0, 2)), "value_mean": 1.0},
        "commerce": {"rate_per_hour": float(rng.uniform(0, 2))},
        "scripted": [{"at_s": float(rng.uniform(0, 40_000)), "kind": "CommerceOrder",
                      "kiosk": f"kiosk:{n_k}", "gravity": 0.95}],
        "arrival_window_s": float(rng.choice([900.0, 3600.0])),
    }
    if hospitals:
        workloads["medical"] = {"rate_per_hour": float(rng.uniform(0, 1)),
                                "severe_fraction": 0.3, "service_time_s": 300}
    if rng.random() < 0.3:
        workloads["learning"] = [{"dpc": f"dpc:{n_d}", "targets": ["kiosk:1"],
                                  "at_s": float(rng.uniform(0, 3600)),
                                  "size_bits": int(rng.choice([2_000_000, 400_000_000]))}]
    return {
        "kiosks": kiosks, "maps": maps, "dpcs": dpcs, "cdc": {}, "dcc": {},
        "hospitals": hospitals,
        "radio": {"standard": standards[int(rng.integers(0, 3))],
                  "efficiency": float(rng.uniform(0.2, 1.0))},
        "workloads": workloads, "gravity_threshold": float(rng.uniform(0.5, 1.0)),
        "seed": seed, "strict_counts": False,
    }
